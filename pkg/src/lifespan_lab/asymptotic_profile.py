"""Slow-time asymptotic profile equations and their blowup times.

Four model equations for the profile V(tau, sigma) with W = dV/dsigma
(case II writes G, Q for V, W):

    div_I :  W_tau + 2 V W_sigma + 2 W^2 = 0
    div_II:  Q_tau + G^2 Q_sigma + 2 G Q^2 = 0
    var_I :  W_tau + 2 V W_sigma + W^2 = 0
    var_II:  Q_tau + G^2 Q_sigma + G Q^2 = 0

with V(tau, sigma) = -int_sigma^M W and V(0, .) = F0.  The divergence forms
keep V (resp. G) constant along characteristics, so they are solved exactly.
All four are also solved by a first-order upwind finite-difference scheme
and by a Lagrangian characteristic-ODE scheme (labels s, state y with
W = F0'(s) y); the latter resolves gradient growth far beyond what the
Eulerian grid can.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp

from .errors import BlowupReached, InvalidArgument, StepSizeFailure
from .radiation_field import RadiationField

BLOWUP_MARGIN = 1e-3


class ModelVariant(str, enum.Enum):
    DIV_I = "div_I"
    DIV_II = "div_II"
    VAR_I = "var_I"
    VAR_II = "var_II"

    @property
    def is_case_II(self) -> bool:
        return self in (ModelVariant.DIV_II, ModelVariant.VAR_II)

    @property
    def source_factor(self) -> float:
        return 2.0 if self in (ModelVariant.DIV_I, ModelVariant.DIV_II) else 1.0


def _variant(v) -> ModelVariant:
    try:
        return ModelVariant(v)
    except ValueError:
        raise InvalidArgument(f"unknown model variant {v!r}") from None


# --- exact characteristics for the divergence forms -------------------------

@dataclass
class CharacteristicFan:
    rf: RadiationField
    variant: ModelVariant
    s_grid: np.ndarray
    F0_of_s: np.ndarray
    F0_prime_of_s: np.ndarray
    tau_star: float

    def speed_term(self, F):
        """sigma(tau, s) = s + speed_term(F0(s)) * tau."""
        return 2.0 * F if self.variant is ModelVariant.DIV_I else F * F

    def jacobian(self, tau: float, s=None):
        """d sigma / d s along the fan (at the fan's s-grid by default)."""
        if s is None:
            F, F1 = self.F0_of_s, self.F0_prime_of_s
        else:
            F, F1 = self.rf(s, 0), self.rf(s, 1)
        if self.variant is ModelVariant.DIV_I:
            return 1.0 + 2.0 * F1 * tau
        return 1.0 + 2.0 * F * F1 * tau


def _fan_grid(rf: RadiationField, focus: float, n: int = 4096, sigma_max: float | None = None) -> np.ndarray:
    lo = -(sigma_max if sigma_max is not None else -rf.sigma_grid[0])
    M = rf.M
    a, b = max(lo, focus - 1.0), min(M, focus + 1.0)
    half = n // 2
    inner = np.linspace(a, b, half)
    rest = n - half
    left_len, right_len = a - lo, M - b
    total = left_len + right_len
    nl = int(round(rest * left_len / total)) if total > 0 else 0
    # geometric spacing on the long left tail
    left = a - np.expm1(np.linspace(0.0, np.log1p(left_len), nl + 1))[1:][::-1] if nl else np.array([])
    right = np.linspace(b, M, rest - nl + 1)[1:] if rest - nl > 0 else np.array([])
    pts = np.concatenate([left, inner, right, [rf.rho0, rf.rho0_tilde]])
    pts = pts[np.isfinite(pts)]
    return np.unique(pts[(pts >= lo) & (pts <= M)])


def characteristic_fan(rf: RadiationField, variant="div_I", n_s: int = 4096) -> CharacteristicFan:
    variant = _variant(variant)
    if variant not in (ModelVariant.DIV_I, ModelVariant.DIV_II):
        raise InvalidArgument("exact characteristics exist only for div_I and div_II")
    focus = rf.rho0 if variant is ModelVariant.DIV_I else rf.rho0_tilde
    if rf.is_trivial:
        s = np.linspace(-10.0, rf.M, n_s)
    else:
        s = _fan_grid(rf, focus, n_s)
    return CharacteristicFan(rf, variant, s, rf(s, 0), rf(s, 1), profile_blowup_time(rf, variant))


def sigma_of(fan: CharacteristicFan, tau: float, s):
    """Position at slow time tau of the characteristic issued from s."""
    F = fan.rf(s, 0)
    return np.asarray(s) + fan.speed_term(F) * tau if np.ndim(s) else float(s + fan.speed_term(F) * tau)


def _check_tau(fan: CharacteristicFan, tau: float, margin: float):
    if tau < 0:
        raise InvalidArgument("tau must be nonnegative")
    if math.isfinite(fan.tau_star) and tau >= fan.tau_star * (1.0 - margin):
        raise BlowupReached(f"tau={tau} is within the blowup margin of tau*={fan.tau_star}")


def invert_characteristic(fan: CharacteristicFan, tau: float, sigma, margin: float = BLOWUP_MARGIN,
                          tol: float = 1e-12):
    """The unique s with sigma_of(fan, tau, s) = sigma, by vectorized bisection."""
    _check_tau(fan, tau, margin)
    sig = np.atleast_1d(np.asarray(sigma, dtype=float))
    if tau == 0.0 or fan.rf.is_trivial:
        return sig.copy() if np.ndim(sigma) else float(sig[0])
    Fmin = float(min(0.0, np.min(fan.F0_of_s)))
    Fmax = float(max(0.0, np.max(fan.F0_of_s)))
    shift_lo = fan.speed_term(Fmin) * tau if fan.variant is ModelVariant.DIV_I else 0.0
    shift_hi = max(fan.speed_term(Fmax), fan.speed_term(Fmin)) * tau
    lo = sig - shift_hi - 1e-9
    hi = sig - shift_lo + 1e-9
    out = sig.copy()
    active = sig < fan.rf.M  # beyond the support sigma = s
    lo, hi = lo[active], hi[active]
    target = sig[active]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        above = sigma_of(fan, tau, mid) > target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.max(hi - lo, initial=0.0) <= tol:
            break
    out[active] = 0.5 * (lo + hi)
    return out if np.ndim(sigma) else float(out[0])


def gradient_on_characteristic(fan: CharacteristicFan, tau: float, s):
    """W = F0'/(1 + 2F0' tau) (div_I) or Q = F0'/(1 + 2F0F0' tau) (div_II)."""
    F1 = fan.rf(s, 1)
    den = fan.jacobian(tau, s)
    if np.any(np.asarray(den) <= 0):
        raise BlowupReached("characteristic denominator is not positive")
    return F1 / den


def gradient_formula(variant, F0: float, F0p: float, tau: float) -> float:
    """Closed-form gradient along a characteristic for given F0(s), F0'(s)."""
    variant = _variant(variant)
    if variant is ModelVariant.DIV_I:
        den = 1.0 + 2.0 * F0p * tau
    elif variant is ModelVariant.DIV_II:
        den = 1.0 + 2.0 * F0 * F0p * tau
    else:
        raise InvalidArgument("closed form available for div_I and div_II only")
    if den <= 0:
        raise BlowupReached("characteristic denominator is not positive")
    return F0p / den


# --- solutions ---------------------------------------------------------------

@dataclass
class Blowup:
    tau_star: float
    sigma_star: float
    error_bar: float = 0.0


@dataclass
class ProfileSolution:
    variant: ModelVariant
    backend: str  # "characteristic", "finite_difference" or "lagrangian"
    V: Callable
    W: Callable
    blowup: Optional[Blowup]
    M: float
    history: dict = field(default_factory=dict)


def characteristic_solution(rf: RadiationField, variant="div_I", fan: CharacteristicFan | None = None,
                            margin: float = BLOWUP_MARGIN) -> ProfileSolution:
    fan = fan or characteristic_fan(rf, variant)

    def V(tau, sigma):
        s = invert_characteristic(fan, tau, sigma, margin)
        return rf(s, 0)

    def W(tau, sigma):
        s = invert_characteristic(fan, tau, sigma, margin)
        return rf(s, 1) / fan.jacobian(tau, s)

    blow = None
    if math.isfinite(fan.tau_star):
        rho = rf.rho0 if fan.variant is ModelVariant.DIV_I else rf.rho0_tilde
        blow = Blowup(fan.tau_star, float(sigma_of(fan, fan.tau_star, rho)))
    sol = ProfileSolution(fan.variant, "characteristic", V, W, blow, rf.M)
    sol.history["fan"] = fan
    return sol


def profile_derivatives(fan: CharacteristicFan, tau, sigma, margin: float = BLOWUP_MARGIN) -> dict:
    """V and its tau/sigma derivatives up to order two at (tau, sigma) for the
    divergence forms, from the exact characteristic representation.

    With s = s(tau, sigma), J = d sigma/ds, c(s) = d sigma/d tau:
        V_sigma = F0'/J,    V_tau = -c V_sigma,
    and second derivatives follow from d/dsigma = (1/J) d/ds.
    """
    rf = fan.rf
    s = np.asarray(invert_characteristic(fan, tau, np.asarray(sigma, dtype=float), margin))
    F, F1, F2 = rf(s, 0), rf(s, 1), rf(s, 2)
    if fan.variant is ModelVariant.DIV_I:
        c, c1 = 2.0 * F, 2.0 * F1
    else:
        c, c1 = F * F, 2.0 * F * F1
    J = 1.0 + c1 * tau
    J_s = (2.0 * F2 if fan.variant is ModelVariant.DIV_I else 2.0 * (F1 * F1 + F * F2)) * tau
    Vs = F1 / J
    Vss = (F2 / J - F1 * J_s / J ** 2) / J
    Vt = -c * Vs
    # d/dtau at fixed sigma: ds/dtau = -c/J
    Vs_t = -(c / J) * (F2 / J - F1 * J_s / J ** 2) - F1 * c1 / J ** 2
    Vts = -(c1 / J) * Vs - c * Vss
    Vtt = -(c1 * (-c / J)) * Vs - c * Vs_t
    return {"s": s, "V": F, "V_s": Vs, "V_ss": Vss, "V_t": Vt, "V_ts": Vts, "V_tt": Vtt, "J": J}


# --- blowup times --------------------------------------------------------------

def profile_blowup_time(rf: RadiationField, variant="div_I", **var_kwargs) -> float:
    variant = _variant(variant)
    if rf.is_trivial:
        return math.inf
    if variant is ModelVariant.DIV_I:
        return rf.tau0
    if variant is ModelVariant.DIV_II:
        return rf.nu0
    if variant is ModelVariant.VAR_I:
        return -1.0 / rf.min_F0_prime if rf.min_F0_prime < 0 else math.inf
    tau, _ = var_II_blowup_with_error(rf, **var_kwargs)
    return tau


def var_II_blowup_with_error(rf: RadiationField, tau_end: float | None = None,
                             n_labels: int = 16001, sigma_min: float = -20.0) -> tuple[float, float]:
    """var_II blowup time from the characteristic-ODE backend, with the change
    under halving of the label count as error bar."""
    tau_end = tau_end or 10.0 * rf.nu0
    fine = solve_lagrangian(rf, "var_II", tau_end, n_labels=n_labels, sigma_min=sigma_min)
    coarse = solve_lagrangian(rf, "var_II", tau_end, n_labels=n_labels // 2 + 1, sigma_min=sigma_min)
    if fine.blowup is None or coarse.blowup is None:
        return math.inf, math.inf
    return fine.blowup.tau_star, abs(fine.blowup.tau_star - coarse.blowup.tau_star)


# --- Eulerian upwind solver -----------------------------------------------------

def _affine_zero(taus: np.ndarray, inv: np.ndarray) -> tuple[float, float]:
    """Zero crossing of a least-squares line through (taus, inv) and its R^2."""
    A = np.vstack([taus, np.ones_like(taus)]).T
    (k, c), *_ = np.linalg.lstsq(A, inv, rcond=None)
    pred = A @ np.array([k, c])
    ss = float(np.sum((inv - inv.mean()) ** 2))
    r2 = 1.0 - float(np.sum((inv - pred) ** 2)) / ss if ss > 0 else 1.0
    return (-c / k if k < 0 else math.inf), r2


def solve_asymptotic_pde(rf: RadiationField, variant, tau_end: float, d_sigma: float | None = None,
                         sigma_min: float = -20.0, cfl: float = 0.4, blowup_factor: float = 0.05,
                         resolved_factor: float = 0.005, order: int = 2, snapshot_taus=(),
                         record_every: int = 1) -> ProfileSolution:
    """March W (resp. Q) with upwinding and Heun steps.

    ``order=1`` is plain first-order upwinding; ``order=2`` adds minmod-limited
    MUSCL slopes (still TVD) and cuts the numerical diffusion that otherwise
    delays the gradient growth.

    V is recovered by integrating W leftward from V(tau, M) = 0.  Along a
    characteristic W obeys dW/dtau = -k A W^2 (A = 1, or G in case II), so a
    grid point with A W < 0 predicts its own blowup at tau + 1/(k A |W|).  The
    minimum of that prediction over the grid is recorded each step; the
    reported blowup time is its value at the last step where the peak is
    still resolved (max|W| d_sigma <= ``resolved_factor``).  The march stops
    when max|W| d_sigma exceeds ``blowup_factor`` or tau passes the predicted
    time; either way the gradient has left the resolvable range.
    """
    variant = _variant(variant)
    if cfl <= 0 or cfl >= 1:
        raise StepSizeFailure("CFL number must lie in (0, 1)")
    if order not in (1, 2):
        raise InvalidArgument("order must be 1 or 2")
    M = rf.M
    if d_sigma is None:
        d_sigma = 1e-3 * (M - sigma_min) / (M + 200.0)
    n = int(round((M - sigma_min) / d_sigma))
    sigma = np.linspace(sigma_min, M, n + 1)
    h = sigma[1] - sigma[0]
    W = rf(sigma, 1).copy()
    W[-1] = 0.0
    k = variant.source_factor
    case_II = variant.is_case_II

    def potential(Wv):
        # V(sigma) = -int_sigma^M W
        return -cumulative_trapezoid(Wv[::-1], dx=h, initial=0.0)[::-1]

    def rhs(Wv):
        V = potential(Wv)
        a = V * V if case_II else 2.0 * V
        src = k * (V if case_II else 1.0) * Wv * Wv
        # one ghost cell each side: constant on the left, zero beyond M
        ext = np.concatenate([[Wv[0], Wv[0]], Wv, [0.0, 0.0]])
        d = np.diff(ext)
        slope = np.zeros_like(ext)
        if order == 2:
            slope[1:-1] = np.where(d[:-1] * d[1:] > 0,
                                   np.sign(d[1:]) * np.minimum(np.abs(d[:-1]), np.abs(d[1:])), 0.0)
        left = ext + 0.5 * slope    # value at the right face of each cell
        right = ext - 0.5 * slope   # value at the left face of each cell
        i = np.arange(2, Wv.size + 2)
        back = left[i] - left[i - 1]
        fwd = right[i + 1] - right[i]
        dW = np.where(a > 0, back, fwd) / h
        out = -a * dW - src
        out[-1] = 0.0
        return out

    def predicted(tau_now, Wv):
        A = potential(Wv) if case_II else np.ones_like(Wv)
        rate = -k * A * Wv  # d(1/W)/dtau = k A; blowup needs A W < 0
        grow = rate > 0
        if not np.any(grow):
            return math.inf
        return tau_now + float(np.min(1.0 / rate[grow]))

    tau = 0.0
    taus, peaks = [0.0], [float(np.max(np.abs(W)))]
    energies = [float(np.trapezoid(W * W, dx=h))]
    preds = [predicted(0.0, W)]
    snaps = {}
    pending = sorted(float(t) for t in snapshot_taus)
    if pending and pending[0] == 0.0:
        snaps[0.0] = W.copy()
        pending.pop(0)
    step = 0
    last_resolved = 0
    stop_reason = "tau_end"
    while tau < tau_end:
        V = potential(W)
        a = V * V if case_II else 2.0 * V
        amax = float(np.max(np.abs(a)))
        smax = float(np.max(np.abs(k * (V if case_II else 1.0) * W)))
        dt = min(cfl * h / amax if amax > 0 else math.inf, 0.2 / smax if smax > 0 else math.inf,
                 tau_end - tau)
        if pending:
            dt = min(dt, pending[0] - tau)
        if amax * dt > h * (1.0 + 1e-12):
            raise StepSizeFailure(f"CFL violated: {amax * dt / h:.3f}")
        k1 = rhs(W)
        k2 = rhs(W + dt * k1)
        W = W + 0.5 * dt * (k1 + k2)
        tau += dt
        step += 1
        if pending and abs(tau - pending[0]) < 1e-14 * max(1.0, tau):
            snaps[pending.pop(0)] = W.copy()
        if not np.all(np.isfinite(W)):
            stop_reason = "non_finite"
            break
        peak = float(np.max(np.abs(W)))
        if step % record_every == 0 or peak * h > blowup_factor:
            taus.append(tau)
            peaks.append(peak)
            energies.append(float(np.trapezoid(W * W, dx=h)))
            preds.append(predicted(tau, W))
            if peak * h <= resolved_factor:
                last_resolved = len(taus) - 1
        if peak * h > blowup_factor:
            stop_reason = "peak_threshold"
            break
        if tau >= preds[last_resolved]:
            stop_reason = "passed_prediction"
            break

    blow = None
    pred_arr = np.array(preds)
    if stop_reason in ("peak_threshold", "passed_prediction") and math.isfinite(preds[last_resolved]):
        window = pred_arr[max(0, last_resolved - 10):last_resolved + 1]
        blow = Blowup(float(preds[last_resolved]), float(sigma[int(np.argmax(np.abs(W)))]),
                      error_bar=float(np.ptp(window)))

    final_V = potential(W)
    final = (tau, W.copy(), final_V)

    def _field(tq, which):
        if snaps and tq in snaps:
            Wq = snaps[tq]
        elif abs(tq - final[0]) < 1e-12:
            Wq = final[1]
        else:
            raise InvalidArgument(f"no snapshot stored at tau={tq}")
        return Wq if which == "W" else potential(Wq)

    def Vfun(tq, s):
        return np.interp(s, sigma, _field(tq, "V"), right=0.0)

    def Wfun(tq, s):
        return np.interp(s, sigma, _field(tq, "W"), right=0.0)

    sol = ProfileSolution(variant, "finite_difference", Vfun, Wfun, blow, M,
                          history={"tau": np.array(taus), "max_abs_W": np.array(peaks),
                                   "energy": np.array(energies), "sigma": sigma, "d_sigma": h,
                                   "final_tau": tau, "snapshots": snaps, "predicted": pred_arr,
                                   "last_resolved": last_resolved, "stop_reason": stop_reason})
    return sol


# --- Lagrangian characteristic-ODE solver ----------------------------------------

def solve_lagrangian(rf: RadiationField, variant, tau_end: float, n_labels: int = 16001,
                     sigma_min: float = -20.0, checkpoints: int = 400, peak_stop: float = 1e5,
                     resolution_limit: float = 0.02, rtol: float = 1e-10,
                     atol: float = 1e-12) -> ProfileSolution:
    """Integrate the profile equation along characteristics labelled by s.

    With J = d sigma/ds, W = F0'(s) y and the identities W J = F0' (div) or
    W^2 J = F0'^2 (var) along characteristics, every variant reduces to
        dy/dtau = -k A F0'(s) y^2,   d sigma/dtau = B,
    where k is the source factor, A = 1 (case I) or G (case II), and
    B = 2V or G^2 with V(s) = -int_s^M F0' y J ds'.

    The march stops when the peak |W| reaches ``peak_stop`` or when the
    spike is no longer resolved by the labels: the largest jump of W between
    neighbouring labels exceeds ``resolution_limit`` times max|W|.
    """
    variant = _variant(variant)
    if rf.is_trivial:
        raise InvalidArgument("trivial radiation field has no dynamics")
    M = rf.M
    focus = rf.rho0_tilde if variant.is_case_II else rf.rho0
    # labels: dense near the focus, geometric to the left
    n_in = n_labels // 2
    inner = np.linspace(max(sigma_min, focus - 1.0), min(M, focus + 1.0), n_in)
    left_len = inner[0] - sigma_min
    nl = (n_labels - n_in) // 2
    left = inner[0] - np.expm1(np.linspace(0, np.log1p(left_len), nl + 1))[1:][::-1]
    right = np.linspace(inner[-1], M, n_labels - n_in - nl + 1)[1:]
    s = np.unique(np.concatenate([left, inner, right, [focus]]))
    F1 = rf(s, 1)
    k = variant.source_factor
    div = variant in (ModelVariant.DIV_I, ModelVariant.DIV_II)
    N = s.size

    def potential(y):
        # V(s) = -int_s^M F0' y J ds', J = 1/y (div) or 1/y^2 (var)
        integrand = F1 if div else F1 / y
        return cumulative_trapezoid(integrand[::-1], s[::-1], initial=0.0)[::-1]

    def rhs(_tau, z):
        y, sig = z[:N], z[N:]
        V = potential(y)
        A = V if variant.is_case_II else 1.0
        dy = -k * A * F1 * y * y
        dsig = V * V if variant.is_case_II else 2.0 * V
        return np.concatenate([dy, dsig])

    def peak_event(_tau, z):
        return peak_stop - float(np.max(np.abs(F1 * z[:N])))

    def resolution_event(_tau, z):
        Wz = F1 * z[:N]
        return resolution_limit - float(np.max(np.abs(np.diff(Wz))) / np.max(np.abs(Wz)))

    peak_event.terminal = True
    resolution_event.terminal = True
    z0 = np.concatenate([np.ones(N), s.copy()])
    t_eval = np.linspace(0.0, tau_end, checkpoints + 1)
    res = solve_ivp(rhs, (0.0, tau_end), z0, method="RK45", t_eval=t_eval,
                    events=(peak_event, resolution_event), rtol=rtol, atol=atol, dense_output=True)
    ts = res.t
    ys = res.y[:N].T
    sigs = res.y[N:].T
    stopped = res.status == 1
    if stopped:
        t_stop = float(min(ev[0] for ev in res.t_events if ev.size))
        # append fine checkpoints approaching the stop time
        fine = t_stop - np.geomspace(t_stop * 0.2, t_stop * 1e-9, 60)
        fine = fine[fine > (ts[-1] if ts.size else 0.0)]
        dense = res.sol(np.append(fine, t_stop))
        ts = np.concatenate([ts, fine, [t_stop]])
        ys = np.vstack([ys, dense[:N].T])
        sigs = np.vstack([sigs, dense[N:].T])
    Ws = F1[None, :] * ys
    peaks = np.max(np.abs(Ws), axis=1)
    energies = np.array([_energy(sig, Wr) for sig, Wr in zip(sigs, Ws)])
    Vs = np.array([potential(yr) for yr in ys])

    blow = None
    if stopped:
        sel = peaks >= 0.01 * peaks[-1]
        tstar, _ = _affine_zero(ts[sel][-30:], 1.0 / peaks[sel][-30:])
        i = int(np.argmax(np.abs(Ws[-1])))
        blow = Blowup(tstar, float(sigs[-1, i]), error_bar=abs(tstar - ts[-1]))

    def _row(tq):
        j = int(np.argmin(np.abs(ts - tq)))
        if abs(ts[j] - tq) > 1e-9 * max(1.0, abs(tq)):
            raise InvalidArgument(f"tau={tq} is not a stored checkpoint")
        return j

    def Vfun(tq, sq):
        j = _row(tq)
        return np.interp(sq, sigs[j], Vs[j], left=Vs[j][0], right=0.0)

    def Wfun(tq, sq):
        j = _row(tq)
        return np.interp(sq, sigs[j], Ws[j], left=Ws[j][0], right=0.0)

    return ProfileSolution(variant, "lagrangian", Vfun, Wfun, blow, M,
                           history={"tau": ts, "max_abs_W": peaks, "energy": energies,
                                    "labels": s, "sigma_paths": sigs, "W_paths": Ws, "V_paths": Vs,
                                    "status": res.status})


def _energy(sig: np.ndarray, W: np.ndarray) -> float:
    """int W^2 d sigma on the (nonuniform) characteristic positions."""
    return float(np.trapezoid(W * W, sig))


# --- var_II blowup evidence --------------------------------------------------------

def admissible_interval(rf: RadiationField) -> tuple[float, float]:
    """Largest interval around rho0_tilde where F0' < 0 and F0'' > 0."""
    if rf.is_trivial:
        raise InvalidArgument("trivial radiation field: no admissible interval")
    g = rf.sigma_grid
    ok = (rf.F0_prime < 0) & (rf.F0_double_prime > 0)
    if not np.any(ok):
        raise InvalidArgument("no interval with F0' < 0 < F0''")
    idx = np.nonzero(ok)[0]
    # split into runs and choose the longest
    breaks = np.nonzero(np.diff(idx) > 1)[0]
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks, [idx.size - 1]])
    lengths = g[idx[ends]] - g[idx[starts]]
    j = int(np.argmax(lengths))
    return float(g[idx[starts[j]]]), float(g[idx[ends[j]]])


@dataclass
class LemmaA5Report:
    interval: tuple
    taus: np.ndarray
    G_samples: np.ndarray       # shape (n_tau, 3) at l0, l1, l2
    Q_samples: np.ndarray       # shape (n_tau, 3)
    max_abs_Q: np.ndarray
    energy: np.ndarray
    energy_drift: float
    growth: float
    monotone_tail: bool


def lemma_a5_evidence(sol: ProfileSolution, rf: RadiationField, ls=None) -> LemmaA5Report:
    """Collect the blowup evidence for var_II: G samples, Q samples and energy.

    ``ls`` are three increasing sigma locations inside the admissible
    interval; by default they split it evenly.
    """
    if rf.is_trivial:
        raise InvalidArgument("trivial radiation field")
    if sol.variant is not ModelVariant.VAR_II:
        raise InvalidArgument("evidence is defined for var_II solutions")
    a, b = admissible_interval(rf)
    if ls is None:
        ls = (a + 0.25 * (b - a), a + 0.5 * (b - a), a + 0.75 * (b - a))
    hist = sol.history
    taus = hist["tau"]
    if sol.backend == "lagrangian":
        G = np.array([np.interp(ls, sg, Vr) for sg, Vr in zip(hist["sigma_paths"], hist["V_paths"])])
        Q = np.array([np.interp(ls, sg, Wr) for sg, Wr in zip(hist["sigma_paths"], hist["W_paths"])])
    else:
        snaps = hist["snapshots"]
        taus = np.array(sorted(snaps))
        G = np.array([sol.V(t, np.array(ls)) for t in taus])
        Q = np.array([sol.W(t, np.array(ls)) for t in taus])
    E = hist["energy"]
    peaks = hist["max_abs_W"]
    drift = float(np.max(np.abs(E - E[0])) / E[0])
    tail = peaks[-10:]
    return LemmaA5Report((a, b), taus, G, Q, peaks, E, drift, float(peaks[-1] / peaks[0]),
                         bool(np.all(np.diff(tail) > 0)))


# --- decay diagnostics -------------------------------------------------------------

def decay_sup(fan: CharacteristicFan, tau: float, l: int, m: int, sigma_lo: float = -100.0,
              n: int = 4001) -> float:
    """sup over sigma in [sigma_lo, M] of |d_tau^l d_sigma^m V| (1+|sigma|)^(1/2+l+m), l+m <= 1."""
    if l + m > 1:
        raise InvalidArgument("orders l + m <= 1 only")
    sig = np.linspace(sigma_lo, fan.rf.M, n)
    d = profile_derivatives(fan, tau, sig)
    val = {(0, 0): d["V"], (0, 1): d["V_s"], (1, 0): d["V_t"]}[(l, m)]
    return float(np.max(np.abs(val) * (1.0 + np.abs(sig)) ** (0.5 + l + m)))


def fd_profile_interp(sol: ProfileSolution, tau: float):
    """Convenience: (sigma, V, W) arrays from a finite-difference snapshot."""
    sig = sol.history["sigma"]
    return sig, sol.V(tau, sig), sol.W(tau, sig)


__all__ = [
    "ModelVariant", "CharacteristicFan", "ProfileSolution", "Blowup", "characteristic_fan",
    "sigma_of", "invert_characteristic", "gradient_on_characteristic", "gradient_formula",
    "characteristic_solution", "profile_derivatives", "profile_blowup_time", "solve_asymptotic_pde",
    "solve_lagrangian", "lemma_a5_evidence", "admissible_interval", "decay_sup",
    "var_II_blowup_with_error",
]
