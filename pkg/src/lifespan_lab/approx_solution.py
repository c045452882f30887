"""Approximate solutions built from the linear wave and the asymptotic profile,
their residuals, and comparisons with full nonlinear runs.

    u_a(t, r) = eps ( chi(eps t) w0 + r^(-1/2) (1 - chi(eps t)) chi(-3 eps sigma) V(tau, sigma) )

with sigma = r - t, tau = eps sqrt(1 + t) (case I, V from div_I) or
tau = eps^2 ln(1 + t) (case II, G from div_II).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .asymptotic_profile import CharacteristicFan, characteristic_fan, profile_derivatives
from .errors import InvalidArgument, ResourceLimit
from .pde_solver import (EquationForm, SimConfig, SimState, initial_state, max_speed, rhs, step)
from .radial_profiles import CaseTag, RadialFunction, WaveSpeed, constant_speed
from .radiation_field import RadiationField, radiation_field


# --- cutoff ----------------------------------------------------------------------------

def _bump(y):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    inside = (y > 0) & (y < 1)
    yi = y[inside]
    out[inside] = np.exp(-1.0 / (yi * (1.0 - yi)))
    return out


def _bump_prime(y):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    inside = (y > 0) & (y < 1)
    yi = y[inside]
    out[inside] = np.exp(-1.0 / (yi * (1.0 - yi))) * (1.0 - 2.0 * yi) / (yi * (1.0 - yi)) ** 2
    return out


class Cutoff:
    """chi(s) = 1 - int_0^(s-1) phi / int_0^1 phi, phi(y) = exp(-1 / (y (1 - y)))."""

    def __init__(self, n: int = 2001):
        f = lambda y: float(_bump(np.array([y]))[0])
        self.Z = quad(f, 0.0, 1.0, epsabs=1e-15, epsrel=1e-13)[0]
        y = np.linspace(0.0, 1.0, n)
        pieces = [quad(f, a, b, epsabs=1e-16, epsrel=1e-13)[0] for a, b in zip(y[:-1], y[1:])]
        cum = np.concatenate([[0.0], np.cumsum(pieces)]) / self.Z
        cum[-1] = 1.0
        self._I = CubicHermiteSpline(y, cum, _bump(y) / self.Z)

    def __call__(self, s, nu: int = 0):
        s = np.asarray(s, dtype=float)
        y = np.clip(s - 1.0, 0.0, 1.0)
        if nu == 0:
            out = 1.0 - self._I(y)
            out = np.where(s <= 1.0, 1.0, np.where(s >= 2.0, 0.0, out))
        elif nu == 1:
            out = -_bump(s - 1.0) / self.Z
        elif nu == 2:
            out = -_bump_prime(s - 1.0) / self.Z
        else:
            raise InvalidArgument("cutoff derivatives available up to order 2")
        return out if out.ndim else float(out)


CHI = Cutoff()


# --- linear wave -------------------------------------------------------------------------

@dataclass
class LinearWave:
    """w0 on a fixed fine grid: snapshots of (w, w_t, w_r, Laplacian) at times t."""
    t: np.ndarray
    r: np.ndarray
    w: np.ndarray
    wt: np.ndarray
    wr: np.ndarray
    lap: np.ndarray
    energy: np.ndarray
    dr: float

    def slice(self, t: float):
        """Fields at time t by cubic Lagrange interpolation between snapshots."""
        if not (self.t[0] - 1e-12 <= t <= self.t[-1] + 1e-12):
            raise InvalidArgument(f"t = {t} outside the linear-wave record [{self.t[0]}, {self.t[-1]}]")
        k = int(np.searchsorted(self.t, t))
        if k < self.t.size and abs(self.t[k] - t) < 1e-12:
            return tuple(a[k] for a in (self.w, self.wt, self.wr, self.lap))
        k = min(max(k - 2, 0), self.t.size - 4)
        ts = self.t[k:k + 4]
        wts = []
        for i in range(4):
            li = 1.0
            for j in range(4):
                if j != i:
                    li *= (t - ts[j]) / (ts[i] - ts[j])
            wts.append(li)
        return tuple(sum(wts[i] * a[k + i] for i in range(4)) for a in (self.w, self.wt, self.wr, self.lap))

    def at(self, t_grid, r_grid) -> np.ndarray:
        """w0 on a (t, r) product grid (cubic spline in r)."""
        out = np.empty((len(t_grid), len(r_grid)))
        for i, t in enumerate(t_grid):
            w = self.slice(float(t))[0]
            out[i] = CubicSpline(self.r, w)(np.clip(r_grid, self.r[0], self.r[-1]))
            out[i][np.asarray(r_grid) > self.r[-1]] = 0.0
        return out


def linear_wave(u0: RadialFunction, u1: RadialFunction, t_grid, r_grid=None, dr: float = 0.02,
                refine: int = 4, record_dt: float = 0.05, max_work: float = 5e9) -> LinearWave:
    """Solve w_tt = Laplacian w radially with the nonlinear solver at c = 1 and dr / refine."""
    t_grid = np.asarray(t_grid, dtype=float)
    t_end = float(np.max(t_grid))
    M = max(u0.support_radius, u1.support_radius)
    h = dr / refine
    r_max = t_end + M + 2.0
    if r_grid is not None and len(r_grid):
        r_max = max(r_max, float(np.max(r_grid)) + 1.0)
    n = int(math.ceil(r_max / h)) + 1
    cfl = 0.4
    n_steps = t_end / (cfl * h)
    if n * n_steps > max_work:
        raise ResourceLimit(f"linear wave needs {n} cells x {n_steps:.0f} steps (> {max_work:.0e})")
    cfg = SimConfig(eps=1.0, wavespeed=constant_speed(), u0=u0, u1=u1, dr=h, cfl=cfl,
                    domain="fixed", r_max=r_max, t_max=t_end, blowup_threshold=math.inf)
    state = initial_state(cfg)
    times = np.unique(np.concatenate([np.arange(0.0, t_end, record_dt), t_grid, [t_end]]))
    rec = {k: [] for k in ("w", "wt", "wr", "lap", "E")}

    def snap(st: SimState):
        _, dp, _ = rhs(st, cfg, st.u, st.p, st.q)
        rec["w"].append(st.u.copy())
        rec["wt"].append(st.p.copy())
        rec["wr"].append(st.q.copy())
        rec["lap"].append(dp)
        r = st.r
        rec["E"].append(float(0.5 * np.sum((st.p ** 2 + st.q ** 2) * 2.0 * np.pi * r) * h))

    snap(state)
    for target in times[1:]:
        while state.t < target - 1e-12:
            dt = min(cfl * h / max_speed(cfg, state.u), target - state.t)
            state = step(state, cfg, dt)
        state.t = float(target)
        snap(state)
    r = h * np.arange(n)
    return LinearWave(times, r, *(np.array(rec[k]) for k in ("w", "wt", "wr", "lap")),
                      np.array(rec["E"]), h)


# --- approximate solution ----------------------------------------------------------------

@dataclass
class ApproxSolution:
    case: CaseTag
    eps: float
    b: float
    rf: RadiationField
    fan: Optional[CharacteristicFan]
    w0: Optional[LinearWave]
    wavespeed: WaveSpeed
    u0: RadialFunction
    u1: RadialFunction
    meta: dict = field(default_factory=dict)

    # slow time and its derivatives
    def tau(self, t):
        t = np.asarray(t, dtype=float)
        if self.case is CaseTag.CASE_II:
            return self.eps ** 2 * np.log1p(t)
        return self.eps * np.sqrt(1.0 + t)

    def tau_derivatives(self, t: float):
        e = self.eps
        if self.case is CaseTag.CASE_II:
            return e * e / (1.0 + t), -e * e / (1.0 + t) ** 2
        return e / (2.0 * math.sqrt(1.0 + t)), -e / (4.0 * (1.0 + t) ** 1.5)

    @property
    def t_horizon(self) -> float:
        """Largest t with tau(t) <= b."""
        if self.case is CaseTag.CASE_II:
            x = self.b / self.eps ** 2
            if x > 700.0:
                raise InvalidArgument(f"horizon exp({x:.0f}) exceeds double range; raise eps or lower b")
            return math.expm1(x)
        return (self.b / self.eps) ** 2 - 1.0

    def _profile_part(self, t: float, sigma: np.ndarray, r: np.ndarray):
        """Psi = chi(-3 eps sigma) V and Phi = r^(-1/2) Psi with t/r derivatives."""
        e = self.eps
        z = np.zeros_like(sigma)
        out = {k: z.copy() for k in ("Phi", "Phi_t", "Phi_r", "lap", "box")}
        x = -3.0 * e * sigma
        live = x < 2.0
        if self.fan is None or not np.any(live) or e == 0:
            return out
        sg, rr = sigma[live], r[live]
        X = CHI(x[live])
        X1 = -3.0 * e * CHI(x[live], 1)
        X2 = 9.0 * e * e * CHI(x[live], 2)
        tau = float(self.tau(t))
        d = profile_derivatives(self.fan, tau, sg)
        V, Vs, Vss, Vt, Vts, Vtt = d["V"], d["V_s"], d["V_ss"], d["V_t"], d["V_ts"], d["V_tt"]
        tp, tpp = self.tau_derivatives(t)
        Psi = X * V
        Psi_r = X1 * V + X * Vs
        Psi_rr = X2 * V + 2.0 * X1 * Vs + X * Vss
        Psi_t = -Psi_r + tp * X * Vt
        # Psi_tt - Psi_rr, with d/dt = -d/dsigma + tau' d/dtau
        box_psi = -2.0 * tp * (X1 * Vt + X * Vts) + tpp * X * Vt + tp * tp * X * Vtt
        sr = np.sqrt(rr)
        out["Phi"][live] = Psi / sr
        out["Phi_t"][live] = Psi_t / sr
        out["Phi_r"][live] = (Psi_r - Psi / (2.0 * rr)) / sr
        out["lap"][live] = (Psi_rr + Psi / (4.0 * rr * rr)) / sr
        out["box"][live] = (box_psi - Psi / (4.0 * rr * rr)) / sr
        return out

    def _pieces(self, t: float, r=None, sigma=None):
        """Everything on one time slice: r, sigma, u_a, u_t, u_r, Laplacian and the
        linear residual (d_t^2 - Laplacian) u_a, all divided by eps."""
        e = self.eps
        A = float(CHI(e * t))
        A1 = e * float(CHI(e * t, 1))
        A2 = e * e * float(CHI(e * t, 2))
        use_w0 = A > 0 or A1 != 0 or A2 != 0
        if r is None and sigma is None:
            if use_w0:
                r = self.w0.r
            else:
                lo = -2.0 / (3.0 * e) if e > 0 else -1.0
                sigma = np.linspace(lo, self.rf.M, 4001)
        if sigma is None:
            r = np.asarray(r, dtype=float)
            sigma = r - t
        else:
            sigma = np.asarray(sigma, dtype=float)
            r = t + sigma
        zero = np.zeros_like(r)
        w = wt = wr = lap0 = zero
        if use_w0:
            w, wt, wr, lap0 = self.w0.slice(t)
            if r is not self.w0.r:
                w, wt, wr, lap0 = (CubicSpline(self.w0.r, a)(np.clip(np.abs(r), 0, self.w0.r[-1]))
                                   for a in (w, wt, wr, lap0))
        ph = self._profile_part(t, sigma, np.maximum(r, 1e-300)) if A < 1 else \
            {k: zero for k in ("Phi", "Phi_t", "Phi_r", "lap", "box")}
        U = A * w + (1 - A) * ph["Phi"]
        Ut = A1 * (w - ph["Phi"]) + A * wt + (1 - A) * ph["Phi_t"]
        Ur = A * wr + (1 - A) * ph["Phi_r"]
        L = A * lap0 + (1 - A) * ph["lap"]
        box = A2 * (w - ph["Phi"]) + 2.0 * A1 * (wt - ph["Phi_t"]) + (1 - A) * ph["box"]
        return r, sigma, U, Ut, Ur, L, box

    def __call__(self, t: float, r):
        if self.eps == 0:
            return np.zeros_like(np.asarray(r, dtype=float))
        return self.eps * self._pieces(t, r=r)[2]

    def derivatives(self, t: float, r):
        """(u_a, d_t u_a, d_r u_a) at time t on radii r."""
        if self.eps == 0:
            z = np.zeros_like(np.asarray(r, dtype=float))
            return z, z, z
        _, _, U, Ut, Ur, _, _ = self._pieces(t, r=r)
        e = self.eps
        return e * U, e * Ut, e * Ur

    def residual(self, t: float, r=None, sigma=None):
        """J_a = d_t^2 u_a - c^2(u_a) Lap u_a - 2 c c'(u_a) |grad u_a|^2 on one slice."""
        e = self.eps
        r, sigma, U, Ut, Ur, L, box = self._pieces(t, r=r, sigma=sigma)
        ua = e * U
        ws = self.wavespeed
        c = ws.c(ua) * np.ones_like(ua)
        J = e * box - ws.c2_minus_c02(ua) * e * L - 2.0 * c * ws.dc(ua) * (e * Ur) ** 2
        return r, J


def build_ua(case, eps: float, b: float, u0: RadialFunction, u1: RadialFunction,
             wavespeed: Optional[WaveSpeed] = None, dr: float = 0.02, rf: Optional[RadiationField] = None,
             refine: int = 4) -> ApproxSolution:
    case = CaseTag(case)
    if case is CaseTag.GLOBAL:
        raise InvalidArgument("approximate solutions exist for case_I and case_II only")
    if eps < 0:
        raise InvalidArgument("eps must be nonnegative")
    rf = rf or radiation_field(u0, u1)
    horizon = rf.tau0 if case is CaseTag.CASE_I else rf.nu0
    if not (0 < b < horizon):
        raise InvalidArgument(f"b must lie in (0, {horizon})")
    if wavespeed is None:
        from .radial_profiles import polynomial_speed
        wavespeed = polynomial_speed(1.0, 1 if case is CaseTag.CASE_I else 2)
    if abs(float(wavespeed.c(0.0)) - 1.0) > 1e-14:
        raise InvalidArgument("approximate solutions assume c(0) = 1")
    fan = None if rf.is_trivial else characteristic_fan(rf, "div_I" if case is CaseTag.CASE_I else "div_II")
    w0 = None
    if eps > 0:
        w0 = linear_wave(u0, u1, [2.0 / eps], dr=dr, refine=refine)
    return ApproxSolution(case, eps, b, rf, fan, w0, wavespeed, u0, u1, {"dr": dr, "refine": refine})


# --- residual norms ---------------------------------------------------------------------

def _l2_radial(r, f) -> float:
    return math.sqrt(max(float(np.trapezoid(f * f * 2.0 * np.pi * np.abs(r), r)), 0.0))


def residual_norm(ua: ApproxSolution, t: float, method: str = "analytic") -> float:
    """||J_a(t, .)|| in L^2(2 pi r dr).

    method="analytic" uses the exact profile derivatives and the solver's own
    Laplacian of w0, so the linear part cancels identically; method="fd"
    differentiates u_a by fourth-order central differences (cross-check, limited
    by the time resolution of the linear-wave record while chi(eps t) > 0)."""
    if ua.eps == 0:
        return 0.0
    if t > ua.t_horizon * (1 + 1e-12):
        raise InvalidArgument("t lies beyond the horizon tau(t) <= b")
    if method == "analytic":
        r, J = ua.residual(t)
        return _l2_radial(r, J)
    if method == "fd":
        return _l2_radial(*residual_fd(ua, t))
    raise InvalidArgument(f"unknown method {method!r}")


_C4 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_D4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def _stencil(rows, coef, h, order):
    return sum(ci * row for ci, row in zip(coef, rows)) / h ** order


def _nonlinear_terms(ua: ApproxSolution, u, u_r, lap):
    ws = ua.wavespeed
    c = ws.c(u) * np.ones_like(u)
    return ws.c2_minus_c02(u) * lap + 2.0 * c * ws.dc(u) * u_r ** 2


def residual_fd(ua: ApproxSolution, t: float, ht: float = 0.05, h_sigma: float = 0.01):
    """J_a on one slice by fourth-order central differences of u_a.

    While the linear wave contributes (eps t < 2 plus a stencil) the stencil runs
    in (t, r) on the linear-wave grid.  Afterwards u_a(t, r) = U(tau, sigma) and
    J_a = U_tt - 2 U_t,sigma - U_sigma / r - nonlinear terms, with t-derivatives
    taken through the slow time so that large t keeps full resolution in sigma."""
    e = ua.eps
    if e * (t - 2.0 * ht) < 2.0:
        if t < 2.0 * ht:
            raise InvalidArgument(f"fd residual needs t >= {2.0 * ht}")
        hr = ua.w0.dr
        r = ua.w0.r[1:]
        u_tt = _stencil([ua(t + k * ht, r) for k in range(-2, 3)], _C4, ht, 2)
        rr = np.concatenate([-r[1::-1], [0.0], r, r[-1] + hr * np.arange(1, 3)])
        uu = ua(t, np.abs(rr))
        rows = [uu[k:k + r.size] for k in range(5)]
        u_r = _stencil(rows, _D4, hr, 1)
        lap = _stencil(rows, _C4, hr, 2) + u_r / r
        u = uu[2:2 + r.size]
        return r, u_tt - lap - _nonlinear_terms(ua, u, u_r, lap)
    tau = float(ua.tau(t))
    tp, tpp = ua.tau_derivatives(t)
    htau = 1e-3 * tau
    sig = np.arange(-2.0 / (3.0 * e) - 2 * h_sigma, ua.rf.M + 3 * h_sigma, h_sigma)
    inv = (lambda x: math.expm1(x / e ** 2)) if ua.case is CaseTag.CASE_II else (lambda x: (x / e) ** 2 - 1.0)
    grid = np.array([ua._pieces(inv(tau + k * htau), sigma=sig)[2] for k in range(-2, 3)]) * e
    r = t + sig
    U_tau = _stencil(grid, _D4, htau, 1)
    U_tt = tp * tp * _stencil(grid, _C4, htau, 2) + tpp * U_tau

    def ds(a, coef, order):
        return _stencil([a[..., k:a.shape[-1] - 4 + k] for k in range(5)], coef, h_sigma, order)

    U = grid[2, 2:-2]
    U_s = ds(grid[2], _D4, 1)
    U_ss = ds(grid[2], _C4, 2)
    U_ts = tp * ds(U_tau, _D4, 1)
    rr = r[2:-2]
    lap = U_ss + U_s / rr
    J = U_tt[2:-2] - 2.0 * U_ts - U_s / rr - _nonlinear_terms(ua, U, U_s, lap)
    return rr, J


@dataclass
class ResidualIntegral:
    t: np.ndarray
    norm: np.ndarray
    integral: float


def residual_integral(ua: ApproxSolution, n_early: int = 400, n_late: int = 400,
                      method: str = "analytic") -> ResidualIntegral:
    """int_0^{t_horizon} ||J_a|| dt: uniform in t up to 2/eps, uniform in the slow time after."""
    if ua.eps == 0:
        return ResidualIntegral(np.array([0.0]), np.array([0.0]), 0.0)
    e = ua.eps
    T = ua.t_horizon
    t_mid = min(2.0 / e, T)
    early = np.linspace(0.1, t_mid, n_early)
    late = np.array([])
    if T > t_mid:
        if ua.case is CaseTag.CASE_II:
            late = np.expm1(np.linspace(math.log1p(t_mid), math.log1p(T), n_late))
        else:
            late = np.square(np.linspace(math.sqrt(t_mid), math.sqrt(T), n_late))
        late = late[1:]
    ts = np.concatenate([early, late])
    norms = np.array([residual_norm(ua, float(t), method) for t in ts])
    return ResidualIntegral(ts, norms, float(np.trapezoid(norms, ts)))


# --- comparison with the full solution -----------------------------------------------

def compare_to_exact(sim_run, ua: ApproxSolution) -> float:
    """sup |d(u - u_a)| (1+t)^(1/2) (1+|t-r|)^(1/2) / eps^(3/2) over the stored space-time
    grid with tau(t) <= b (case II: also divided by |ln eps|); d = (d_t, d_r).

    sim_run is a pde_solver.BlowupReport carrying its config and a space-time record."""
    config, record = sim_run.config, sim_run.record
    if config is None or record is None:
        raise InvalidArgument("the simulation run must carry its config and a space-time record")
    if abs(config.eps - ua.eps) > 0 or config.u0.label != ua.u0.label or config.u1.label != ua.u1.label \
            or config.wavespeed.label != ua.wavespeed.label:
        raise InvalidArgument("simulation and approximate solution do not share eps, data and wave speed")
    if config.form is not EquationForm.DIVERGENCE:
        raise InvalidArgument("approximate solutions are built for the divergence form")
    e = ua.eps
    if e == 0:
        return 0.0
    best = 0.0
    T = ua.t_horizon
    for k, t in enumerate(np.asarray(record.t, dtype=float)):
        if t > T:
            break
        r = record.r0[k] + record.dr * np.arange(len(record.u[k]))
        sel = r > 0
        _, at, ar = ua.derivatives(float(t), r[sel])
        du = np.maximum(np.abs(record.p[k][sel] - at), np.abs(record.q[k][sel] - ar))
        wgt = math.sqrt(1.0 + t) * np.sqrt(1.0 + np.abs(t - r[sel]))
        best = max(best, float(np.max(du * wgt)))
    out = best / e ** 1.5
    if ua.case is CaseTag.CASE_II:
        out /= abs(math.log(e))
    return out


# --- Klainerman fields -------------------------------------------------------------------

def z_field(values, t_grid, r_grid, which: str) -> np.ndarray:
    """Apply d_r, d_t, S = t d_t + r d_r or H = r d_t + t d_r to samples on a (t, r) grid."""
    f = np.asarray(values, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    r = np.asarray(r_grid, dtype=float)
    if f.shape != (t.size, r.size):
        raise InvalidArgument("values must have shape (len(t_grid), len(r_grid))")
    ft = np.gradient(f, t, axis=0, edge_order=2)
    fr = np.gradient(f, r, axis=1, edge_order=2)
    T, R = np.meshgrid(t, r, indexing="ij")
    if which == "dr":
        return fr
    if which == "dt":
        return ft
    if which == "S":
        return T * ft + R * fr
    if which == "H":
        return R * ft + T * fr
    raise InvalidArgument(f"unknown field {which!r}")
