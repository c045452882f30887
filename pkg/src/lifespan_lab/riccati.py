"""Riccati dynamics along outgoing characteristics, Hormander's blowup bound and
the generalized Gronwall bound, with an adaptive ODE oracle.

Along dr/dt = c(u) the Riemann variable w1 obeys

    dw1/dt = a0 w1^2 + a1 w1 + a2

with (general kappa; kappa = 2 is the divergence form)

    a0 = kappa c' / (4 c r^(1/2))
    a1 = -(kappa - 1) c' w2 / (2 c r^(1/2)) + (2 kappa - 1) c' u / (4 r)
    a2 = c^2 u / (4 r^(3/2)) + kappa c c' u^2 / (4 r^(3/2))
         + (1 - 2 kappa) c' u w2 / (4 r) + (kappa - 2) c' w2^2 / (4 c r^(1/2))
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp

from .errors import InvalidArgument
from .radial_profiles import CaseTag, WaveSpeed
from .radiation_field import RadiationField

class Provenance(str, enum.Enum):
    SYNTHETIC = "synthetic"
    EXTRACTED = "extracted"


@dataclass(frozen=True)
class CoefficientTrack:
    t: np.ndarray
    a0: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    provenance: Provenance = Provenance.SYNTHETIC
    source: dict = field(default_factory=dict)
    r: Optional[np.ndarray] = None  # path radius, when extracted

    def __post_init__(self):
        arrs = [np.asarray(x, dtype=float) for x in (self.t, self.a0, self.a1, self.a2)]
        if len({a.size for a in arrs}) != 1 or arrs[0].size < 2:
            raise InvalidArgument("track arrays must share a length of at least 2")
        if np.any(np.diff(arrs[0]) <= 0):
            raise InvalidArgument("track times must be strictly ascending")
        for name, a in zip(("t", "a0", "a1", "a2"), arrs):
            object.__setattr__(self, name, a)
        object.__setattr__(self, "provenance", Provenance(self.provenance))

    def flipped(self) -> "CoefficientTrack":
        """Coefficients of the equation for -w."""
        return CoefficientTrack(self.t, -self.a0, self.a1, -self.a2, self.provenance,
                                {**self.source, "flipped": True}, self.r)

    def shifted(self, t0: float) -> "CoefficientTrack":
        """Restrict to t >= t0 and restart the clock at t0."""
        sel = self.t >= t0
        r = None if self.r is None else self.r[sel]
        return CoefficientTrack(self.t[sel] - t0, self.a0[sel], self.a1[sel], self.a2[sel],
                                self.provenance, {**self.source, "t_offset": t0}, r)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "a0", "a1", "a2"])
            for row in zip(self.t, self.a0, self.a1, self.a2):
                w.writerow([repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path) -> "CoefficientTrack":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or set(rows[0]) != {"t", "a0", "a1", "a2"}:
            raise InvalidArgument(f"{path}: expected columns t, a0, a1, a2")
        cols = {k: np.array([float(r[k]) for r in rows]) for k in ("t", "a0", "a1", "a2")}
        return cls(cols["t"], cols["a0"], cols["a1"], cols["a2"], Provenance.SYNTHETIC,
                   {"file": str(path)})


def riccati_coefficients(r, u, w2, wavespeed: WaveSpeed, kappa: float = 2.0):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise InvalidArgument("coefficients need r > 0 along the path")
    u = np.asarray(u, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    c = wavespeed.c(u) * np.ones_like(u)
    dc = wavespeed.dc(u) * np.ones_like(u)
    sr = np.sqrt(r)
    a0 = kappa * dc / (4.0 * c * sr)
    a1 = -(kappa - 1.0) * dc * w2 / (2.0 * c * sr) + (2.0 * kappa - 1.0) * dc * u / (4.0 * r)
    a2 = (c * c * u / (4.0 * r * sr) + kappa * c * dc * u * u / (4.0 * r * sr)
          + (1.0 - 2.0 * kappa) * dc * u * w2 / (4.0 * r) + (kappa - 2.0) * dc * w2 * w2 / (4.0 * c * sr))
    return a0, a1, a2


def coefficients_along(path, wavespeed: WaveSpeed, form="divergence") -> CoefficientTrack:
    """Evaluate (a0, a1, a2) on an extracted characteristic path."""
    from .pde_solver import EquationForm

    kappa = EquationForm(form).kappa
    if np.any(path.r <= 0):
        raise InvalidArgument("path touches r <= 0; restrict it first (e.g. path.after(t0))")
    a0, a1, a2 = riccati_coefficients(path.r, path.u, path.w2, wavespeed, kappa)
    return CoefficientTrack(path.t, a0, a1, a2, Provenance.EXTRACTED,
                            {"lambda": path.lam, "sign": path.sign}, np.asarray(path.r))


# --- Hormander bound -------------------------------------------------------------

@dataclass(frozen=True)
class BlowupBound:
    K: float
    upper_bound_T: Optional[float]
    w_start: float
    reason: str = ""

    @property
    def defined(self) -> bool:
        return self.w_start > self.K


def _cum(t, f):
    return cumulative_trapezoid(f, t, initial=0.0)


def hormander_quantities(track: CoefficientTrack):
    """K over the whole track and the running value (int a0) exp(-int |a1|)."""
    K = float(np.trapezoid(np.abs(track.a2), track.t)) * math.exp(float(np.trapezoid(np.abs(track.a1), track.t)))
    lhs = _cum(track.t, track.a0) * np.exp(-_cum(track.t, np.abs(track.a1)))
    return K, lhs


def hormander_bound(track: CoefficientTrack, w_start: float) -> BlowupBound:
    """Smallest T on the track with (int_0^T a0) exp(-int_0^T |a1|) >= 1/(w_start - K)."""
    if np.any(track.a0 < 0):
        raise InvalidArgument("the Hormander bound needs a0 >= 0; flip the track for -w")
    K, lhs = hormander_quantities(track)
    if not w_start > K:
        return BlowupBound(K, None, w_start, "w_start <= K")
    target = 1.0 / (w_start - K)
    hit = np.flatnonzero(lhs >= target)
    if hit.size == 0:
        return BlowupBound(K, None, w_start, "bound not reached on the track")
    k = int(hit[0])
    if k == 0:
        return BlowupBound(K, float(track.t[0]), w_start)
    t0, t1 = track.t[k - 1], track.t[k]
    f0, f1 = lhs[k - 1], lhs[k]
    T = t0 + (target - f0) * (t1 - t0) / (f1 - f0)
    return BlowupBound(K, float(T), w_start)


# --- ODE oracle --------------------------------------------------------------------

@dataclass
class RiccatiSolution:
    t: np.ndarray
    w: np.ndarray
    blowup_time: Optional[float]

    @property
    def survived(self) -> bool:
        return self.blowup_time is None


def integrate_riccati(track: CoefficientTrack, w_start: float, t_end: Optional[float] = None,
                      rtol: float = 1e-10, atol: float = 1e-12) -> RiccatiSolution:
    """w' = a0 w^2 + a1 w + a2 (coefficients linear between samples) by RK45.

    Once |w| reaches 1 the solver continues with v = 1/w, v' = -(a0 + a1 v + a2 v^2),
    so blowup is the regular root v = 0, located by the event root finder
    (tolerance well below 1e-9).  It returns to w when |w| falls below 1/2."""
    t_end = float(track.t[-1] if t_end is None else t_end)
    tt, a0, a1, a2 = track.t, track.a0, track.a1, track.a2
    max_step = max((t_end - tt[0]) / 200.0, 1e-12)

    def coeffs(t):
        return np.interp(t, tt, a0), np.interp(t, tt, a1), np.interp(t, tt, a2)

    def f_w(t, y):
        c0, c1, c2 = coeffs(t)
        return [c0 * y[0] * y[0] + c1 * y[0] + c2]

    def f_v(t, y):
        c0, c1, c2 = coeffs(t)
        return [-(c0 + c1 * y[0] + c2 * y[0] * y[0])]

    def large(t, y):
        return abs(y[0]) - 1.0
    large.terminal, large.direction = True, 1

    def root(t, y):
        return y[0]
    root.terminal = True

    def small(t, y):
        return abs(y[0]) - 2.0
    small.terminal, small.direction = True, 1

    ts, ws = [], []
    t, w, in_v = float(tt[0]), float(w_start), abs(w_start) >= 1.0
    y = 1.0 / w if in_v else w
    while t < t_end:
        if in_v:
            sol = solve_ivp(f_v, (t, t_end), [y], rtol=rtol, atol=atol, events=(root, small), max_step=max_step)
            ts.append(sol.t[:-1] if sol.status == 1 and sol.t_events[0].size else sol.t)
            ws.append(1.0 / sol.y[0][:ts[-1].size])
            if sol.status == 1 and sol.t_events[0].size:
                return RiccatiSolution(np.concatenate(ts), np.concatenate(ws), float(sol.t_events[0][0]))
        else:
            sol = solve_ivp(f_w, (t, t_end), [y], rtol=rtol, atol=atol, events=large, max_step=max_step)
            ts.append(sol.t)
            ws.append(sol.y[0])
        if sol.status != 1:
            break
        t, y, in_v = float(sol.t[-1]), 1.0 / float(sol.y[0][-1]), not in_v
    return RiccatiSolution(np.concatenate(ts), np.concatenate(ws), None)


# --- Gronwall bound ----------------------------------------------------------------

def gronwall_envelope(f0: float, g, h, t) -> np.ndarray:
    """(f0 + 1/2 int_0^t g) exp(1/2 int_0^t h) at every sample time."""
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(g < 0) or np.any(h < 0):
        raise InvalidArgument("Gronwall bound needs g, h >= 0")
    if not (g.shape == h.shape == t.shape) or t.size < 1:
        raise InvalidArgument("g, h and t must be matching samples")
    if t.size == 1:
        return np.array([float(f0)])
    return (f0 + 0.5 * _cum(t, g)) * np.exp(0.5 * _cum(t, h))


def gronwall_bound(f0: float, g, h, t) -> float:
    """The Gronwall envelope at the last sample time of t."""
    return float(gronwall_envelope(f0, g, h, t)[-1])


# --- upper lifespan ------------------------------------------------------------------

@dataclass(frozen=True)
class UpperLifespan:
    T: Optional[float]
    bound: BlowupBound
    flipped: bool
    t_start: float
    extended: bool
    diagnostic: str = ""


def _extend_track(track: CoefficientTrack, rf: RadiationField, eps: float, wavespeed: WaveSpeed,
                  kappa: float, factor: float = 1e6, n: int = 4000) -> CoefficientTrack:
    """Append the far-field continuation u = eps F0(sigma) / r^(1/2), w2 = 0 along
    r = t + sigma with sigma frozen at the last path point."""
    if track.r is None:
        return track
    t_off = track.source.get("t_offset", 0.0)
    t_last = float(track.t[-1]) + t_off
    sigma = float(track.r[-1]) - t_last
    t_abs = np.geomspace(t_last, t_last * factor + 1.0, n)[1:]
    r = t_abs + sigma
    u = eps * float(rf(np.array([sigma]), 0)[0]) / np.sqrt(r)
    a0, _, _ = riccati_coefficients(r, u, np.zeros_like(r), wavespeed, kappa)
    zeros = np.zeros_like(a0)
    return CoefficientTrack(np.concatenate([track.t, t_abs - t_off]), np.concatenate([track.a0, a0]),
                            np.concatenate([track.a1, zeros]), np.concatenate([track.a2, zeros]),
                            track.provenance, {**track.source, "extended_from": t_last},
                            np.concatenate([track.r, r]))


def predicted_upper_lifespan(case, rf: RadiationField, eps: float, track: CoefficientTrack,
                             w_start: float, wavespeed: Optional[WaveSpeed] = None,
                             form="divergence") -> UpperLifespan:
    """Hormander bound from t = 1/eps along the blowup characteristic, in absolute time.

    w_start is w1 measured at t = 1/eps.  When a0 is negative along the track the
    equation for -w1 is used.  If the bound is not reached on the track and the
    track carries its path radius, it is continued with the far-field coefficients."""
    from .pde_solver import EquationForm

    CaseTag(case)
    t0 = 1.0 / eps
    if track.t[0] > t0 + 1e-9 or track.t[-1] <= t0:
        raise InvalidArgument("track must cover t = 1/eps")
    tr = track.shifted(t0) if track.t[0] < t0 else track.shifted(float(track.t[0]))
    flipped = float(np.trapezoid(tr.a0, tr.t)) < 0
    w = float(w_start)
    if flipped:
        tr, w = tr.flipped(), -w
    extended = False
    if np.any(tr.a0 < 0):
        neg = float(-np.min(tr.a0))
        tr = CoefficientTrack(tr.t, np.maximum(tr.a0, 0.0), tr.a1, tr.a2, tr.provenance,
                              {**tr.source, "a0_clipped": neg}, tr.r)
    bound = hormander_bound(tr, w)
    if bound.upper_bound_T is None and bound.defined and wavespeed is not None and tr.r is not None:
        kappa = EquationForm(form).kappa
        tr_ext = _extend_track(tr, rf, eps, wavespeed, kappa)
        if flipped:
            tr_ext = CoefficientTrack(tr_ext.t, np.abs(tr_ext.a0), tr_ext.a1, tr_ext.a2,
                                      tr_ext.provenance, tr_ext.source, tr_ext.r)
        bound = hormander_bound(tr_ext, w)
        extended = True
    if bound.upper_bound_T is None:
        return UpperLifespan(None, bound, flipped, t0, extended, bound.reason)
    return UpperLifespan(t0 + bound.upper_bound_T, bound, flipped, t0, extended)


def upper_bound_from_run(report, rf: RadiationField) -> tuple[UpperLifespan, CoefficientTrack]:
    """Hormander upper lifespan for a finished run with a space-time record.

    Follows Gamma+ from rho0 (case I) or rho0_tilde (case II), measures w1 at
    t = 1/eps and evaluates the coefficients from there on."""
    from .pde_solver import extract_characteristic

    cfg = report.config
    if cfg is None or report.record is None:
        raise InvalidArgument("the run needs its config and a space-time record")
    case = cfg.case_tag
    if case is CaseTag.GLOBAL:
        raise InvalidArgument("no blowup characteristic for the global case")
    lam = rf.rho0 if case is CaseTag.CASE_I else rf.rho0_tilde
    t0 = 1.0 / cfg.eps
    path = extract_characteristic(report.record, lam, 1, cfg)
    if path.t[-1] <= t0:
        raise InvalidArgument("the stored path ends before t = 1/eps")
    # keep the snapshot at or before t0 so the track covers 1/eps
    path = path.after(path.t[max(int(np.searchsorted(path.t, t0, side="right")) - 1, 0)])
    track = coefficients_along(path, cfg.wavespeed, cfg.form)
    w_start = float(np.interp(t0, path.t, path.w1))
    return predicted_upper_lifespan(case, rf, cfg.eps, track, w_start, cfg.wavespeed, cfg.form), track
