"""Radial quasilinear wave solver from small data to gradient blowup.

Solves  u_tt = c(u)^2 (u_rr + u_r / r) + kappa c(u) c'(u) u_r^2  with
kappa = 2 (divergence form) or 1 (variational form), for the state
(u, p = u_t, q = u_r).  With the Riemann pair a = p - c q (moves with +c)
and b = p + c q (moves with -c), on a grid xi = r - s t moving with speed
s in {0, 1}:

    u_t = p + s q
    q_t = (c - s)/(2c) a_xi + (c + s)/(2c) b_xi - s c' q^2 / c
    p_t = -(c - s)/2 a_xi + (c + s)/2 b_xi + (kappa - 1) c c' q^2 + c^2 q / r

a_xi is upwinded by the sign of c - s and b_xi from the right, with WENO-Z
(or limited MUSCL) face values; time stepping is Heun's method with the
step re-evaluated from the characteristic speeds every step.  The moving
window starts at rest on [0, W] and switches to s = 1 once the front nears
its right edge, so the outgoing pulse hardly moves relative to the grid.
"""
from __future__ import annotations

import enum
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._kernels import SCHEMES, rhs_kernel
from .errors import InvalidArgument
from .radial_profiles import CaseTag, RadialFunction, WaveSpeed, classify_wavespeed

NG = 3  # ghost cells per side


class EquationForm(str, enum.Enum):
    DIVERGENCE = "divergence"
    VARIATIONAL = "variational"

    @property
    def kappa(self) -> float:
        return 2.0 if self is EquationForm.DIVERGENCE else 1.0


class Outcome(str, enum.Enum):
    BLOWUP = "blowup"
    CENSORED = "censored"


@dataclass(frozen=True)
class SimConfig:
    eps: float
    wavespeed: WaveSpeed
    u0: RadialFunction
    u1: RadialFunction
    form: EquationForm = EquationForm.DIVERGENCE
    dr: float = 0.02
    cfl: float = 0.4
    domain: str = "moving_window"      # or "fixed"
    window_width: float = 16.0
    r_max: Optional[float] = None       # fixed domain extent; default t_max + M + 1
    t_max: float = 1e4
    b: Optional[float] = None           # slow-time cap
    blowup_threshold: float = 50.0      # in units of eps, on max|w1|
    resolution_limit: float = 0.2       # max|second difference of w1| / max|w1|
    far_field: float = 10.0             # fit band starts at max(1/eps, far_field * M)
    limiter: str = "weno5"              # face reconstruction: weno5, minmod, mc, none
    diag_every: int = 5                 # steps between diagnostic samples
    record_interval: Optional[float] = None  # time between stored snapshots
    w_r_min: float = 0.5                # w-diagnostics use r >= max(w_r_min, t/2)
    fit_samples: int = 50
    fit_r2: float = 0.99
    case: Optional[CaseTag] = None

    def __post_init__(self):
        object.__setattr__(self, "form", EquationForm(self.form))
        if self.eps < 0:
            raise InvalidArgument("eps must be nonnegative")
        if not (0 < self.cfl < 1):
            raise InvalidArgument("cfl must lie in (0, 1)")
        M = max(self.u0.support_radius, self.u1.support_radius)
        if self.dr * 64 > 2.0 * M + 1e-12:
            raise InvalidArgument("dr must resolve the data (>= 64 cells across the support diameter 2M)")
        if self.domain not in ("moving_window", "fixed"):
            raise InvalidArgument(f"unknown domain policy {self.domain!r}")
        if self.limiter not in RECONSTRUCTIONS:
            raise InvalidArgument(f"unknown limiter {self.limiter!r}")

    @property
    def M(self) -> float:
        return max(self.u0.support_radius, self.u1.support_radius)

    @property
    def case_tag(self) -> CaseTag:
        return self.case or classify_wavespeed(self.wavespeed)

    def slow_time(self, t):
        t = np.asarray(t, dtype=float)
        if self.case_tag is CaseTag.CASE_II:
            return self.eps ** 2 * np.log1p(t)
        return self.eps * np.sqrt(1.0 + t)

    def clock(self, t):
        """Case-appropriate clock in which 1/max|w1| is nearly affine."""
        t = np.asarray(t, dtype=float)
        return np.log1p(t) if self.case_tag is CaseTag.CASE_II else np.sqrt(t)

    def inverse_clock(self, x):
        return np.expm1(x) if self.case_tag is CaseTag.CASE_II else np.square(x)

    def identity(self) -> dict:
        return {"eps": self.eps, "wavespeed": self.wavespeed.label, "u0": self.u0.label,
                "u1": self.u1.label, "form": self.form.value, "dr": self.dr, "cfl": self.cfl,
                "domain": self.domain, "window_width": self.window_width, "r_max": self.r_max,
                "t_max": self.t_max, "b": self.b, "blowup_threshold": self.blowup_threshold,
                "resolution_limit": self.resolution_limit, "far_field": self.far_field, "limiter": self.limiter,
                "form_kappa": self.form.kappa, "case": self.case_tag.value,
                "record_interval": self.record_interval}

    def hash(self) -> str:
        blob = json.dumps(self.identity(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


# --- reconstruction ---------------------------------------------------------------

def _minmod(d1, d2):
    return np.where(d1 * d2 > 0, np.sign(d1) * np.minimum(np.abs(d1), np.abs(d2)), 0.0)


def _mc(d1, d2):
    return np.where(d1 * d2 > 0, np.sign(d1) * np.minimum(np.minimum(2 * np.abs(d1), 2 * np.abs(d2)),
                                                       0.5 * np.abs(d1 + d2)), 0.0)


def _unlimited(d1, d2):
    return 0.5 * (d1 + d2)


LIMITERS = {"minmod": _minmod, "mc": _mc, "none": _unlimited}
RECONSTRUCTIONS = ("weno5", *LIMITERS)


def _weno5(v1, v2, v3, v4, v5):
    """WENO-Z face value from five point values, biased towards v3."""
    q0 = (2.0 * v1 - 7.0 * v2 + 11.0 * v3) / 6.0
    q1 = (-v2 + 5.0 * v3 + 2.0 * v4) / 6.0
    q2 = (2.0 * v3 + 5.0 * v4 - v5) / 6.0
    b0 = 13.0 / 12.0 * (v1 - 2.0 * v2 + v3) ** 2 + 0.25 * (v1 - 4.0 * v2 + 3.0 * v3) ** 2
    b1 = 13.0 / 12.0 * (v2 - 2.0 * v3 + v4) ** 2 + 0.25 * (v2 - v4) ** 2
    b2 = 13.0 / 12.0 * (v3 - 2.0 * v4 + v5) ** 2 + 0.25 * (3.0 * v3 - 4.0 * v4 + v5) ** 2
    # scale-aware regularization: the fields are O(eps), far below unit size
    floor = 1e-12 * float(np.mean(v3 * v3)) + 1e-300
    tau = np.abs(b0 - b2)
    a0 = 0.1 * (1.0 + (tau / (b0 + floor)) ** 2)
    a1 = 0.6 * (1.0 + (tau / (b1 + floor)) ** 2)
    a2 = 0.3 * (1.0 + (tau / (b2 + floor)) ** 2)
    return (a0 * q0 + a1 * q1 + a2 * q2) / (a0 + a1 + a2)


def faces(e: np.ndarray, n: int, scheme: str, upwind_left: bool) -> np.ndarray:
    """Face values at i+1/2, i = -1..n-1, from an array with NG ghosts per side.

    ``upwind_left`` selects the left-biased value (for a wave moving right)."""
    j = np.arange(NG - 1, NG + n)
    if scheme == "weno5":
        if upwind_left:
            return _weno5(e[j - 2], e[j - 1], e[j], e[j + 1], e[j + 2])
        return _weno5(e[j + 3], e[j + 2], e[j + 1], e[j], e[j - 1])
    d = np.diff(e)
    slope = np.zeros_like(e)
    slope[1:-1] = LIMITERS[scheme](d[:-1], d[1:])
    if upwind_left:
        return e[j] + 0.5 * slope[j]
    return e[j + 1] - 0.5 * slope[j + 1]


# --- state -------------------------------------------------------------------------

@dataclass
class SimState:
    t: float
    r0: float
    dr: float
    u: np.ndarray
    p: np.ndarray
    q: np.ndarray
    steps: int = 0
    frame: float = 0.0  # grid speed s

    @property
    def r(self) -> np.ndarray:
        return self.r0 + self.dr * np.arange(self.u.size)

    @property
    def on_axis(self) -> bool:
        return self.r0 == 0.0

    def copy(self) -> "SimState":
        return SimState(self.t, self.r0, self.dr, self.u.copy(), self.p.copy(), self.q.copy(),
                        self.steps, self.frame)


def initial_state(config: SimConfig) -> SimState:
    eps = config.eps
    if config.domain == "fixed":
        extent = config.r_max if config.r_max is not None else config.t_max + config.M + 1.0
    else:
        extent = config.window_width
    n = int(math.ceil(extent / config.dr)) + 1
    r = config.dr * np.arange(n)
    u = eps * (config.u0(r, 0))
    q = eps * (config.u0(r, 1))
    p = eps * (config.u1(r, 0))
    q[0] = 0.0
    return SimState(0.0, 0.0, config.dr, u, p, q)


def _extend(state: SimState, arr_a, arr_b):
    """Riemann variables with NG ghost cells per side."""
    n = arr_a.size
    ea = np.empty(n + 2 * NG)
    eb = np.empty(n + 2 * NG)
    ea[NG:NG + n] = arr_a
    eb[NG:NG + n] = arr_b
    if state.on_axis:
        # axis: u, p even and q odd, hence a(-r) = b(r) and b(-r) = a(r)
        ea[:NG] = arr_b[NG:0:-1]
        eb[:NG] = arr_a[NG:0:-1]
    else:
        ea[:NG] = arr_a[0]
        eb[:NG] = arr_b[0]
    ea[NG + n:] = 0.0
    eb[NG + n:] = 0.0
    return ea, eb


def rhs(state: SimState, config: SimConfig, u, p, q, r0: Optional[float] = None):
    """Time derivatives (du, dp, dq) via the compiled kernel."""
    ws = config.wavespeed
    c = np.asarray(ws.c(u), dtype=float) * np.ones_like(u)
    dc = np.asarray(ws.dc(u), dtype=float) * np.ones_like(u)
    return rhs_kernel(u, p, q, c, dc, state.dr, state.r0 if r0 is None else r0, float(state.frame),
                      config.form.kappa, state.on_axis, SCHEMES[config.limiter])


def rhs_reference(state: SimState, config: SimConfig, u, p, q, r0: Optional[float] = None):
    """Vectorized numpy version of rhs, kept as an independent check on the kernel."""
    s = state.frame
    c = config.wavespeed.c(u)
    dc = config.wavespeed.dc(u)
    a = p - c * q
    b = p + c * q
    ea, eb = _extend(state, a, b)
    h = state.dr
    n = u.size
    if s == 0.0:
        a_face = faces(ea, n, config.limiter, True)
    else:
        # a travels with c - s, whose sign can change on the co-moving grid
        cf = np.empty(n + 1)
        cf[1:-1] = 0.5 * (c[:-1] + c[1:])
        cf[0], cf[-1] = c[0], c[-1]
        a_face = np.where(cf >= s, faces(ea, n, config.limiter, True),
                          faces(ea, n, config.limiter, False))
    b_face = faces(eb, n, config.limiter, False)
    a_r = np.diff(a_face) / h
    b_r = np.diff(b_face) / h
    du = p + s * q if s else p
    dq = (0.5 * (c - s) / c) * a_r + (0.5 * (c + s) / c) * b_r
    dp = -0.5 * (c - s) * a_r + 0.5 * (c + s) * b_r + (config.form.kappa - 1.0) * c * dc * q * q
    if s:
        dq -= s * dc * q * q / c
    r = (state.r0 if r0 is None else r0) + h * np.arange(n)
    if state.on_axis:
        dp[1:] += c[1:] ** 2 * q[1:] / r[1:]
        # removable limit q/r -> q_r at the axis (q odd: q_r(0) = q_1 / dr)
        dp[0] += c[0] ** 2 * q[1] / h
        dq[0] = 0.0
    else:
        dp += c * c * q / r
    return du, dp, dq


def max_speed(config: SimConfig, u, frame: float = 0.0) -> float:
    c = np.abs(config.wavespeed.c(u))
    return float(np.max(c + frame)) if frame else float(np.max(c))


def step(state: SimState, config: SimConfig, dt: Optional[float] = None) -> SimState:
    """One Heun step; dt defaults to cfl * dr / max characteristic speed."""
    if dt is None:
        dt = config.cfl * state.dr / max_speed(config, state.u, state.frame)
    u, p, q = state.u, state.p, state.q
    k1 = rhs(state, config, u, p, q)
    u1, p1, q1 = u + dt * k1[0], p + dt * k1[1], q + dt * k1[2]
    r0_next = state.r0 + state.frame * dt
    k2 = rhs(state, config, u1, p1, q1, r0=r0_next)
    un = u + 0.5 * dt * (k1[0] + k2[0])
    pn = p + 0.5 * dt * (k1[1] + k2[1])
    qn = q + 0.5 * dt * (k1[2] + k2[2])
    if state.on_axis:
        qn[0] = 0.0
    return SimState(state.t + dt, r0_next, state.dr, un, pn, qn, state.steps + 1, state.frame)


def shift_window(state: SimState, config: SimConfig, front_margin: float = 2.0) -> SimState:
    """Start the co-moving grid once the front t + M nears the right edge."""
    if config.domain != "moving_window" or state.frame:
        return state
    r_right = state.r0 + state.dr * (state.u.size - 1)
    if r_right >= state.t + config.M + front_margin:
        return state
    # the grid moves at unit speed from here on; drop the axis cell
    k = 1 if state.on_axis else 0
    pad = np.zeros(k)
    return SimState(state.t, state.r0 + k * state.dr, state.dr,
                    np.concatenate([state.u[k:], pad]), np.concatenate([state.p[k:], pad]),
                    np.concatenate([state.q[k:], pad]), state.steps, 1.0)


# --- diagnostics ---------------------------------------------------------------------

def discrete_energy(state: SimState, config: SimConfig) -> float:
    """1/2 sum (p^2 + c(u)^2 q^2) 2 pi r dr over the window."""
    c = config.wavespeed.c(state.u)
    r = state.r
    return float(0.5 * np.sum((state.p ** 2 + c * c * state.q ** 2) * 2.0 * np.pi * r) * state.dr)


def w_variables(state: SimState, config: SimConfig, r_min: float = 0.0):
    """w1 = r^(1/2) p - c (r^(1/2) q + u / (2 r^(1/2))) and w2 with +, for r > r_min."""
    r = state.r
    sel = r > max(r_min, 0.0)
    if r_min < 0 or not np.any(sel):
        raise InvalidArgument("w-variables are undefined at r = 0")
    return _w_pair(r[sel], state.u[sel], state.p[sel], state.q[sel], config.wavespeed)


def _w_pair(r, u, p, q, ws: WaveSpeed):
    if np.any(r <= 0):
        raise InvalidArgument("w-variables are undefined at r = 0")
    sr = np.sqrt(r)
    c = ws.c(u)
    tail = c * (sr * q + u / (2.0 * sr))
    return sr * p - tail, sr * p + tail


# --- run ---------------------------------------------------------------------------

@dataclass
class SpaceTimeRecord:
    t: np.ndarray
    r0: np.ndarray
    dr: float
    u: list
    p: list
    q: list

    def append(self, st: "SimState"):
        self.t.append(st.t)
        self.r0.append(st.r0)
        self.u.append(st.u.copy())
        self.p.append(st.p.copy())
        self.q.append(st.q.copy())

    def save(self, path):
        """Flat binary: int64 header (n_t, n_r) then float64 rows (t, r0, u..., p..., q...)."""
        n_r = max(len(x) for x in self.u)
        with open(path, "wb") as fh:
            np.array([len(self.t), n_r], dtype=np.int64).tofile(fh)
            np.array([self.dr], dtype=np.float64).tofile(fh)
            for i in range(len(self.t)):
                row = np.zeros(2 + 3 * n_r)
                row[0], row[1] = self.t[i], self.r0[i]
                m = len(self.u[i])
                row[2:2 + m] = self.u[i]
                row[2 + n_r:2 + n_r + m] = self.p[i]
                row[2 + 2 * n_r:2 + 2 * n_r + m] = self.q[i]
                row.tofile(fh)

    @classmethod
    def load(cls, path) -> "SpaceTimeRecord":
        with open(path, "rb") as fh:
            n_t, n_r = np.fromfile(fh, dtype=np.int64, count=2)
            dr = float(np.fromfile(fh, dtype=np.float64, count=1)[0])
            data = np.fromfile(fh, dtype=np.float64).reshape(n_t, 2 + 3 * n_r)
        return cls(data[:, 0].copy(), data[:, 1].copy(), dr, list(data[:, 2:2 + n_r]),
                   list(data[:, 2 + n_r:2 + 2 * n_r]), list(data[:, 2 + 2 * n_r:]))


@dataclass
class BlowupReport:
    outcome: Outcome
    T_eps: float
    r_star: float
    sigma_star: float
    t_end: float
    series: dict
    fit: dict
    config_hash: str
    record: Optional[SpaceTimeRecord] = None
    final_state: Optional[SimState] = None
    alternative: dict = field(default_factory=dict)
    config: Optional[SimConfig] = field(default=None, repr=False)

    @property
    def blew_up(self) -> bool:
        return self.outcome is Outcome.BLOWUP

    def manifest(self) -> dict:
        return {"config_hash": self.config_hash, "outcome": self.outcome.value,
                "T_eps": self.T_eps, "r_star": self.r_star, "sigma_star": self.sigma_star,
                "t_end": self.t_end, "fit": self.fit, "alternative": self.alternative}


def band_samples(config: SimConfig, t: np.ndarray, t_lo: float, t_hi: float) -> np.ndarray:
    """Indices of at most fit_samples samples in [t_lo, t_hi], evenly spread in the clock."""
    t = np.asarray(t)
    idx = np.flatnonzero((t >= t_lo) & (t <= t_hi))
    if idx.size <= config.fit_samples:
        return idx
    x = config.clock(t[idx])
    targets = np.linspace(x[0], x[-1], config.fit_samples)
    pick = np.unique(np.clip(np.searchsorted(x, targets), 0, idx.size - 1))
    return idx[pick]


def fit_blowup(config: SimConfig, t: np.ndarray, w1max: np.ndarray) -> dict:
    """Least-squares line through (clock(t), 1/max|w1|); its zero crossing mapped back to t."""
    t = np.asarray(t, dtype=float)
    y = 1.0 / np.asarray(w1max, dtype=float)
    x = config.clock(t)
    if x.size < 3 or np.ptp(x) == 0:
        return {"ok": False, "T": math.inf, "r2": 0.0, "n": int(x.size)}
    A = np.vstack([x, np.ones_like(x)]).T
    (k, c0), *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ np.array([k, c0])
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - pred) ** 2)) / ss if ss > 0 else 0.0
    out = {"ok": False, "T": math.inf, "r2": r2, "slope": float(k), "intercept": float(c0),
           "n": int(x.size), "t_first": float(t[0]), "t_last": float(t[-1])}
    if k < 0:
        out["T"] = float(config.inverse_clock(-c0 / k))
        out["ok"] = bool(r2 > config.fit_r2)
    return out


def run(config: SimConfig, progress=None) -> BlowupReport:
    """Integrate until a blowup candidate, t_max, or slow time beyond b.

    A candidate is declared when max|w1| reaches blowup_threshold * eps, or
    when w1 stops being resolved (max|second difference| / max|w1| above
    resolution_limit) with w1 grown past its value at the band start
    max(1/eps, far_field * M).  The candidate is confirmed by an affine fit
    of 1/max|w1| against the clock over the resolved band from the band
    start to the candidate time."""
    state = initial_state(config)
    eps = config.eps
    thr = config.blowup_threshold * eps
    keys = ("t", "energy", "max_p", "max_q", "max_w1", "max_w2", "r_w1", "d2", "dt")
    series = {k: [] for k in keys}
    rec = SpaceTimeRecord([], [], config.dr, [], [], []) if config.record_interval else None
    next_rec = 0.0
    dt_min = 1e-12
    t_band = max(1.0 / eps, config.far_field * config.M) if eps > 0 else math.inf
    w_ref = None
    reason = "t_max"
    candidate = False
    last_dt = 0.0

    def sample(st: SimState, dt):
        r = st.r
        rmin = max(config.w_r_min, 0.5 * st.t)
        sel = r >= rmin
        m1 = m2 = rw = d2 = 0.0
        if np.count_nonzero(sel) >= 3:
            w1, w2 = _w_pair(r[sel], st.u[sel], st.p[sel], st.q[sel], config.wavespeed)
            i1 = int(np.argmax(np.abs(w1)))
            m1, m2, rw = float(abs(w1[i1])), float(np.max(np.abs(w2))), float(r[sel][i1])
            if m1 > 0:
                d2 = float(np.max(np.abs(np.diff(w1, 2)))) / m1
        series["t"].append(st.t)
        series["energy"].append(discrete_energy(st, config))
        series["max_p"].append(float(np.max(np.abs(st.p))))
        series["max_q"].append(float(np.max(np.abs(st.q))))
        series["max_w1"].append(m1)
        series["max_w2"].append(m2)
        series["r_w1"].append(rw)
        series["d2"].append(d2)
        series["dt"].append(dt)
        return m1, d2

    sample(state, 0.0)
    while True:
        if rec is not None and state.t >= next_rec - 1e-12:
            rec.append(state)
            next_rec += config.record_interval
        if state.t >= config.t_max:
            break
        if config.b is not None and float(config.slow_time(state.t)) > config.b:
            reason = "slow_time_cap"
            break
        dt = min(config.cfl * state.dr / max_speed(config, state.u, state.frame), config.t_max - state.t)
        if rec is not None:
            dt = min(dt, max(next_rec - state.t, 1e-9))
        if dt < dt_min and state.t < config.t_max - dt_min:
            reason, candidate = "dt_collapse", True
            break
        state = step(state, config, dt)
        last_dt = dt
        state = shift_window(state, config)
        if not (np.all(np.isfinite(state.q)) and np.all(np.isfinite(state.p))):
            reason, candidate = "non_finite", True
            break
        if state.steps % config.diag_every == 0:
            m1, d2 = sample(state, dt)
            if progress is not None:
                progress(state, m1)
            if eps > 0 and m1 >= thr:
                reason, candidate = "threshold", True
                break
            if state.t >= t_band:
                if w_ref is None:
                    w_ref = m1
                elif d2 >= config.resolution_limit and m1 > w_ref:
                    reason, candidate = "resolution", True
                    break
    if series["t"][-1] != state.t and np.all(np.isfinite(state.p)):
        sample(state, last_dt)
    if rec is not None and candidate and np.all(np.isfinite(state.p)):
        rec.append(state)

    series = {k: np.asarray(v) for k, v in series.items()}
    fit = {"ok": False, "T": math.inf, "r2": 0.0}
    T_eps, r_star = math.inf, math.nan
    outcome = Outcome.CENSORED
    if candidate:
        idx = band_samples(config, series["t"], t_band, state.t)
        if idx.size >= 3 and np.all(series["max_w1"][idx] > 0):
            fit = fit_blowup(config, series["t"][idx], series["max_w1"][idx])
        if fit["ok"]:
            outcome = Outcome.BLOWUP
            T_eps = fit["T"]
            # the peak drifts slowly in sigma = r - t; carry its last position to T_eps
            k = idx[-1]
            r_star = T_eps + float(series["r_w1"][k] - series["t"][k])
    fit["reason"] = reason
    alternative = {"candidate_time": float(state.t) if candidate else math.inf,
                   "dt_collapse": reason in ("dt_collapse", "non_finite")}
    sigma_star = r_star - T_eps if math.isfinite(T_eps) else math.nan
    return BlowupReport(outcome, T_eps, r_star, sigma_star, state.t, series, fit,
                        config.hash(), rec, state, alternative, config)


# --- characteristics and bootstrap functionals -----------------------------------------

class TruncatedPathWarning(UserWarning):
    """A characteristic left the stored space-time window."""


def _lagrange4(x, xs, ys):
    """Cubic Lagrange interpolation through four nodes (last axis of ys)."""
    out = 0.0
    for i in range(4):
        li = 1.0
        for j in range(4):
            if j != i:
                li = li * (x - xs[j]) / (xs[i] - xs[j])
        out = out + li * ys[i]
    return out


class RecordField:
    """Cubic-in-r, cubic-in-t evaluation of a SpaceTimeRecord.

    Snapshots near the axis are extended evenly (u, p) and oddly (q) to r < 0."""

    def __init__(self, record: SpaceTimeRecord):
        self.t = np.asarray(record.t, dtype=float)
        if self.t.size < 4:
            raise InvalidArgument("a space-time record needs at least four snapshots")
        self.r0 = np.asarray(record.r0, dtype=float)
        self.dr = float(record.dr)
        self.fields = {"u": record.u, "p": record.p, "q": record.q}

    def _in_snapshot(self, k: int, r: float, name: str) -> Optional[float]:
        arr = self.fields[name][k]
        parity = -1.0 if name == "q" else 1.0
        if r < 0:
            if self.r0[k] != 0.0:
                return None
            return parity * self._in_snapshot(k, -r, name)
        x = (r - self.r0[k]) / self.dr
        i = int(math.floor(x)) - 1
        n = len(arr)
        if i + 3 >= n:
            return 0.0 if x >= n - 1 else None
        if i < 0:
            if self.r0[k] != 0.0:
                return None
            idx = np.arange(i, i + 4)
            vals = np.array([arr[abs(j)] * (parity if j < 0 else 1.0) for j in idx])
        else:
            idx = np.arange(i, i + 4)
            vals = np.asarray(arr[i:i + 4])
        return float(_lagrange4(x, idx.astype(float), vals))

    def covers(self, t: float) -> bool:
        return self.t[0] <= t <= self.t[-1]

    def __call__(self, t: float, r: float, name: str = "u") -> Optional[float]:
        k = int(np.searchsorted(self.t, t)) - 2
        k = min(max(k, 0), self.t.size - 4)
        vals = []
        for j in range(k, k + 4):
            v = self._in_snapshot(j, r, name)
            if v is None:
                return None
            vals.append(v)
        return float(_lagrange4(t, self.t[k:k + 4], vals))


@dataclass
class CharacteristicPath:
    lam: float
    sign: int
    t: np.ndarray
    r: np.ndarray
    u: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    truncated: bool = False

    @property
    def sigma(self) -> np.ndarray:
        return self.r - self.t

    def after(self, t0: float) -> "CharacteristicPath":
        sel = self.t >= t0
        return CharacteristicPath(self.lam, self.sign, self.t[sel], self.r[sel], self.u[sel],
                                  self.w1[sel], self.w2[sel], self.truncated)


def extract_characteristic(record: SpaceTimeRecord, lam: float, sign: int, config: SimConfig,
                           substeps: int = 4) -> CharacteristicPath:
    """Integrate dr/dt = sign * c(u(t, r)) from (0, lam) through the stored fields (RK4)."""
    if sign not in (1, -1):
        raise InvalidArgument("sign must be +1 or -1")
    ws = config.wavespeed
    fld = RecordField(record)
    ts = fld.t
    c0 = float(ws.c(0.0))
    straight = sign == 1 and lam >= config.M - 1e-12 and c0 == 1.0
    grid = [ts[0]]
    for a, b in zip(ts[:-1], ts[1:]):
        grid.extend(a + (b - a) * np.arange(1, substeps + 1) / substeps)
    grid = np.asarray(grid)
    rs = np.empty_like(grid)
    rs[0] = lam
    n_ok = grid.size

    def speed(t, r):
        v = fld(t, r, "u")
        return None if v is None else sign * float(ws.c(v))

    for i in range(grid.size - 1):
        if straight:
            # u vanishes on and beyond the front r = t + M
            rs[i + 1] = lam + (grid[i + 1] - grid[0]) * c0
            continue
        h = grid[i + 1] - grid[i]
        t, r = grid[i], rs[i]
        k1 = speed(t, r)
        k2 = speed(t + h / 2, r + h / 2 * k1) if k1 is not None else None
        k3 = speed(t + h / 2, r + h / 2 * k2) if k2 is not None else None
        k4 = speed(t + h, r + h * k3) if k3 is not None else None
        if k4 is None:
            n_ok = i + 1
            break
        rs[i + 1] = r + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    truncated = n_ok < grid.size
    if truncated:
        warnings.warn(f"characteristic from {lam} left the stored window at t = {grid[n_ok - 1]:.3f}",
                      TruncatedPathWarning, stacklevel=2)
    # sample on the snapshot times
    keep = np.arange(0, n_ok, substeps)
    t_out, r_out = grid[keep], rs[keep]
    u = np.array([fld(t, r, "u") for t, r in zip(t_out, r_out)], dtype=float)
    p = np.array([fld(t, r, "p") for t, r in zip(t_out, r_out)], dtype=float)
    q = np.array([fld(t, r, "q") for t, r in zip(t_out, r_out)], dtype=float)
    w1 = np.full_like(u, np.nan)
    w2 = np.full_like(u, np.nan)
    pos = r_out > 0
    if np.any(pos):
        w1[pos], w2[pos] = _w_pair(r_out[pos], u[pos], p[pos], q[pos], ws)
    return CharacteristicPath(lam, sign, t_out, r_out, u, w1, w2, truncated)


@dataclass
class BootstrapSeries:
    t: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    A_now: np.ndarray
    B_now: np.ndarray
    C_now: np.ndarray


def bootstrap_functionals(record: SpaceTimeRecord, rho0: float, config: SimConfig,
                          t_min: Optional[float] = None) -> BootstrapSeries:
    """A = sup int |w1| dr, B = sup s^(1/2) |u|, C = sup s |w2| over the strip D between
    Gamma+_M and Gamma+_(rho0 - 1), as running sups in time from t_min (default 1/eps)."""
    eps = config.eps
    if t_min is None:
        t_min = 1.0 / eps if eps > 0 else 0.0
    inner = extract_characteristic(record, rho0 - 1.0, 1, config)
    ts, A, B, C = [], [], [], []
    for k, t in enumerate(np.asarray(record.t, dtype=float)):
        if t < t_min or t > inner.t[-1]:
            continue
        r_in = float(np.interp(t, inner.t, inner.r))
        r_out = t + config.M
        r = record.r0[k] + record.dr * np.arange(len(record.u[k]))
        sel = (r >= max(r_in, 1e-12)) & (r <= r_out)
        if np.count_nonzero(sel) < 2:
            continue
        w1, w2 = _w_pair(r[sel], record.u[k][sel], record.p[k][sel], record.q[k][sel], config.wavespeed)
        s = max(t, 1.0)
        ts.append(t)
        A.append(float(np.trapezoid(np.abs(w1), r[sel])))
        B.append(math.sqrt(s) * float(np.max(np.abs(record.u[k][sel]))))
        C.append(s * float(np.max(np.abs(w2))))
    now = [np.asarray(x) for x in (A, B, C)]
    run_sup = [np.maximum.accumulate(x) if x.size else x for x in now]
    return BootstrapSeries(np.asarray(ts), *run_sup, *now)
