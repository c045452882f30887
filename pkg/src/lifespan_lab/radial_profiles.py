"""Radial initial data and wave-speed laws.

Radial profiles are stored as samples on a uniform grid plus, when one is
known, an exact closed-form evaluator.  Wave speeds carry exact first and
second derivatives and an accurate ``excess`` c(u) - c(0) that does not
cancel for tiny u (needed when u ~ 1e-100 in far-field residuals).
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InvalidArgument

TOL_CLASSIFY = 1e-10


class CaseTag(str, enum.Enum):
    CASE_I = "case_I"
    CASE_II = "case_II"
    GLOBAL = "global"


class Smoothness(str, enum.Enum):
    C_INFINITY_BUMP = "c_infinity_bump"
    POLYNOMIAL_BUMP = "polynomial_bump"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class RadialFunction:
    """Compactly supported radial profile f(r), r >= 0.

    ``exact`` (if given) returns the closed form and its first two
    derivatives: ``exact(r, nu)``.  Otherwise a cubic spline through the
    samples is used, clamped (f'(0)=0) at the axis and natural at r = M.
    """

    r: np.ndarray
    values: np.ndarray
    support_radius: float
    smoothness_tag: Smoothness = Smoothness.TABULATED
    exact: Optional[Callable[[np.ndarray, int], np.ndarray]] = field(default=None, repr=False)
    label: str = ""

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if self.support_radius <= 0:
            raise InvalidArgument("support radius must be positive")
        if r.ndim != 1 or r.shape != v.shape or r.size < 4:
            raise InvalidArgument("samples must be two equal-length 1-D arrays with >= 4 points")
        if r[0] != 0.0 or np.any(np.diff(r) <= 0):
            raise InvalidArgument("sample radii must start at 0 and increase strictly")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "values", v)
        if self.exact is None:
            inside = r <= self.support_radius
            rr = np.append(r[inside], self.support_radius) if r[inside][-1] < self.support_radius else r[inside]
            vv = np.append(v[inside], 0.0) if rr.size > inside.sum() else v[inside].copy()
            vv[-1] = 0.0
            spline = CubicSpline(rr, vv, bc_type=((1, 0.0), (2, 0.0)))
            object.__setattr__(self, "_spline", spline)

    @property
    def M(self) -> float:
        return self.support_radius

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)

    def __call__(self, r, nu: int = 0):
        """Evaluate f^(nu)(r) for nu in {0, 1, 2}; zero for r >= M."""
        r = np.asarray(r, dtype=float)
        if nu not in (0, 1, 2):
            raise InvalidArgument("only derivatives up to order 2 are available")
        ra = np.abs(r)
        inside = ra < self.support_radius
        out = np.zeros_like(ra)
        if np.any(inside):
            if self.exact is not None:
                out[inside] = self.exact(ra[inside], nu)
            else:
                out[inside] = self._spline(ra[inside], nu)
        if nu == 1:
            out = np.where(r < 0, -out, out)
        return out if out.ndim else float(out)


def _grid(M: float, n: int = 512) -> np.ndarray:
    return np.linspace(0.0, M, n + 1)


def make_bump(M: float, amplitude: float = 1.0) -> RadialFunction:
    """C-infinity bump ``amplitude * exp(1 - 1/(1 - (r/M)^2))`` on r < M."""
    if M <= 0:
        raise InvalidArgument("support radius M must be positive")

    def exact(r, nu):
        x = r / M
        d = 1.0 - x * x
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            f = amplitude * np.exp(1.0 - 1.0 / d)
            # d/dr of (1 - 1/d) is -2x/(M d^2)
            g1 = -2.0 * x / (M * d * d)
            if nu == 0:
                out = f
            elif nu == 1:
                out = f * g1
            else:
                g2 = -2.0 / (M * M * d * d) - 8.0 * x * x / (M * M * d ** 3)
                out = f * (g1 * g1 + g2)
        return np.where(d > 0, np.nan_to_num(out, nan=0.0, posinf=0.0, neginf=0.0), 0.0)

    r = _grid(M)
    return RadialFunction(r, exact(r, 0), M, Smoothness.C_INFINITY_BUMP, exact,
                          label=f"bump:M={M:g},amp={amplitude:g}")


def make_poly_bump(M: float, power: int = 3, amplitude: float = 1.0) -> RadialFunction:
    """``amplitude * (1 - (r/M)^2)^power`` on r <= M."""
    if M <= 0:
        raise InvalidArgument("support radius M must be positive")
    if power < 2:
        raise InvalidArgument("power must be >= 2 for a C^1 profile")

    def exact(r, nu):
        x = r / M
        d = np.clip(1.0 - x * x, 0.0, None)
        if nu == 0:
            return amplitude * d ** power
        if nu == 1:
            return amplitude * power * d ** (power - 1) * (-2.0 * x / M)
        return amplitude * (power * (power - 1) * d ** (power - 2) * (4.0 * x * x / M ** 2)
                            - 2.0 * power * d ** (power - 1) / M ** 2)

    r = _grid(M)
    return RadialFunction(r, exact(r, 0), M, Smoothness.POLYNOMIAL_BUMP, exact,
                          label=f"poly:M={M:g},power={power:d},amp={amplitude:g}")


def zero_profile(M: float = 1.0) -> RadialFunction:
    r = _grid(M)
    return RadialFunction(r, np.zeros_like(r), M, Smoothness.TABULATED,
                          lambda r, nu: np.zeros_like(r), label="zero")


def scaled(f: RadialFunction, factor: float) -> RadialFunction:
    ex = None
    if f.exact is not None:
        ex = lambda r, nu, _e=f.exact: factor * _e(r, nu)
    return RadialFunction(f.r, factor * f.values, f.support_radius, f.smoothness_tag, ex,
                          label=f"{factor:g}*{f.label}")


def added(f: RadialFunction, g: RadialFunction) -> RadialFunction:
    """Pointwise sum of two profiles sharing a support radius."""
    if f.support_radius != g.support_radius:
        raise InvalidArgument("profiles must share the support radius")

    def ex(r, nu):
        return np.asarray(f(r, nu)) + np.asarray(g(r, nu))

    return RadialFunction(f.r, f(f.r) + g(f.r), f.support_radius, Smoothness.TABULATED, ex,
                          label=f"{f.label}+{g.label}")


def load_profile_csv(path, M: Optional[float] = None) -> RadialFunction:
    """Two-column (r, value) CSV; a header row is skipped if present."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                if rows:
                    raise
    data = np.array(rows, dtype=float)
    r, v = data[:, 0], data[:, 1]
    if M is None:
        nz = np.nonzero(v)[0]
        M = float(r[nz[-1] + 1]) if nz.size and nz[-1] + 1 < r.size else float(r[-1])
    return RadialFunction(r, np.where(r >= M, 0.0, v), M, Smoothness.TABULATED, label=f"csv:{path}")


def parse_profile(spec: str) -> RadialFunction:
    """Build a profile from a preset string such as ``bump:M=1,amp=1``.

    Recognized kinds: ``zero``, ``bump`` (M, amp), ``poly`` (M, power, amp),
    ``csv`` (path[, M]).
    """
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    params = {}
    if rest:
        for item in rest.split(","):
            if not item.strip():
                continue
            key, eq, val = item.partition("=")
            if not eq:
                raise InvalidArgument(f"malformed profile parameter {item!r} in {spec!r}")
            params[key.strip()] = val.strip()
    try:
        if kind == "zero":
            return zero_profile(float(params.get("M", 1.0)))
        if kind == "bump":
            return make_bump(float(params.get("M", 1.0)), float(params.get("amp", 1.0)))
        if kind == "poly":
            return make_poly_bump(float(params.get("M", 1.0)), int(params.get("power", 3)),
                                  float(params.get("amp", 1.0)))
        if kind == "csv":
            M = float(params["M"]) if "M" in params else None
            return load_profile_csv(params["path"], M)
    except KeyError as exc:
        raise InvalidArgument(f"missing parameter {exc} in profile spec {spec!r}") from None
    raise InvalidArgument(f"unknown profile kind {kind!r}")


# --- wave speeds -----------------------------------------------------------

@dataclass(frozen=True)
class WaveSpeed:
    c: Callable
    dc: Callable
    d2c: Callable
    label: str
    excess: Optional[Callable] = None

    def __post_init__(self):
        if abs(float(self.c(0.0))) == 0.0:
            raise InvalidArgument("wave speed must satisfy c(0) != 0")

    def __call__(self, u):
        return self.c(u)

    def c_minus_c0(self, u):
        """c(u) - c(0) without cancellation when a closed form is known."""
        if self.excess is not None:
            return self.excess(u)
        return self.c(u) - self.c(0.0)

    def c2_minus_c02(self, u):
        e = self.c_minus_c0(u)
        return e * (e + 2.0 * self.c(0.0))


def _poly_speed(coef: float, power: int, label: str) -> WaveSpeed:
    k, n = float(coef), int(power)
    return WaveSpeed(
        c=lambda u: 1.0 + k * np.asarray(u) ** n,
        dc=lambda u: k * n * np.asarray(u) ** (n - 1),
        d2c=lambda u: k * n * (n - 1) * np.asarray(u) ** (n - 2) if n >= 2 else 0.0 * np.asarray(u),
        label=label,
        excess=lambda u: k * np.asarray(u) ** n,
    )


def polynomial_speed(coef: float = 1.0, power: int = 1) -> WaveSpeed:
    """c(u) = 1 + coef * u^power."""
    if power < 1:
        raise InvalidArgument("power must be >= 1")
    label = f"1+{coef:g}*u^{power}" if coef != 1.0 else ("1+u" if power == 1 else f"1+u^{power}")
    return _poly_speed(coef, power, label)


def constant_speed() -> WaveSpeed:
    return WaveSpeed(c=lambda u: np.ones_like(np.asarray(u, dtype=float)),
                     dc=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
                     d2c=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
                     label="1", excess=lambda u: np.zeros_like(np.asarray(u, dtype=float)))


def exp_half_speed() -> WaveSpeed:
    """Pressure-gradient model: c(u) = exp(u/2)."""
    return WaveSpeed(c=lambda u: np.exp(0.5 * np.asarray(u)),
                     dc=lambda u: 0.5 * np.exp(0.5 * np.asarray(u)),
                     d2c=lambda u: 0.25 * np.exp(0.5 * np.asarray(u)),
                     label="exp(u/2)", excess=lambda u: np.expm1(0.5 * np.asarray(u)))


def liquid_crystal_speed(alpha: float = 1.0, beta: float = 2.0) -> WaveSpeed:
    """Nematic liquid crystal: c(u) = alpha cos^2 u + beta sin^2 u."""
    if alpha == beta:
        raise InvalidArgument("liquid crystal speed needs alpha != beta")
    d = beta - alpha
    return WaveSpeed(c=lambda u: alpha + d * np.sin(np.asarray(u)) ** 2,
                     dc=lambda u: d * np.sin(2.0 * np.asarray(u)),
                     d2c=lambda u: 2.0 * d * np.cos(2.0 * np.asarray(u)),
                     label=f"{alpha:g}cos^2u+{beta:g}sin^2u",
                     excess=lambda u: d * np.sin(np.asarray(u)) ** 2)


def canonical_wavespeeds(alpha: float = 1.0, beta: float = 2.0) -> list[WaveSpeed]:
    return [polynomial_speed(1.0, 1), polynomial_speed(1.0, 2), exp_half_speed(),
            liquid_crystal_speed(alpha, beta)]


def parse_wavespeed(spec: str) -> WaveSpeed:
    """Parse ``1+u``, ``1+u^2``, ``1+u^3``, ``1``, ``exp``, ``lc:alpha=1,beta=2``
    or ``poly:coef=k,power=n``."""
    s = spec.replace(" ", "").lower()
    simple = {"1": constant_speed, "1+u": lambda: polynomial_speed(1.0, 1),
              "1+u^2": lambda: polynomial_speed(1.0, 2), "1+u^3": lambda: polynomial_speed(1.0, 3),
              "exp": exp_half_speed, "exp(u/2)": exp_half_speed}
    if s in simple:
        return simple[s]()
    kind, _, rest = s.partition(":")
    params = dict(item.split("=", 1) for item in rest.split(",") if item)
    if kind == "lc":
        return liquid_crystal_speed(float(params.get("alpha", 1.0)), float(params.get("beta", 2.0)))
    if kind == "poly":
        return polynomial_speed(float(params.get("coef", 1.0)), int(params.get("power", 1)))
    raise InvalidArgument(f"unknown wave speed {spec!r}")


def classify_wavespeed(c: WaveSpeed, tol: float = TOL_CLASSIFY) -> CaseTag:
    if abs(float(c.dc(0.0))) > tol:
        return CaseTag.CASE_I
    if abs(float(c.d2c(0.0))) > tol:
        return CaseTag.CASE_II
    return CaseTag.GLOBAL
