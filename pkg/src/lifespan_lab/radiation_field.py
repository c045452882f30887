"""Friedlander radiation field F0 of radial 2-D data and the lifespan constants.

    F0(sigma) = 1/(2 pi sqrt 2) * int_sigma^M g(s) / sqrt(s - sigma) ds,
    g(s) = R(s; u1) - d/ds R(s; u0),

with R the Radon transform of a radial function.  ``g`` is tabulated once by
Gauss-Legendre quadrature and splined; F0 and its sigma-derivatives are then
one-dimensional quadratures.  Near and inside the support the substitution
s = sigma + z^2 removes the kernel singularity; far to the left the kernel is
smooth and is integrated directly in s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .errors import InvalidArgument, NumericFailure
from .radial_profiles import RadialFunction

PREFACTOR = 1.0 / (2.0 * math.pi * math.sqrt(2.0))
_R_AXIS_EPS = 1e-12


def _gauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w  # mapped to [0, 1]


def _radon_family(f: RadialFunction, s: np.ndarray, order: int, n_nodes: int = 256) -> np.ndarray:
    """d^order/ds^order of R(s; f) for order in {0, 1, 2}, by quadrature in y."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    M = f.support_radius
    out = np.zeros_like(s)
    inside = np.abs(s) < M
    if not np.any(inside) or f.is_zero:
        return out
    x, w = _gauss(n_nodes)
    si = s[inside][:, None]
    L = np.sqrt(M * M - si * si)
    y = L * x[None, :]
    rho = np.maximum(np.sqrt(si * si + y * y), _R_AXIS_EPS)
    if order == 0:
        h = f(rho, 0)
    elif order == 1:
        h = f(rho, 1) * si / rho
    elif order == 2:
        h = f(rho, 2) * (si / rho) ** 2 + f(rho, 1) * y * y / rho ** 3
    else:
        raise InvalidArgument("Radon derivative order must be 0, 1 or 2")
    out[inside] = 2.0 * L[:, 0] * (h @ w)
    return out


def radon_transform(f: RadialFunction, s):
    """R(s; f) = 2 int_0^sqrt(M^2 - s^2) f(sqrt(s^2 + y^2)) dy (zero for |s| >= M)."""
    val = _radon_family(f, s, 0)
    return val if np.ndim(s) else float(val[0])


@dataclass(frozen=True)
class GridSpec:
    sigma_max: float = 200.0      # grid covers [-sigma_max, M]
    fine_step: float = 1e-3
    coarse_step: float = 1e-2
    window: tuple | None = None   # fine-grid window, default [-2M, M]
    n_nodes: int = 256            # Gauss-Legendre nodes per panel
    s_points_per_M: int = 4000    # tabulation density of g on [-M, M]

    def refined(self) -> "GridSpec":
        return GridSpec(self.sigma_max, self.fine_step / 2, self.coarse_step / 2, self.window,
                        2 * self.n_nodes, 2 * self.s_points_per_M)


class _AbelIntegrand:
    """Splined g, g', g'' with the sigma-quadratures of F0, F0', F0''."""

    def __init__(self, u0: RadialFunction, u1: RadialFunction, M: float, spec: GridSpec):
        self.M = M
        self.spec = spec
        n = int(2 * spec.s_points_per_M) + 1
        s = np.linspace(-M, M, n)
        g = _radon_family(u1, s, 0, spec.n_nodes) - _radon_family(u0, s, 1, spec.n_nodes)
        g1 = _radon_family(u1, s, 1, spec.n_nodes) - _radon_family(u0, s, 2, spec.n_nodes)
        g[[0, -1]] = 0.0
        g1[[0, -1]] = 0.0
        self.trivial = not (np.any(g) or np.any(g1))
        self.g = CubicSpline(s, g)
        self.g1 = CubicSpline(s, g1)
        self.g2 = self.g1.derivative()
        self.x, self.w = _gauss(spec.n_nodes)

    def _gfun(self, nu):
        return (self.g, self.g1, self.g2)[nu]

    def evaluate(self, sigma, nu: int = 0, chunk: int = 4096) -> np.ndarray:
        """F0^(nu)(sigma) by direct quadrature; exact zero for sigma >= M."""
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        out = np.zeros_like(sigma)
        if self.trivial:
            return out
        M = self.M
        for start in range(0, sigma.size, chunk):
            sg = sigma[start:start + chunk]
            res = np.zeros_like(sg)
            near = (sg < M) & (sg >= -2.0 * M)
            far = sg < -2.0 * M
            if np.any(near):
                sn = sg[near][:, None]
                zlo = np.sqrt(np.maximum(0.0, -M - sn))
                zhi = np.sqrt(M - sn)
                z = zlo + (zhi - zlo) * self.x[None, :]
                sv = np.clip(sn + z * z, -M, M)
                vals = self._gfun(nu)(sv)
                res[near] = 2.0 * (zhi - zlo)[:, 0] * (vals @ self.w)
            if np.any(far):
                sf = sg[far][:, None]
                sv = -M + 2.0 * M * self.x[None, :]
                d = sv - sf
                # differentiate the smooth kernel (s - sigma)^(-1/2) instead of g
                kern = (1.0, 0.5, 0.75)[nu] * d ** (-0.5 - nu)
                res[far] = 2.0 * M * ((self.g(sv) * kern) @ self.w)
            out[start:start + chunk] = PREFACTOR * res
        return out


@dataclass
class RadiationField:
    sigma_grid: np.ndarray
    F0: np.ndarray
    F0_prime: np.ndarray
    F0_double_prime: np.ndarray
    rho0: float
    min_F0_prime: float
    rho0_tilde: float
    min_F0F0_prime: float
    tau0: float
    nu0: float
    M: float
    diagnostics: dict = field(default_factory=dict)
    _integrand: _AbelIntegrand | None = field(default=None, repr=False)
    _splines: tuple | None = field(default=None, repr=False)

    @property
    def is_trivial(self) -> bool:
        return not np.any(self.F0)

    def __call__(self, sigma, nu: int = 0):
        """F0^(nu)(sigma): splines of the tabulated quadrature values inside the
        grid, direct quadrature to its left, zero for sigma >= M."""
        sigma_arr = np.asarray(sigma, dtype=float)
        s = np.atleast_1d(sigma_arr)
        out = np.zeros_like(s)
        if not self.is_trivial:
            lo = self.sigma_grid[0]
            grid = (s >= lo) & (s < self.M)
            left = s < lo
            if np.any(grid):
                out[grid] = self._splines[nu](s[grid])
            if np.any(left):
                out[left] = self._integrand.evaluate(s[left], nu)
        return out if sigma_arr.ndim else float(out[0])

    def quadrature(self, sigma, nu: int = 0):
        """Direct-quadrature evaluation (slower, used for refinement and checks)."""
        if self._integrand is None:
            return np.zeros_like(np.atleast_1d(np.asarray(sigma, dtype=float)))
        return self._integrand.evaluate(sigma, nu)

    def summary(self) -> dict:
        return {"M": self.M, "rho0": self.rho0, "tau0": self.tau0,
                "rho0_tilde": self.rho0_tilde, "nu0": self.nu0,
                "min_F0_prime": self.min_F0_prime, "min_F0F0_prime": self.min_F0F0_prime}


def sigma_grid(M: float, spec: GridSpec) -> np.ndarray:
    lo_w, hi_w = spec.window if spec.window is not None else (-2.0 * M, M)
    lo_w = max(lo_w, -spec.sigma_max)
    coarse = np.arange(-spec.sigma_max, lo_w, spec.coarse_step)
    nfine = int(round((hi_w - lo_w) / spec.fine_step))
    fine = np.linspace(lo_w, hi_w, nfine + 1)
    parts = [coarse, fine]
    if hi_w < M:
        parts.append(np.arange(hi_w, M, spec.coarse_step)[1:])
        parts.append([M])
    grid = np.unique(np.concatenate(parts))
    return grid[grid <= M]


def _refine_min(fun, grid: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    i = int(np.argmin(values))  # first occurrence: ties go to the smallest sigma
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, grid.size - 1)]
    if b <= a:
        return float(grid[i]), float(values[i])
    res = minimize_scalar(fun, bounds=(a, b), method="bounded", options={"xatol": 1e-10})
    if res.fun <= values[i]:
        return float(res.x), float(res.fun)
    return float(grid[i]), float(values[i])


def _common_support(u0: RadialFunction, u1: RadialFunction) -> float:
    if u0.is_zero:
        return u1.support_radius
    if u1.is_zero:
        return u0.support_radius
    if not math.isclose(u0.support_radius, u1.support_radius, rel_tol=1e-12):
        raise InvalidArgument("u0 and u1 must share the support radius M")
    return u0.support_radius


def radiation_field(u0: RadialFunction, u1: RadialFunction, grid_spec: GridSpec | None = None,
                    derivative_tol: float = 1e-3) -> RadiationField:
    spec = grid_spec or GridSpec()
    M = _common_support(u0, u1)
    grid = sigma_grid(M, spec)
    integrand = _AbelIntegrand(u0, u1, M, spec)
    F = integrand.evaluate(grid, 0)
    F1 = integrand.evaluate(grid, 1)
    F2 = integrand.evaluate(grid, 2)
    F[-1] = F1[-1] = F2[-1] = 0.0
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(F1)) and np.all(np.isfinite(F2))):
        raise NumericFailure("non-finite radiation field values",
                             {"n_bad": int(np.sum(~np.isfinite(F)))})
    if integrand.trivial or not np.any(F):
        zeros = np.zeros_like(grid)
        return RadiationField(grid, zeros, zeros.copy(), zeros.copy(), math.nan, 0.0, math.nan, 0.0,
                              math.inf, math.inf, M)

    splines = (CubicSpline(grid, F), CubicSpline(grid, F1), CubicSpline(grid, F2))
    # cross-check: derivative of the F0 spline against the quadrature of g'
    check = (grid >= -50.0) & (grid <= M - 0.1)
    d_spline = splines[0](grid[check], 1)
    mismatch = float(np.max(np.abs(d_spline - F1[check]))) if np.any(check) else 0.0
    if mismatch > derivative_tol:
        raise NumericFailure("spline and quadrature derivatives of F0 disagree",
                             {"max_mismatch": mismatch})

    rho0, min1 = _refine_min(lambda x: float(integrand.evaluate(x, 1)[0]), grid, F1)
    prod = F * F1
    rho0t, minp = _refine_min(lambda x: float(integrand.evaluate(x, 0)[0] * integrand.evaluate(x, 1)[0]),
                              grid, prod)
    tau0, nu0 = _constants(min1, minp)
    return RadiationField(grid, F, F1, F2, rho0, min1, rho0t, minp, tau0, nu0, M,
                          diagnostics={"derivative_mismatch": mismatch},
                          _integrand=integrand, _splines=splines)


def _constants(min_f1: float, min_prod: float) -> tuple[float, float]:
    tau0 = -1.0 / (2.0 * min_f1) if min_f1 < 0 else math.inf
    nu0 = -1.0 / (2.0 * min_prod) if min_prod < 0 else math.inf
    return tau0, nu0


def lifespan_constants(rf: RadiationField) -> tuple[float, float]:
    """(tau0, nu0) = (-1/(2 min F0'), -1/(2 min F0 F0')), infinite for trivial data."""
    if rf.is_trivial:
        return math.inf, math.inf
    return _constants(rf.min_F0_prime, rf.min_F0F0_prime)


def verify_decay(rf: RadiationField, k: int = 0) -> float:
    """sup over the grid of |F0^(k)(sigma)| (1 + |sigma|)^(1/2 + k)."""
    if k not in (0, 1, 2):
        raise InvalidArgument("k must be 0, 1 or 2")
    vals = (rf.F0, rf.F0_prime, rf.F0_double_prime)[k]
    return float(np.max(np.abs(vals) * (1.0 + np.abs(rf.sigma_grid)) ** (0.5 + k)))
