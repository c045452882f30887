"""Independent oracles used by the test suites (no code shared with the package)."""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

# F0(0) for u0 = 0, u1 = (1 - r^2)^3: (1/(2 pi sqrt 2)) int_0^1 (32/35)(1 - s^2)^(7/2) s^(-1/2) ds,
# frozen from a 30-digit mpmath adaptive quadrature.
GOLDEN_F0_0 = 0.13080830880871022


def radon_poly3(s):
    """R(s; (1 - r^2)^3) = (32/35) (1 - s^2)^(7/2) for |s| < 1."""
    s = np.abs(np.asarray(s, dtype=float))
    return np.where(s < 1.0, 32.0 / 35.0 * np.clip(1.0 - s * s, 0.0, None) ** 3.5, 0.0)


def f0_poly3(sigma: float) -> float:
    """F0(sigma) for u0 = 0, u1 = poly(1, 3) by QUADPACK with the algebraic weight (s - sigma)^(-1/2)."""
    if sigma >= 1.0:
        return 0.0
    if sigma > -1.0:
        val, _ = quad(lambda s: float(radon_poly3(s)), sigma, 1.0, weight="alg", wvar=(-0.5, 0.0),
                      epsabs=1e-14, epsrel=1e-12, limit=200)
    else:
        val, _ = quad(lambda s: float(radon_poly3(s)) / math.sqrt(s - sigma), -1.0, 1.0,
                      epsabs=1e-14, epsrel=1e-12, limit=200)
    return val / (2.0 * math.pi * math.sqrt(2.0))


def leapfrog_radial(eps, u1, c, t_end, h=0.005, r_max=None, cfl=0.25):
    """Second-order conservative leapfrog for u_tt = (1/r)(r c(u)^2 u_r)_r, u(0) = 0, u_t(0) = eps u1.

    Returns (r, u, u_t) at t_end (u_t by a centered difference of the last three levels)."""
    M = 1.0
    r_max = r_max or t_end + M + 2.0
    n = int(round(r_max / h)) + 1
    r = h * np.arange(n)
    rh = r[:-1] + 0.5 * h

    def lap(u):
        c2 = c(0.5 * (u[:-1] + u[1:])) ** 2
        flux = rh * c2 * np.diff(u) / h
        out = np.zeros_like(u)
        out[1:-1] = (flux[1:] - flux[:-1]) / (h * r[1:-1])
        # axis: (1/r)(r f)_r -> 2 f_r, flux through the half cell of radius h/2
        out[0] = 4.0 * c(0.5 * (u[0] + u[1])) ** 2 * (u[1] - u[0]) / h ** 2
        return out

    steps = int(math.ceil(t_end / (cfl * h)))
    dt = t_end / steps
    u_prev = np.zeros(n)
    v0 = eps * u1(r)
    u = u_prev + dt * v0 + 0.5 * dt * dt * lap(u_prev)
    for _ in range(steps - 1):
        u_next = 2.0 * u - u_prev + dt * dt * lap(u)
        u_prev, u = u, u_next
    u_next = 2.0 * u - u_prev + dt * dt * lap(u)
    return r, u, (u_next - u_prev) / (2.0 * dt)


def riccati_closed_form_blowup(a0: float, w0: float) -> float:
    """w' = a0 w^2 with w(0) = w0 > 0 blows up at 1/(a0 w0)."""
    return 1.0 / (a0 * w0)


def linear_ode_closed_form(t, a1, a2, w0):
    """w' = a1(t) w + a2(t): w = e^{A}(w0 + int e^{-A} a2), A = int a1 (fine trapezoid)."""
    from scipy.integrate import cumulative_trapezoid

    A = cumulative_trapezoid(a1, t, initial=0.0)
    return np.exp(A) * (w0 + cumulative_trapezoid(np.exp(-A) * a2, t, initial=0.0))
