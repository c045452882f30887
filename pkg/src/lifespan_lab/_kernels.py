"""Compiled right-hand side of the radial solver (mirrors pde_solver.rhs_reference)."""
from __future__ import annotations

import numpy as np
from numba import njit

NG = 3
SCHEMES = {"weno5": 0, "minmod": 1, "mc": 2, "none": 3}


@njit(cache=True, inline="always")
def _weno(v1, v2, v3, v4, v5, floor):
    q0 = (2.0 * v1 - 7.0 * v2 + 11.0 * v3) / 6.0
    q1 = (-v2 + 5.0 * v3 + 2.0 * v4) / 6.0
    q2 = (2.0 * v3 + 5.0 * v4 - v5) / 6.0
    b0 = 13.0 / 12.0 * (v1 - 2.0 * v2 + v3) ** 2 + 0.25 * (v1 - 4.0 * v2 + 3.0 * v3) ** 2
    b1 = 13.0 / 12.0 * (v2 - 2.0 * v3 + v4) ** 2 + 0.25 * (v2 - v4) ** 2
    b2 = 13.0 / 12.0 * (v3 - 2.0 * v4 + v5) ** 2 + 0.25 * (3.0 * v3 - 4.0 * v4 + v5) ** 2
    tau = abs(b0 - b2)
    a0 = 0.1 * (1.0 + (tau / (b0 + floor)) ** 2)
    a1 = 0.6 * (1.0 + (tau / (b1 + floor)) ** 2)
    a2 = 0.3 * (1.0 + (tau / (b2 + floor)) ** 2)
    return (a0 * q0 + a1 * q1 + a2 * q2) / (a0 + a1 + a2)


@njit(cache=True, inline="always")
def _slope(d1, d2, scheme):
    if scheme == 3:
        return 0.5 * (d1 + d2)
    if d1 * d2 <= 0.0:
        return 0.0
    s = 1.0 if d1 > 0 else -1.0
    m = min(abs(d1), abs(d2))
    if scheme == 1:
        return s * m
    return s * min(2.0 * m, 0.5 * abs(d1 + d2))


@njit(cache=True, inline="always")
def _face(e, j, left, scheme, floor):
    """Face value at j + 1/2 from the extended array e."""
    if scheme == 0:
        if left:
            return _weno(e[j - 2], e[j - 1], e[j], e[j + 1], e[j + 2], floor)
        return _weno(e[j + 3], e[j + 2], e[j + 1], e[j], e[j - 1], floor)
    if left:
        return e[j] + 0.5 * _slope(e[j] - e[j - 1], e[j + 1] - e[j], scheme)
    return e[j + 1] - 0.5 * _slope(e[j + 1] - e[j], e[j + 2] - e[j + 1], scheme)


@njit(cache=True)
def rhs_kernel(u, p, q, c, dc, h, r0, s, kappa, on_axis, scheme):
    n = u.size
    ea = np.zeros(n + 2 * NG)
    eb = np.zeros(n + 2 * NG)
    for i in range(n):
        ea[NG + i] = p[i] - c[i] * q[i]
        eb[NG + i] = p[i] + c[i] * q[i]
    for g in range(NG):
        if on_axis:
            ea[NG - 1 - g] = eb[NG + 1 + g]
            eb[NG - 1 - g] = ea[NG + 1 + g]
        else:
            ea[NG - 1 - g] = ea[NG]
            eb[NG - 1 - g] = eb[NG]
    # scale-aware WENO floor, as in the reference implementation
    fa = 0.0
    fb = 0.0
    for j in range(NG - 1, NG + n):
        fa += ea[j] * ea[j]
        fb += eb[j] * eb[j]
    fa = 1e-12 * fa / (n + 1) + 1e-300
    fb = 1e-12 * fb / (n + 1) + 1e-300
    af = np.empty(n + 1)
    bf = np.empty(n + 1)
    for k in range(n + 1):
        j = NG - 1 + k
        left = True
        if s != 0.0:
            if k == 0:
                cf = c[0]
            elif k == n:
                cf = c[n - 1]
            else:
                cf = 0.5 * (c[k - 1] + c[k])
            left = cf >= s
        af[k] = _face(ea, j, left, scheme, fa)
        bf[k] = _face(eb, j, False, scheme, fb)
    du = np.empty(n)
    dp = np.empty(n)
    dq = np.empty(n)
    for i in range(n):
        ar = (af[i + 1] - af[i]) / h
        br = (bf[i + 1] - bf[i]) / h
        ci = c[i]
        qi = q[i]
        du[i] = p[i] + s * qi
        dq[i] = (0.5 * (ci - s) / ci) * ar + (0.5 * (ci + s) / ci) * br - s * dc[i] * qi * qi / ci
        dp[i] = -0.5 * (ci - s) * ar + 0.5 * (ci + s) * br + (kappa - 1.0) * ci * dc[i] * qi * qi
        r = r0 + h * i
        if on_axis and i == 0:
            dp[i] += ci * ci * q[1] / h
            dq[i] = 0.0
        else:
            dp[i] += ci * ci * qi / r
    return du, dp, dq
