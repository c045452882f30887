import math
from types import SimpleNamespace

import numpy as np
import pytest

from lifespan_lab import approx_solution as A
from lifespan_lab import pde_solver as ps
from lifespan_lab.asymptotic_profile import profile_derivatives
from lifespan_lab.errors import InvalidArgument, ResourceLimit
from lifespan_lab.radial_profiles import (constant_speed, liquid_crystal_speed, make_poly_bump, polynomial_speed,
                                          zero_profile)
from lifespan_lab.radiation_field import radiation_field

CHI = A.CHI


@pytest.fixture(scope="module")
def ua02(poly_data, poly_rf):
    return A.build_ua("case_I", 0.2, 0.6 * poly_rf.tau0, *poly_data, rf=poly_rf)


@pytest.fixture(scope="module")
def free_ua(poly_data, poly_rf):
    """c = 1 everywhere: the quasilinear terms vanish and only the linear residual is left."""
    return A.build_ua("case_I", 0.2, 0.6 * poly_rf.tau0, *poly_data, wavespeed=constant_speed(), rf=poly_rf)


# --- cutoff --------------------------------------------------------------------------------

def test_cutoff_plateaus():
    assert CHI(1.0) == 1.0 and CHI(2.0) == 0.0
    assert np.all(CHI(np.array([-5.0, 0.0, 0.999])) == 1.0)
    assert np.all(CHI(np.array([2.0, 2.5, 100.0])) == 0.0)


def test_cutoff_monotone_and_bounded():
    s = np.linspace(0.5, 2.5, 4001)
    x = CHI(s)
    assert np.all(np.diff(x) <= 1e-15) and x.min() >= 0.0 and x.max() <= 1.0
    h = s[1] - s[0]
    d3 = np.gradient(CHI(s, 2), h)
    for d in (CHI(s, 1), CHI(s, 2), d3):
        assert np.all(np.isfinite(d)) and np.max(np.abs(d)) < 200.0


@pytest.mark.parametrize("nu", [1, 2])
def test_cutoff_derivatives_match_fd(nu):
    s = np.linspace(1.05, 1.95, 91)
    h = 1e-5
    fd = (CHI(s + h, nu - 1) - CHI(s - h, nu - 1)) / (2 * h)
    assert np.max(np.abs(fd - CHI(s, nu))) < 1e-6


def test_cutoff_order_three_unavailable():
    with pytest.raises(InvalidArgument):
        CHI(1.5, 3)


# --- construction ----------------------------------------------------------------------------

def test_initial_data_reproduced():
    u0, u1 = make_poly_bump(1.0, 3, 1.0), zero_profile(1.0)
    rf = radiation_field(u0, u1)
    ua = A.build_ua("case_I", 0.2, 0.6 * rf.tau0, u0, u1, rf=rf)
    r = np.linspace(0.0, 1.5, 301)
    assert np.max(np.abs(ua(0.0, r) - 0.2 * np.asarray(u0(r)))) < 1e-12


def test_zero_eps_gives_zero(poly_data, poly_rf):
    ua = A.build_ua("case_I", 0.0, 1.0, *poly_data, rf=poly_rf)
    r = np.linspace(0.0, 5.0, 11)
    assert np.all(ua(3.0, r) == 0.0)
    assert all(np.all(d == 0.0) for d in ua.derivatives(3.0, r))
    assert A.residual_norm(ua, 3.0) == 0.0
    assert A.residual_integral(ua).integral == 0.0
    cfg = ps.SimConfig(eps=0.0, wavespeed=polynomial_speed(1.0, 1), u0=poly_data[0], u1=poly_data[1])
    assert A.compare_to_exact(SimpleNamespace(config=cfg, record=object()), ua) == 0.0


def test_no_signal_ahead_of_light_cone(ua02, poly_rf):
    for t in (1.0, 5.0, 12.0, 30.0):
        r = np.linspace(t + poly_rf.M + 0.05, t + 10.0, 50)
        assert np.max(np.abs(ua02(t, r))) < 1e-8


def test_late_branch_is_the_profile(ua02):
    e = 0.2
    t = 3.0 / e
    sigma = np.linspace(-3.0 / (3 * e), 0.9, 200)
    r = t + sigma
    V = profile_derivatives(ua02.fan, float(ua02.tau(t)), sigma)["V"]
    expect = e * CHI(-3 * e * sigma) * V / np.sqrt(r)
    assert np.max(np.abs(ua02(t, r) - expect)) < 1e-14


@pytest.mark.parametrize("kw, exc", [({"case": "global"}, InvalidArgument),
                                     ({"eps": -0.1}, InvalidArgument),
                                     ({"b": 0.0}, InvalidArgument),
                                     ({"b": 10.0}, InvalidArgument),
                                     ({"wavespeed": liquid_crystal_speed(2.0, 3.0)}, InvalidArgument)])
def test_build_validation(poly_data, poly_rf, kw, exc):
    args = {"case": "case_I", "eps": 0.2, "b": 1.0} | kw
    with pytest.raises(exc):
        A.build_ua(args.pop("case"), args.pop("eps"), args.pop("b"), *poly_data, rf=poly_rf, **args)


def test_case_II_horizon_overflow(poly_data, poly_rf):
    ua = A.ApproxSolution(A.CaseTag.CASE_II, 0.01, 10.0, poly_rf, None, None, polynomial_speed(1.0, 2),
                          *poly_data)
    with pytest.raises(InvalidArgument):
        ua.t_horizon


def test_horizon_arithmetic(poly_data, poly_rf):
    ua = A.ApproxSolution(A.CaseTag.CASE_I, 0.1, 1.0, poly_rf, None, None, polynomial_speed(1.0, 1), *poly_data)
    assert ua.t_horizon == pytest.approx(99.0)
    assert float(ua.tau(ua.t_horizon)) == pytest.approx(1.0)


def test_residual_beyond_horizon(ua02):
    with pytest.raises(InvalidArgument):
        A.residual_norm(ua02, ua02.t_horizon * 1.01)
    with pytest.raises(InvalidArgument):
        A.residual_norm(ua02, 5.0, method="spectral")


# --- linear wave ---------------------------------------------------------------------------------

def test_linear_wave_energy(poly_data):
    lw = A.linear_wave(*poly_data, [30.0], refine=2)
    assert np.max(np.abs(lw.energy - lw.energy[0])) / lw.energy[0] < 0.005


def test_linear_wave_zero_data():
    z = zero_profile(1.0)
    lw = A.linear_wave(z, z, [5.0], refine=1)
    assert np.all(lw.w == 0.0) and np.all(lw.wt == 0.0)


def test_linear_wave_budget(poly_data):
    with pytest.raises(ResourceLimit):
        A.linear_wave(*poly_data, [100.0], max_work=1e6)


def test_linear_wave_slice_range(poly_data):
    lw = A.linear_wave(*poly_data, [2.0], refine=1)
    with pytest.raises(InvalidArgument):
        lw.slice(2.5)


def _far_field(w, r, t, rf, sigma_min):
    sigma = r - t
    sel = (sigma >= sigma_min) & (r > 0)
    dev = np.abs(w[sel] - rf(sigma[sel]) / np.sqrt(r[sel]))
    return float(np.max(dev * (1 + t) ** 1.5 / (1 + np.abs(sigma[sel])) ** 0.5))


def test_linear_wave_far_field(poly_data, poly_rf):
    ts = [20.0, 30.0, 40.0]
    lw = A.linear_wave(*poly_data, ts, refine=2)
    vals = [_far_field(lw.slice(t)[0], lw.r, t, poly_rf, -t / 2) for t in ts]
    assert max(vals) < 0.1 and max(vals) / min(vals) < 1.2


def test_linear_far_field_moving_window(poly_data, poly_rf):
    cfg = ps.SimConfig(eps=1.0, wavespeed=constant_speed(), u0=poly_data[0], u1=poly_data[1], dr=0.02,
                       t_max=100.0, record_interval=25.0, blowup_threshold=math.inf)
    rec = ps.run(cfg).record
    vals = []
    for k, t in enumerate(rec.t):
        if t >= 50.0:
            r = rec.r0[k] + rec.dr * np.arange(len(rec.u[k]))
            vals.append(_far_field(rec.u[k], r, t, poly_rf, -10.0))
    assert len(vals) == 3
    assert max(vals) < 0.1 and max(vals) / min(vals) < 1.5


# --- residual --------------------------------------------------------------------------------------

@pytest.mark.parametrize("t", [1.0, 3.0, 5.0])
def test_free_residual_vanishes_early(free_ua, t):
    assert A.residual_norm(free_ua, t) == 0.0


def _lap_mismatch(lw, t):
    """Solver Laplacian of w0 against a fourth-order stencil on the stored w0 samples."""
    w, _, _, lap = lw.slice(t)
    r, h = lw.r, lw.dr
    ext = np.concatenate([w[2:0:-1], w, [0.0, 0.0]])
    rows = np.lib.stride_tricks.sliding_window_view(ext, 5)
    L = rows @ A._C4 / h ** 2
    L[1:] += (rows @ A._D4 / h)[1:] / r[1:]
    L[0] *= 2.0
    d = np.abs(lap - L)
    return d[0], d[r > 0.2].max()


def test_solver_laplacian_converges(poly_data):
    errs = [_lap_mismatch(A.linear_wave(*poly_data, [3.0], refine=k), 3.0) for k in (1, 2, 4)]
    axis, bulk = np.array(errs).T
    assert np.all(bulk[:-1] / bulk[1:] > 3.0)
    assert np.all(axis[:-1] / axis[1:] > 1.8)
    assert 0.2 * bulk[-1] < 1e-4


@pytest.mark.parametrize("t", [12.5, 20.0, 40.0])
def test_residual_methods_agree_late(ua02, t):
    a, b = A.residual_norm(ua02, t), A.residual_norm(ua02, t, "fd")
    assert a == pytest.approx(b, rel=1e-3)


def test_residual_integral_finite(ua02):
    ri = A.residual_integral(ua02, n_early=80, n_late=80)
    assert np.all(np.isfinite(ri.norm)) and 0 < ri.integral < 1.0
    assert ri.t[-1] == pytest.approx(ua02.t_horizon)


def test_pointwise_bound_uniform_in_eps():
    u0, u1 = zero_profile(1.0), make_poly_bump(1.0, 3, 1.0)
    rf = radiation_field(u0, u1)
    sups = []
    for e in (0.2, 0.1):
        ua = A.build_ua("case_I", e, 0.6 * rf.tau0, u0, u1, rf=rf)
        best = 0.0
        for t in np.linspace(0.5, ua.t_horizon, 40):
            r = np.linspace(0.01, t + 2.0, 1500)
            best = max(best, float(np.max(np.abs(ua(t, r)) * np.sqrt(1 + t) * np.sqrt(1 + np.abs(r - t)))) / e)
        sups.append(best)
    assert sups[0] == pytest.approx(sups[1], rel=0.1)


# --- comparison against a run ------------------------------------------------------------------------

def _mirror_run(ua, poly_data):
    """A fake report whose record stores u_a itself."""
    cfg = ps.SimConfig(eps=ua.eps, wavespeed=polynomial_speed(1.0, 1), u0=poly_data[0], u1=poly_data[1])
    t = np.array([0.5, 3.0, 12.0, 30.0])
    r0 = np.zeros_like(t)
    r = 0.02 * np.arange(2000)
    u, p, q = zip(*(ua.derivatives(float(tk), r) for tk in t))
    return SimpleNamespace(config=cfg, record=SimpleNamespace(t=t, r0=r0, dr=0.02, u=u, p=p, q=q))


def test_compare_self_is_zero(ua02, poly_data):
    assert A.compare_to_exact(_mirror_run(ua02, poly_data), ua02) == 0.0


def test_compare_rejects_mismatch(ua02, poly_data):
    run = _mirror_run(ua02, poly_data)
    bad = SimpleNamespace(config=ps.SimConfig(eps=0.1, wavespeed=polynomial_speed(1.0, 1),
                                              u0=poly_data[0], u1=poly_data[1]), record=run.record)
    with pytest.raises(InvalidArgument):
        A.compare_to_exact(bad, ua02)
    with pytest.raises(InvalidArgument):
        A.compare_to_exact(SimpleNamespace(config=run.config, record=None), ua02)
    var = SimpleNamespace(config=ps.SimConfig(eps=0.2, wavespeed=polynomial_speed(1.0, 1), u0=poly_data[0],
                                              u1=poly_data[1], form="variational"), record=run.record)
    with pytest.raises(InvalidArgument):
        A.compare_to_exact(var, ua02)


# --- Klainerman fields -------------------------------------------------------------------------------

@pytest.fixture
def tr_grid():
    return np.linspace(1.0, 3.0, 41), np.linspace(0.5, 4.0, 71)


@pytest.mark.parametrize("which, f, expect", [
    ("S", lambda T, R: T * R, lambda T, R: 2 * T * R),
    ("H", lambda T, R: T ** 2 + R ** 2, lambda T, R: 4 * T * R),
    ("dt", lambda T, R: T ** 2 * R, lambda T, R: 2 * T * R),
    ("dr", lambda T, R: T * R ** 2, lambda T, R: 2 * T * R),
    ("S", lambda T, R: np.full_like(T, 3.0), lambda T, R: np.zeros_like(T)),
])
def test_z_field_polynomials(tr_grid, which, f, expect):
    t, r = tr_grid
    T, R = np.meshgrid(t, r, indexing="ij")
    assert np.allclose(A.z_field(f(T, R), t, r, which), expect(T, R), atol=1e-10)


def test_z_field_validation(tr_grid):
    t, r = tr_grid
    with pytest.raises(InvalidArgument):
        A.z_field(np.zeros((3, 3)), t, r, "S")
    with pytest.raises(InvalidArgument):
        A.z_field(np.zeros((t.size, r.size)), t, r, "L")
