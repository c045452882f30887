import math

import numpy as np
import pytest
from oracles import GOLDEN_F0_0, f0_poly3, radon_poly3

from lifespan_lab.errors import InvalidArgument
from lifespan_lab.radial_profiles import make_bump, make_poly_bump, zero_profile
from lifespan_lab.radiation_field import (GridSpec, RadiationField, lifespan_constants, radiation_field,
                                          radon_transform, verify_decay)
from lifespan_lab.radiation_field import _constants


def test_radon_poly_closed_form():
    f = make_poly_bump(1.0, 3)
    assert radon_transform(f, 0.0) == pytest.approx(32.0 / 35.0, rel=1e-13)
    s = np.linspace(-0.99, 0.99, 41)
    assert np.allclose(radon_transform(f, s), radon_poly3(s), atol=1e-12)


@pytest.mark.parametrize("f", [make_poly_bump(1.0, 3), make_bump(1.3, 0.7)])
def test_radon_even_and_supported(f):
    s = np.linspace(0.0, 2.0, 37)
    assert np.allclose(radon_transform(f, s), radon_transform(f, -s), atol=1e-15)
    assert radon_transform(f, f.M) == 0.0
    assert np.all(radon_transform(f, np.array([f.M, f.M + 0.5])) == 0.0)


def test_radon_of_zero():
    assert np.all(radon_transform(zero_profile(1.0), np.linspace(-1, 1, 5)) == 0.0)


def test_zero_data_field():
    rf = radiation_field(zero_profile(1.0), zero_profile(1.0))
    assert rf.is_trivial
    assert rf.tau0 == math.inf and rf.nu0 == math.inf
    assert lifespan_constants(rf) == (math.inf, math.inf)
    assert verify_decay(rf, 0) == 0.0


def test_golden_F0_at_zero(poly_rf):
    assert poly_rf(0.0) == pytest.approx(GOLDEN_F0_0, rel=1e-12)
    assert f0_poly3(0.0) == pytest.approx(GOLDEN_F0_0, rel=1e-12)


@pytest.mark.parametrize("sigma", [-150.0, -30.0, -3.0, -1.0, -0.4, 0.3, 0.9])
def test_F0_against_quadpack(poly_rf, sigma):
    assert poly_rf(sigma) == pytest.approx(f0_poly3(sigma), rel=1e-9, abs=1e-13)


def test_F0_support(poly_rf):
    assert poly_rf(np.array([1.0, 1.5, 10.0])).tolist() == [0.0, 0.0, 0.0]
    assert poly_rf.F0[-1] == 0.0 and poly_rf.sigma_grid[-1] == 1.0


def test_constants_positive(poly_rf):
    assert poly_rf.min_F0_prime < 0 and poly_rf.min_F0F0_prime < 0
    assert poly_rf.tau0 == pytest.approx(-1.0 / (2.0 * poly_rf.min_F0_prime))
    assert poly_rf.nu0 == pytest.approx(-1.0 / (2.0 * poly_rf.min_F0F0_prime))
    assert lifespan_constants(poly_rf) == (poly_rf.tau0, poly_rf.nu0)


def test_minimizers_are_stationary(poly_rf):
    h = 1e-4
    for rho, fun in ((poly_rf.rho0, lambda x: poly_rf.quadrature(np.array([x]), 1)[0]),
                     (poly_rf.rho0_tilde, lambda x: (poly_rf.quadrature(np.array([x]), 0)
                                                     * poly_rf.quadrature(np.array([x]), 1))[0])):
        assert fun(rho) <= fun(rho - h) and fun(rho) <= fun(rho + h)


@pytest.mark.parametrize("m1, mp, tau0, nu0", [(-0.25, -0.1, 2.0, 5.0), (-1.0, -0.5, 0.5, 1.0),
                                               (0.0, 0.0, math.inf, math.inf)])
def test_constants_arithmetic(m1, mp, tau0, nu0):
    assert _constants(m1, mp) == (tau0, nu0)


def test_linearity(poly_data):
    u0, u1 = poly_data
    extra = make_poly_bump(1.0, 4, 0.5)
    bump0 = make_poly_bump(1.0, 3, 0.3)
    from lifespan_lab.radial_profiles import added

    both = radiation_field(bump0, added(u1, extra))
    a = radiation_field(bump0, u1)
    b = radiation_field(zero_profile(1.0), extra)
    s = np.linspace(-40.0, 1.0, 801)
    assert np.max(np.abs(both(s) - a(s) - b(s))) < 1e-8


def test_grid_refinement_stable(poly_data):
    coarse = radiation_field(*poly_data, grid_spec=GridSpec(sigma_max=60.0))
    fine = radiation_field(*poly_data, grid_spec=GridSpec(sigma_max=60.0).refined())
    s = np.linspace(-50.0, 1.0, 2001)
    assert np.max(np.abs(coarse(s) - fine(s))) < 1e-6


def test_spline_derivative_matches_quadrature(poly_rf):
    assert poly_rf.diagnostics["derivative_mismatch"] < 1e-5
    s = np.linspace(-50.0, 0.9, 500)
    spline_d = poly_rf._splines[0](s, 1)
    assert np.max(np.abs(spline_d - poly_rf.quadrature(s, 1))) < 1e-5


@pytest.mark.parametrize("k", [0, 1, 2])
def test_decay_stable_under_truncation(poly_data, k):
    a = verify_decay(radiation_field(*poly_data, grid_spec=GridSpec(sigma_max=100.0)), k)
    b = verify_decay(radiation_field(*poly_data, grid_spec=GridSpec(sigma_max=200.0)), k)
    assert math.isfinite(a) and abs(a - b) <= 0.05 * b


def test_decay_rejects_order():
    rf = radiation_field(zero_profile(1.0), zero_profile(1.0))
    with pytest.raises(InvalidArgument):
        verify_decay(rf, 3)


def test_mismatched_supports():
    with pytest.raises(InvalidArgument):
        radiation_field(make_bump(1.0), make_bump(2.0))


def test_summary_keys(poly_rf):
    assert set(poly_rf.summary()) >= {"M", "rho0", "tau0", "rho0_tilde", "nu0"}
    assert isinstance(poly_rf, RadiationField)
