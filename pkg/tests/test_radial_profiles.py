import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lifespan_lab.errors import InvalidArgument
from lifespan_lab.radial_profiles import (CaseTag, RadialFunction, canonical_wavespeeds, classify_wavespeed,
                                          constant_speed, exp_half_speed, liquid_crystal_speed, load_profile_csv,
                                          make_bump, make_poly_bump, parse_profile, parse_wavespeed,
                                          polynomial_speed, zero_profile)


@pytest.mark.parametrize("r, expected", [(0.0, 1.0), (1.0, 0.0), (1.5, 0.0)])
def test_bump_values(r, expected):
    assert make_bump(1.0, 1.0)(r) == pytest.approx(expected, abs=1e-15)


def test_bump_closed_form_off_center():
    assert make_bump(2.0, 0.5)(1.0) == pytest.approx(0.5 * math.exp(1.0 - 4.0 / 3.0), rel=1e-14)
    assert make_bump(2.0, 0.5)(1.0) == pytest.approx(0.35826, abs=1e-5)


def test_bump_rejects_nonpositive_support():
    with pytest.raises(InvalidArgument):
        make_bump(0.0)
    with pytest.raises(InvalidArgument):
        make_bump(-1.0)


def test_bump_flat_at_boundary():
    f = make_bump(1.0)
    h = 1e-3
    r = 1.0 + h * np.arange(-4, 5)
    v = f(r)
    for k in range(1, 5):
        d = np.diff(v, k) / h ** k
        assert np.max(np.abs(d)) < 1e-8


@pytest.mark.parametrize("r, expected", [(0.0, 1.0), (0.5, 0.421875), (2.0, 0.0)])
def test_poly_bump_values(r, expected):
    assert make_poly_bump(1.0, 3)(r) == pytest.approx(expected, abs=1e-15)


def test_poly_bump_rejects_low_power():
    with pytest.raises(InvalidArgument):
        make_poly_bump(1.0, 1)


@pytest.mark.parametrize("f", [make_bump(1.0, 2.0), make_poly_bump(1.5, 4, 0.7)])
def test_exact_derivatives_match_differences(f):
    r = np.linspace(0.05, 0.9 * f.M, 50)
    h = 1e-5
    d1 = (f(r + h) - f(r - h)) / (2 * h)
    d2 = (f(r + h) - 2 * f(r) + f(r - h)) / h ** 2
    assert np.allclose(f(r, 1), d1, atol=1e-7)
    assert np.allclose(f(r, 2), d2, atol=1e-4)


def test_tabulated_profile_interpolation_is_c2():
    r = np.linspace(0.0, 1.0, 201)
    f = RadialFunction(r, (1 - r ** 2) ** 3, 1.0)
    x = np.linspace(0.0, 0.99, 1000)
    assert np.max(np.abs(f(x) - (1 - x ** 2) ** 3)) < 1e-6
    knots = r[1:-1]
    for nu in (0, 1, 2):
        left, right = f(knots - 1e-9, nu), f(knots + 1e-9, nu)
        assert np.max(np.abs(left - right)) < 1e-5
    assert f(1.2) == 0.0


def test_tabulated_profile_validates_samples():
    with pytest.raises(InvalidArgument):
        RadialFunction(np.array([0.1, 0.2, 0.3, 0.4]), np.zeros(4), 1.0)
    with pytest.raises(InvalidArgument):
        RadialFunction(np.array([0.0, 0.2, 0.2, 0.4]), np.zeros(4), 1.0)


def test_csv_round_trip(tmp_path):
    r = np.linspace(0.0, 1.0, 101)
    p = tmp_path / "prof.csv"
    np.savetxt(p, np.column_stack([r, (1 - r ** 2) ** 3]), delimiter=",", header="r,value", comments="")
    f = load_profile_csv(p)
    assert f.M == pytest.approx(1.0)
    assert f(0.5) == pytest.approx(0.421875, abs=1e-6)
    g = parse_profile(f"csv:path={p}")
    assert g(0.5) == pytest.approx(f(0.5))


@pytest.mark.parametrize("spec, value_at_half", [("zero", 0.0), ("poly:M=1,power=3,amp=2", 0.84375),
                                                 ("bump:M=1,amp=1", math.exp(1 - 1 / 0.75))])
def test_presets(spec, value_at_half):
    assert parse_profile(spec)(0.5) == pytest.approx(value_at_half, rel=1e-14)


def test_unknown_preset():
    with pytest.raises(InvalidArgument):
        parse_profile("gauss:M=1")


# --- wave speeds ---------------------------------------------------------------------

@pytest.mark.parametrize("c", canonical_wavespeeds() + [liquid_crystal_speed(0.5, 3.0)], ids=lambda c: c.label)
def test_wavespeed_derivatives_consistent(c):
    u = np.linspace(-0.5, 0.5, 101)
    h = 1e-5
    assert np.max(np.abs((c.c(u + h) - c.c(u - h)) / (2 * h) - c.dc(u))) < 1e-6
    assert np.max(np.abs((c.dc(u + h) - c.dc(u - h)) / (2 * h) - c.d2c(u))) < 1e-6


def test_canonical_values():
    e = exp_half_speed()
    assert float(e.dc(0.0)) == pytest.approx(0.5)
    sq = polynomial_speed(1.0, 2)
    assert float(sq.dc(0.0)) == 0.0 and float(sq.d2c(0.0)) == 2.0
    lc = liquid_crystal_speed(1.0, 2.0)
    assert float(lc.c(0.0)) == 1.0 and float(lc.d2c(0.0)) == pytest.approx(2.0)
    h = 1e-4
    fd = (float(lc.c(h)) - 2 * float(lc.c(0.0)) + float(lc.c(-h))) / h ** 2
    assert fd == pytest.approx(2.0, rel=1e-6)


def test_liquid_crystal_needs_distinct_constants():
    with pytest.raises(InvalidArgument):
        liquid_crystal_speed(1.0, 1.0)


@pytest.mark.parametrize("c, tag", [(exp_half_speed(), CaseTag.CASE_I),
                                    (liquid_crystal_speed(1.0, 2.0), CaseTag.CASE_II),
                                    (polynomial_speed(1.0, 3), CaseTag.GLOBAL),
                                    (polynomial_speed(1.0, 1), CaseTag.CASE_I),
                                    (polynomial_speed(1.0, 2), CaseTag.CASE_II),
                                    (constant_speed(), CaseTag.GLOBAL)])
def test_classification(c, tag):
    assert classify_wavespeed(c) is tag


@settings(max_examples=50, deadline=None)
@given(k=st.floats(1e-6, 1e3) | st.floats(-1e3, -1e-6))
def test_classification_general_coefficients(k):
    assert classify_wavespeed(polynomial_speed(k, 1)) is CaseTag.CASE_I
    assert classify_wavespeed(polynomial_speed(k, 2)) is CaseTag.CASE_II


@pytest.mark.parametrize("spec, label", [("1+u", "1+u"), ("1+u^2", "1+u^2"), ("exp", "exp(u/2)"),
                                         ("lc:alpha=1,beta=2", "1cos^2u+2sin^2u"), ("1", "1")])
def test_parse_wavespeed(spec, label):
    assert parse_wavespeed(spec).label == label


def test_zero_speed_rejected():
    with pytest.raises(InvalidArgument):
        polynomial_speed(1.0, 0)
    with pytest.raises(InvalidArgument):
        parse_wavespeed("u^7")


def test_excess_avoids_cancellation():
    c = polynomial_speed(1.0, 2)
    assert float(c.c_minus_c0(1e-100)) == pytest.approx(1e-200)
    assert float(c.c2_minus_c02(1e-100)) == pytest.approx(2e-200)


def test_zero_profile():
    z = zero_profile(2.0)
    assert z.is_zero and z.M == 2.0 and z(0.3) == 0.0
