import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prandtl_axis.grid import Grid, antiderivative, first_derivative, second_derivative
from prandtl_axis.lift import (LiftCoefficients, LiftParams, erf, far_field, forcing_F,
                               heat_residual, linear_L, phi, phi_y, phi_yy,
                               similarity_variable, verify_lift_properties)

SQPI = math.sqrt(math.pi)


# -- oracles written from the expanded (unsimplified) closed forms ----------

def phi_expanded(t, y, k):
    y = np.asarray(y, dtype=float)
    e = np.array([float(mpmath.erf(v / math.sqrt(4 * t))) for v in y])
    return (k * np.array([float(mpmath.erf(v / math.sqrt(4 * (t + 1)))) for v in y])
            + k * k * t * (y * y / (2 * t) * (e - 1) + e
                           + y / math.sqrt(math.pi * t) * np.exp(-y * y / (4 * t))))


def phi_y_expanded(t, y, k):
    tb = t + 1.0
    g = np.exp(-y * y / (4 * t))
    e = np.array([float(mpmath.erf(v / math.sqrt(4 * t))) for v in y])
    return (k / math.sqrt(math.pi * tb) * np.exp(-y * y / (4 * tb))
            + k * k * (y * (e - 1) + y * y / math.sqrt(4 * math.pi * t) * g
                       + t * (2 / math.sqrt(math.pi * t) * g
                              - y * y / (2 * t * math.sqrt(math.pi * t)) * g)))


def phi_yy_expanded(t, y, k):
    tb = t + 1.0
    g = np.exp(-y * y / (4 * t))
    e = np.array([float(mpmath.erf(v / math.sqrt(4 * t))) for v in y])
    return (-k * y / math.sqrt(4 * math.pi * tb ** 3) * np.exp(-y * y / (4 * tb))
            - k * k * t * (2 * y / math.sqrt(math.pi * t ** 3) * g
                           - y ** 3 / (4 * math.sqrt(math.pi * t ** 5)) * g)
            + k * k * (e - 1 + 2 * y / math.sqrt(math.pi * t) * g
                       - y ** 3 / (4 * math.sqrt(math.pi * t ** 3)) * g))


@pytest.mark.parametrize("z", [0.0, 1e-8, 0.3, 1.0, 2.5, 5.0, 12.0, -0.7])
def test_erf_matches_arbitrary_precision(z):
    assert erf(z) == pytest.approx(float(mpmath.erf(z)), rel=1e-15, abs=1e-300)


@pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("t", [0.01, 0.1, 1.0, 5.0])
def test_closed_forms_match_expanded_forms(kappa, t):
    y = np.linspace(0.0, 12.0, 61)
    p = LiftParams(kappa)
    scale = kappa + kappa ** 2 * (1 + t)
    np.testing.assert_allclose(phi(t, y, p), phi_expanded(t, y, kappa), atol=1e-13 * scale)
    np.testing.assert_allclose(phi_y(t, y, p), phi_y_expanded(t, y, kappa), atol=1e-12 * scale)
    np.testing.assert_allclose(phi_yy(t, y, p), phi_yy_expanded(t, y, kappa),
                               atol=1e-11 * scale)


@pytest.mark.parametrize("t", [0.05, 1.0, 10.0])
def test_derivatives_match_finite_differences(t):
    p = LiftParams(1.3)
    g = Grid(30.0, 6000)
    ph = phi(t, g.nodes, p)
    assert np.max(np.abs(first_derivative(g, ph) - phi_y(t, g.nodes, p))) < 1e-4
    d2 = second_derivative(g, ph)
    assert np.max(np.abs(d2[1:-1] - phi_yy(t, g.nodes, p)[1:-1])) < 1e-4


def test_initial_profile_and_boundary_values():
    p = LiftParams(2.0)
    y = np.linspace(0, 20, 201)
    np.testing.assert_allclose(phi(0.0, y, p), 2.0 * erf(y / 2.0), atol=1e-15)
    for t in (0.0, 0.5, 3.0):
        assert phi(t, 0.0, p) == 0.0
        assert phi(t, 60.0, p) == pytest.approx(far_field(t, p), abs=1e-12)
    t = 0.7
    assert phi_y(t, 0.0, p) == pytest.approx(2.0 / math.sqrt(math.pi * 1.7)
                                             + 2 * 4.0 * math.sqrt(t) / SQPI)
    assert phi_yy(t, 0.0, p) == pytest.approx(-4.0)


def test_similarity_variable():
    assert similarity_variable(1.0, 2.0) == pytest.approx(1.0)
    z = similarity_variable(0.0, np.array([0.0, 1.0]))
    assert z[0] == 0.0 and np.isinf(z[1])


@pytest.mark.parametrize("bad", [-1.0, math.nan, math.inf, True, "1"])
def test_lift_params_validation(bad):
    with pytest.raises(ValueError):
        LiftParams(bad)


def test_negative_arguments_rejected():
    p = LiftParams(1.0)
    with pytest.raises(ValueError):
        phi(-0.1, 1.0, p)
    with pytest.raises(ValueError):
        phi(0.1, -1.0, p)


def test_heat_residual_is_second_order_in_dt():
    p = LiftParams(1.0)
    g = Grid(40.0, 4000)
    r1 = heat_residual(1.0, p, g, dt=1e-4)
    r2 = heat_residual(1.0, p, g, dt=5e-5)
    assert r1 <= 1e-6
    assert 3.5 <= r1 / r2 <= 4.5
    with pytest.raises(ValueError):
        heat_residual(0.0, p, g)


def test_forcing_lower_bound():
    # F >= phi^2 / 2 on every node
    g = Grid(40.0, 4000)
    for k in (0.5, 1.0, 2.0):
        p = LiftParams(k)
        for t in (0.0, 0.3, 2.0):
            F = forcing_F(t, p, g)
            assert np.all(F >= 0.5 * phi(t, g.nodes, p) ** 2 - 1e-10)


def test_L_of_a_constant_is_nonpositive():
    g = Grid(40.0, 4000)
    p = LiftParams(1.0)
    c = 0.37 * np.ones(g.size)
    c[0] = 0.0
    for t in (0.0, 1.0, 4.0):
        # away from the first cell, where the constant is cut to satisfy a(0) = 0
        assert np.max(linear_L(c, t, p, g)[2:]) <= 1e-3


def test_L_requires_vanishing_origin():
    g = Grid(10.0, 100)
    with pytest.raises(ValueError):
        linear_L(np.ones(g.size), 0.5, LiftParams(1.0), g)
    assert linear_L(np.ones(g.size), 0.5, LiftParams(1.0), g, strict=False).shape == (g.size,)


def test_coefficients_consistent():
    g = Grid(20.0, 2000)
    p = LiftParams(1.0)
    c = LiftCoefficients.at(0.4, p, g)
    np.testing.assert_allclose(c.int_phi, antiderivative(g, c.phi))
    np.testing.assert_allclose(c.forcing, forcing_F(0.4, p, g))


def test_property_suite_and_kappa_zero():
    g = Grid(40.0, 4000)
    rep = verify_lift_properties(LiftParams(1.0), [0, 0.1, 1, 5, 10], g)
    assert rep.passed
    assert rep.c_kappa == pytest.approx(1.0)
    assert rep.check("phi_strict_positive").margin > 0
    zero = verify_lift_properties(LiftParams(0.0), [0, 1], g)
    assert zero.passed and zero.c_kappa == 0.0
    assert "phi_far_field.margin" in zero.to_dict()


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 3.0), st.floats(0.0, 20.0), st.floats(0.0, 30.0))
def test_sign_monotonicity_concavity(kappa, t, y):
    p = LiftParams(kappa)
    assert phi(t, y, p) >= 0.0
    assert phi_y(t, y, p) >= -1e-12
    assert phi_yy(t, y, p) <= 1e-12
    assert phi(t, y, p) <= far_field(t, p) * (1 + 1e-12) + 1e-300


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 5.0), st.floats(0.0, 5.0), st.floats(0.1, 3.0))
def test_scaling_in_kappa(t, y, kappa):
    # phi is a polynomial of degree two in kappa
    one = phi(t, y, LiftParams(1.0))
    lin = float(erf(y / math.sqrt(4 * (t + 1))))
    quad = one - lin
    assert phi(t, y, LiftParams(kappa)) == pytest.approx(kappa * lin + kappa ** 2 * quad,
                                                         rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("t", [5e-324, 1e-300, 1e-30])
def test_tiny_times_stay_finite(t):
    p = LiftParams(1.0)
    y = np.array([0.0, 1e-3, 1.0, 40.0])
    with np.errstate(over="raise", invalid="raise", divide="raise"):
        vals = [phi(t, y, p), phi_y(t, y, p), phi_yy(t, y, p)]
    assert all(np.all(np.isfinite(v)) for v in vals)
    np.testing.assert_allclose(vals[0], phi(0.0, y, p), atol=1e-12)
