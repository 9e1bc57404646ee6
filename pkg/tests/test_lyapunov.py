import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from prandtl_axis.grid import Grid
from prandtl_axis.lift import LiftParams
from prandtl_axis.lyapunov import (G, BoundConstants, Quadrature, bound_constants,
                                   check_bounds, choose_amplitude, curvature_weights,
                                   decompose_rhs, fit_constant, numeric_rate,
                                   pointwise_constants, riccati_lower_bound, synthetic_fields,
                                   threshold_check)
from prandtl_axis.solver import SolverConfig, State, initial_datum, run


class FieldState:
    def __init__(self, a, t=0.0):
        self.a, self.t = a, t


def bernoulli_blowup(G0, C):
    """Exact blowup time of ``G' = G^2/C - C (1+t) G``."""
    def gap(T):
        return integrate.quad(lambda s: math.exp(-C * (s + s * s / 2)), 0, T,
                              epsabs=1e-14, epsrel=1e-13)[0] - C / G0
    return optimize.brentq(gap, 0.0, 50.0, xtol=1e-14)


def bernoulli_value(t, G0, C):
    integral = integrate.quad(lambda s: math.exp(-C * (s + s * s / 2)), 0, t,
                              epsabs=1e-14, epsrel=1e-13)[0]
    return 1.0 / (math.exp(C * (t + t * t / 2)) * (1.0 / G0 - integral / C))


def test_G_of_zero_and_constant(paper_weight, grid40):
    assert G(np.zeros(grid40.size), paper_weight, grid40) == 0.0
    # a constant field integrates the whole weight
    assert G(np.ones(grid40.size), paper_weight, grid40) == pytest.approx(paper_weight.c_1,
                                                                          rel=1e-5)


def test_G0_linear_in_amplitude_and_resolved(paper_weight, unit_kappa):
    vals = {}
    for n in (4000, 8000):
        g = Grid(40.0, n)
        vals[n] = [G(initial_datum("gaussian_bump", A, g, unit_kappa), paper_weight, g)
                   for A in (5.0, 10.0)]
    assert vals[4000][1] == pytest.approx(2 * vals[4000][0], rel=1e-12)
    assert vals[4000][1] == pytest.approx(vals[8000][1], rel=1e-5)
    assert vals[4000][1] == pytest.approx(0.0829, abs=1e-4)


def test_curvature_weights_exact_for_linear_fields(paper_weight):
    g = Grid(20.0, 1000)
    q = curvature_weights(paper_weight, g)
    w, w1 = paper_weight.w, paper_weight.w1
    Y = g.y_max
    assert q.sum() == pytest.approx(w1(Y) - w1(0.0), abs=1e-13)
    assert q @ g.nodes == pytest.approx(Y * w1(Y) - w(Y) + w(0.0), abs=1e-13)


def test_tail_curvature_closed_form(paper_weight):
    g = Grid(20.0, 1000)
    quad = Quadrature(paper_weight, g)
    for start, slope in ((1.0, 0.0), (0.5, -0.02), (2.0, 0.3)):
        num = integrate.quad(lambda y: (start + slope * (y - 20.0)) ** 2 * paper_weight.w2(y),
                             20.0, np.inf, epsrel=1e-12)[0]
        assert quad.tail_curvature(start, slope) == pytest.approx(num, rel=1e-9)


def test_zero_state_decomposition(paper_weight, grid40, unit_kappa):
    d = decompose_rhs(FieldState(np.zeros(grid40.size)), paper_weight, unit_kappa, grid40)
    assert (d.G, d.I1, d.I2, d.I3, d.I4) == (0.0, 0.0, 0.0, 0.0, 0.0)
    assert d.F_term > 0
    k = BoundConstants(1.0, 1.0, 1.0, 0.5, 1.0)
    m = check_bounds(d, k)
    assert m.as_tuple() == (0.0, 0.0, 0.0, 0.0)


def test_structural_inequalities_on_random_fields(paper_weight, grid40, unit_kappa):
    k = bound_constants(paper_weight, unit_kappa, grid40, 1.0)
    rng = np.random.default_rng(7)
    for a in synthetic_fields(grid40, rng, 100):
        d = decompose_rhs(FieldState(a), paper_weight, unit_kappa, grid40, warn=False)
        assert d.I2 >= d.G ** 2 / k.c_1 * (1 - 1e-12)
        assert d.I3 <= 4 * k.beta * d.I2 + 1e-9 * max(d.I2, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_cauchy_schwarz_any_field(seed):
    w = _weight()
    g = Grid(40.0, 2000)
    rng = np.random.default_rng(seed)
    a = rng.normal(size=g.size) * np.exp(-g.nodes / 5)
    a[0] = 0.0
    d = decompose_rhs(FieldState(a), w, LiftParams(1.0), g, warn=False)
    assert d.I2 >= d.G ** 2 / w.c_1 - 1e-12 * d.I2


_W = {}


def _weight():
    from prandtl_axis.weight import WeightSpec, build_weight
    if "w" not in _W:
        _W["w"] = build_weight(WeightSpec.paper_default())
    return _W["w"]


def test_bound_constants(paper_weight, grid40, unit_kappa):
    k = bound_constants(paper_weight, unit_kappa, grid40, 1.0)
    assert k.c_kappa == pytest.approx(1.0)
    assert k.assembled == pytest.approx(max(k.c_f + 4 * k.c_kappa, k.c_1 / (2 * (1 - k.beta))))
    assert set(k.to_dict()) >= {"c_f", "bar_c_f", "c_1", "beta", "c_kappa", "C_assembled"}


@pytest.fixture(scope="module")
def moderate_run():
    w = _weight()
    res = run(SolverConfig(n=4000, amplitude=10.0, t_max=0.5), LiftParams(1.0), weight=w)
    return res


def test_bounds_hold_along_moderate_run(moderate_run):
    tr = moderate_run.trace
    assert np.all(tr.G > 0)
    for name, m in tr.margins.items():
        assert np.min(m) >= 0, name


def test_rate_identity_along_moderate_run(moderate_run):
    tr = moderate_run.trace
    rel = np.abs(tr.dG_dt - tr.rate) / np.abs(tr.rate)
    assert np.max(rel[1:-1]) < 5e-3


def test_fitted_constant_stable_under_refinement(moderate_run):
    c1 = fit_constant(moderate_run.trace)
    fine = run(SolverConfig(n=8000, amplitude=10.0, t_max=0.5), LiftParams(1.0),
               weight=_weight())
    c2 = fit_constant(fine.trace)
    assert c1 >= 1.0
    assert abs(c2 - c1) <= 0.2 * c1


def test_fit_recovers_exact_riccati_constant():
    C = 3.0
    sol = riccati_lower_bound(40.0, C, (0.0, 0.05))
    t, g = sol.t, sol.values
    c = pointwise_constants(t, g, numeric_rate(t, g))
    assert np.median(c) == pytest.approx(C, rel=1e-4)


def test_numeric_rate_exact_for_quadratics():
    t = np.cumsum(np.r_[0.0, np.random.default_rng(0).uniform(0.1, 1.0, 20)])
    np.testing.assert_allclose(numeric_rate(t, 3 * t * t - t), 6 * t - 1, atol=1e-10)
    assert np.all(np.isnan(numeric_rate([0.0, 1.0], [1.0, 2.0])))


def test_riccati_zero_is_equilibrium():
    sol = riccati_lower_bound(0.0, 1.0, (0.0, 10.0))
    assert np.all(sol.values == 0.0) and sol.blowup_time is None


def test_riccati_boundary_case_matches_exact_blowup():
    sol = riccati_lower_bound(4.0, 1.0, (0.0, 5.0))
    exact = bernoulli_blowup(4.0, 1.0)
    assert exact < 1.0
    assert sol.blowup_time == pytest.approx(exact, rel=1e-3)
    half = riccati_lower_bound(4.0, 1.0, (0.0, 5.0), rel_step=5e-4)
    assert half.blowup_time == pytest.approx(sol.blowup_time, rel=1e-2)
    for t in (0.05, 0.15, 0.25):
        assert sol.at([t])[0] == pytest.approx(bernoulli_value(t, 4.0, 1.0), rel=1e-6)


@pytest.mark.parametrize("C", [1.0, 2.0, 5.0])
def test_riccati_threshold_data_blow_up(C):
    t1 = riccati_lower_bound(4 * C * C, C, (0.0, 50.0)).blowup_time
    t2 = riccati_lower_bound(8 * C * C, C, (0.0, 50.0)).blowup_time
    assert t1 is not None and math.isfinite(t1)
    assert t2 < t1
    assert t1 == pytest.approx(bernoulli_blowup(4 * C * C, C), rel=1e-3)


def test_riccati_subthreshold_decays():
    sol = riccati_lower_bound(0.5, 1.0, (0.0, 5.0))
    assert sol.blowup_time is None and sol.values[-1] < 0.5


def test_riccati_input_validation():
    with pytest.raises(ValueError):
        riccati_lower_bound(1.0, 0.5, (0, 1))
    with pytest.raises(ValueError):
        riccati_lower_bound(-1.0, 1.0, (0, 1))


@pytest.mark.parametrize("G0, C, expected", [(400, 10, True), (399.9, 10, False), (4, 1, True)])
def test_threshold_check(G0, C, expected):
    assert threshold_check(G0, C) is expected


def test_trace_csv(tmp_path, moderate_run):
    tr = moderate_run.trace
    tr.attach_riccati(fit_constant(tr))
    path = tmp_path / "lyap.csv"
    tr.write_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "G", "dG_dt_numeric", "I1", "I2", "I3", "I4", "F_term",
                       "margin_I1", "margin_I2", "margin_I3", "margin_I4", "riccati_G"]
    assert len(rows) == len(tr) + 1
    assert np.all(np.diff(tr.t) > 0)


@pytest.mark.slow
def test_choose_amplitude_reaches_threshold():
    cfg = SolverConfig(n=2000, t_max=5.0, blowup_threshold=1e4)
    choice = choose_amplitude(cfg, LiftParams(1.0), _weight())
    assert choice.above_threshold
    assert choice.result.report.outcome == "blewup"
    with pytest.raises(ValueError):
        choose_amplitude(cfg, LiftParams(1.0), _weight(), headroom=0.5)
