import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from prandtl_axis import _kernels_py as ref
from prandtl_axis import kernels

try:
    from prandtl_axis import _ckernels as comp
except ImportError:  # pragma: no cover
    comp = None

needs_compiled = pytest.mark.skipif(comp is None, reason="compiled kernels not built")
finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")


@needs_compiled
@settings(max_examples=50, deadline=None)
@given(arrays(float, st.integers(5, 200), elements=finite), st.floats(1e-3, 1.0))
def test_difference_and_integral_kernels_agree(u, h):
    for name in ("cumtrapz", "d1", "d2"):
        a = getattr(ref, name)(u, h)
        b = getattr(comp, name)(u, h)
        scale = (1 + np.max(np.abs(u))) / h ** 2
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12 * scale)


@needs_compiled
@settings(max_examples=50, deadline=None)
@given(arrays(float, st.integers(5, 200), elements=finite), st.floats(1e-3, 1.0),
       st.floats(0.0, 3.0))
def test_transport_kernels_agree(b, h, kappa):
    a = ref.transport_b(b, h, kappa)
    c = comp.transport_b(b, h, kappa)
    scale = (1 + np.max(np.abs(b))) ** 2 * (1 + b.size * h) / h
    for x, y in zip(a[:3], c[:3]):
        np.testing.assert_allclose(x, y, rtol=0, atol=1e-11 * scale)
    assert a[3] == pytest.approx(c[3], rel=1e-12, abs=1e-12)


@needs_compiled
@settings(max_examples=50, deadline=None)
@given(st.integers(3, 200), st.floats(0.5, 2.0), st.floats(1e-6, 1.0), st.floats(1e-3, 1.0),
       st.floats(-50, 50), st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2 ** 31))
def test_implicit_solves_agree(n, alpha, dt, h, vscale, left, right, seed):
    rng = np.random.default_rng(seed)
    rhs = rng.normal(size=n)
    vel = vscale * rng.normal(size=n)
    a = ref.implicit_solve(rhs, alpha, dt, h, vel, left, right)
    c = comp.implicit_solve(rhs, alpha, dt, h, vel, left, right)
    np.testing.assert_allclose(a, c, rtol=1e-9, atol=1e-9 * (1 + np.max(np.abs(a))))


@pytest.mark.parametrize("impl", [ref] + ([comp] if comp is not None else []))
def test_implicit_solve_satisfies_system(impl):
    rng = np.random.default_rng(1)
    n, h, dt, alpha = 40, 0.1, 0.01, 1.5
    rhs = rng.normal(size=n)
    vel = rng.normal(size=n) * 10
    x = impl.implicit_solve(rhs, alpha, dt, h, vel, 0.3, -1.0)
    assert x[0] == 0.3 and x[-1] == -1.0
    lap = (x[2:] - 2 * x[1:-1] + x[:-2]) / h ** 2
    grad = (x[2:] - x[:-2]) / (2 * h)
    res = alpha * x[1:-1] - dt * lap + dt * vel[1:-1] * grad - rhs[1:-1]
    assert np.max(np.abs(res)) < 1e-12


@pytest.mark.parametrize("impl", [ref] + ([comp] if comp is not None else []))
def test_transport_vanishes_for_constant_far_field(impl):
    b = -np.ones(30)
    out, vel, db, vmax = impl.transport_b(b, 0.1, 1.0)
    assert np.all(out == 0.0)
    np.testing.assert_allclose(vel, -0.1 * np.arange(30))
    assert vmax == pytest.approx(2.9)
