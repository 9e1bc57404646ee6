"""Vectorised numpy versions of the time-stepping kernels.

These are the reference implementations. ``_ckernels`` provides the same
functions compiled with Cython; :mod:`prandtl_axis.kernels` picks one at
import time.
"""
import numpy as np
from scipy.linalg import solve_banded


def cumtrapz(u, h):
    out = np.empty_like(u)
    out[0] = 0.0
    np.cumsum(0.5 * h * (u[1:] + u[:-1]), out=out[1:])
    return out


def d1(u, h):
    out = np.empty_like(u)
    out[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
    out[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
    out[-1] = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h)
    return out


def d2(u, h):
    out = np.empty_like(u)
    h2 = h * h
    out[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h2
    out[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h2
    out[-1] = (2.0 * u[-1] - 5.0 * u[-2] + 4.0 * u[-3] - u[-4]) / h2
    return out


def transport_b(b, h, kappa):
    """Pieces of ``b**2 - V b_y - kappa**2`` with ``V = int_0^y b``.

    Returns the full explicit term (zero at the end nodes), the velocity V,
    the centred derivative of b and ``max|V|``.
    """
    vel = cumtrapz(b, h)
    db = d1(b, h)
    out = b * b - vel * db - kappa * kappa
    out[0] = out[-1] = 0.0
    return out, vel, db, float(np.max(np.abs(vel)))


def implicit_solve(rhs, alpha, dt, h, vel, left, right):
    """Solve ``(alpha - dt*D2 + dt*vel*D1) x = rhs`` on interior nodes.

    D2 and D1 are the centred differences and ``vel`` a nodal velocity. The
    end values of the result are the Dirichlet data ``left`` and ``right``;
    the first and last entries of ``rhs`` are ignored.
    """
    lam = dt / (h * h)
    adv = dt * vel[1:-1] / (2.0 * h)
    m = rhs.shape[0] - 2
    ab = np.empty((3, m))
    ab[0, 1:] = -lam + adv[:-1]
    ab[1, :] = alpha + 2.0 * lam
    ab[2, :-1] = -lam - adv[1:]
    r = rhs[1:-1].copy()
    r[0] += (lam + adv[0]) * left
    r[-1] += (lam - adv[-1]) * right
    x = np.empty_like(rhs)
    x[0] = left
    x[-1] = right
    x[1:-1] = solve_banded((1, 1), ab, r, check_finite=False)
    return x
