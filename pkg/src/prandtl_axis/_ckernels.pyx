# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled time-stepping kernels (same contracts as ``_kernels_py``)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def cumtrapz(const double[::1] u, double h):
    cdef Py_ssize_t i, n = u.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double acc = 0.0
    o[0] = 0.0
    with nogil:
        for i in range(1, n):
            acc += 0.5 * h * (u[i] + u[i - 1])
            o[i] = acc
    return out


def d1(const double[::1] u, double h):
    cdef Py_ssize_t i, n = u.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double inv2h = 1.0 / (2.0 * h)
    with nogil:
        for i in range(1, n - 1):
            o[i] = (u[i + 1] - u[i - 1]) * inv2h
        o[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) * inv2h
        o[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) * inv2h
    return out


def d2(const double[::1] u, double h):
    cdef Py_ssize_t i, n = u.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double inv = 1.0 / (h * h)
    with nogil:
        for i in range(1, n - 1):
            o[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv
        o[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) * inv
        o[n - 1] = (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) * inv
    return out


def transport_b(const double[::1] b, double h, double kappa):
    cdef Py_ssize_t i, n = b.shape[0]
    out = np.empty(n)
    vel = np.empty(n)
    db = np.empty(n)
    cdef double[::1] o = out
    cdef double[::1] v = vel
    cdef double[::1] d = db
    cdef double acc = 0.0, vmax = 0.0, k2 = kappa * kappa
    cdef double inv2h = 1.0 / (2.0 * h)
    with nogil:
        v[0] = 0.0
        for i in range(1, n):
            acc += 0.5 * h * (b[i] + b[i - 1])
            v[i] = acc
            if fabs(acc) > vmax:
                vmax = fabs(acc)
        d[0] = (-3.0 * b[0] + 4.0 * b[1] - b[2]) * inv2h
        d[n - 1] = (3.0 * b[n - 1] - 4.0 * b[n - 2] + b[n - 3]) * inv2h
        o[0] = 0.0
        o[n - 1] = 0.0
        for i in range(1, n - 1):
            d[i] = (b[i + 1] - b[i - 1]) * inv2h
            o[i] = b[i] * b[i] - v[i] * d[i] - k2
    return out, vel, db, vmax


def implicit_solve(const double[::1] rhs, double alpha, double dt, double h,
                   const double[::1] vel, double left, double right):
    # Thomas algorithm; row i reads lo*x[i-1] + diag*x[i] + up*x[i+1] = rhs[i]
    cdef Py_ssize_t i, n = rhs.shape[0] - 1
    cdef double lam = dt / (h * h)
    cdef double diag = alpha + 2.0 * lam
    cdef double c = dt / (2.0 * h)
    cdef double lo, up, r, denom
    x = np.empty(n + 1)
    cdef double[::1] xv = x
    cdef double[::1] cp = np.empty(n + 1)
    cdef double[::1] dp = np.empty(n + 1)
    with nogil:
        xv[0] = left
        xv[n] = right
        cp[0] = 0.0
        dp[0] = 0.0
        for i in range(1, n):
            lo = -lam - c * vel[i]
            up = -lam + c * vel[i]
            r = rhs[i]
            if i == 1:
                r -= lo * left
                lo = 0.0
            if i == n - 1:
                r -= up * right
                up = 0.0
            denom = diag - lo * cp[i - 1]
            cp[i] = up / denom
            dp[i] = (r - lo * dp[i - 1]) / denom
        xv[n - 1] = dp[n - 1]
        for i in range(n - 2, 0, -1):
            xv[i] = dp[i] - cp[i] * xv[i + 1]
    return x
