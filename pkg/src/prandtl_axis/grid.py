"""Uniform grid on the truncated half-line and its discrete calculus.

Fields are plain float arrays with one value per node. The differencing and
integration operators are second order; the hot ones delegate to
:mod:`prandtl_axis.kernels`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels

MIN_INTERVALS = 16


class GridError(ValueError):
    pass


class TruncationWarning(UserWarning):
    """An integrand is not negligible at the end of the truncated domain."""


@dataclass(frozen=True)
class Grid:
    y_max: float
    n: int
    h: float = field(init=False)
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (isinstance(self.y_max, (int, float)) and math.isfinite(self.y_max)):
            raise GridError(f"y_max must be a finite number, got {self.y_max!r}")
        if self.y_max <= 0:
            raise GridError(f"y_max must be positive, got {self.y_max}")
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)):
            raise GridError(f"n must be an integer, got {self.n!r}")
        if self.n < MIN_INTERVALS:
            raise GridError(f"n must be at least {MIN_INTERVALS}, got {self.n}")
        object.__setattr__(self, "y_max", float(self.y_max))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "h", self.y_max / self.n)
        nodes = np.arange(self.n + 1, dtype=float) * self.h
        nodes[-1] = self.y_max
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @property
    def size(self) -> int:
        return self.n + 1

    def check(self, u, name="field") -> np.ndarray:
        """Return ``u`` as a contiguous float array after validating its shape."""
        arr = np.ascontiguousarray(u, dtype=float)
        if arr.shape != (self.size,):
            raise GridError(f"{name} has shape {arr.shape}, expected ({self.size},)")
        if not np.all(np.isfinite(arr)):
            raise GridError(f"{name} contains non-finite values")
        return arr

    def sample(self, func) -> np.ndarray:
        return self.check(func(self.nodes))

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.y_max, self.n * factor)


def make_grid(y_max: float, n: int) -> Grid:
    return Grid(y_max, n)


def second_derivative(grid: Grid, u) -> np.ndarray:
    """Three-point centred second difference; one-sided 4-point rows at the ends.

    Exact for quadratics (and cubics at the end rows).
    """
    return kernels.d2(grid.check(u), grid.h)


def first_derivative(grid: Grid, u) -> np.ndarray:
    return kernels.d1(grid.check(u), grid.h)


def antiderivative(grid: Grid, u) -> np.ndarray:
    """Cumulative trapezoid rule for ``int_0^y u``; zero at the first node."""
    return kernels.cumtrapz(grid.check(u), grid.h)


def trapezoid_weights(grid: Grid) -> np.ndarray:
    wts = np.full(grid.size, grid.h)
    wts[0] = wts[-1] = 0.5 * grid.h
    return wts


def quadrature(grid: Grid, u, v=None) -> float:
    """Trapezoid approximation of ``int_0^{y_max} u v dy`` (``v`` defaults to 1)."""
    uu = grid.check(u, "u")
    prod = uu if v is None else uu * grid.check(v, "v")
    return float(np.dot(trapezoid_weights(grid), prod))


def check_truncation(grid: Grid, integrand, what="integrand", rel_tol=1e-10) -> bool:
    """Warn if ``integrand`` is not negligible at ``y_max``; return whether it is."""
    arr = np.asarray(integrand, dtype=float)
    scale = float(np.max(np.abs(arr)))
    ok = abs(arr[-1]) <= rel_tol * scale if scale > 0 else True
    if not ok:
        warnings.warn(
            f"{what} is {arr[-1]:.3e} at y_max={grid.y_max} (max {scale:.3e})",
            TruncationWarning,
            stacklevel=2,
        )
    return ok
