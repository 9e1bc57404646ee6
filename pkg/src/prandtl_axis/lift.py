"""The explicit heat lift phi(t, y) and the terms it generates.

phi solves ``phi_t - phi_yy = kappa**2`` on the half-line with ``phi(t, 0) = 0``,
``phi(t, inf) = kappa + kappa**2 t`` and ``phi(0, y) = kappa erf(y/2)``.
Shifting the axis unknown by it, ``a = b + phi``, produces the forcing ``F``
and linear operator ``L`` defined below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .grid import Grid, antiderivative, first_derivative

SQRT_PI = math.sqrt(math.pi)


def erf(z):
    """Gauss error function, ``2/sqrt(pi) int_0^z exp(-s^2) ds``."""
    return special.erf(z)


def erfc(z):
    return special.erfc(z)


@dataclass(frozen=True)
class LiftParams:
    kappa: float

    def __post_init__(self):
        k = self.kappa
        if isinstance(k, bool) or not isinstance(k, (int, float)) or not math.isfinite(k):
            raise ValueError(f"kappa must be a finite number, got {k!r}")
        if k < 0:
            raise ValueError(f"kappa must be non-negative, got {k}")
        object.__setattr__(self, "kappa", float(k))


def _validate(t, y):
    if not math.isfinite(t) or t < 0:
        raise ValueError(f"t must be finite and non-negative, got {t}")
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or not np.all(np.isfinite(y)):
        raise ValueError("y must be finite and non-negative")
    return float(t), y


def _out(y, value):
    return float(value) if np.ndim(y) == 0 else value


def similarity_variable(t, y):
    """``z = y / sqrt(4t)``; +inf for ``t = 0, y > 0`` and 0 at ``y = 0``."""
    t, y = _validate(t, y)
    if t == 0.0:
        return np.where(y > 0, np.inf, 0.0)
    return y / math.sqrt(4.0 * t)


def _profile(z):
    # 2 z^2 (erf z - 1) + erf z + (2 z / sqrt(pi)) exp(-z^2), bounded by 1
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    # erfc and exp(-z^2) underflow to 0 well before z = 30, where z^2 may overflow
    fin = z < 30.0
    zf = z[fin]
    out[fin] = (-2.0 * zf * zf * erfc(zf) + erf(zf)
                + 2.0 * zf / SQRT_PI * np.exp(-zf * zf))
    return out


def phi(t, y, p: LiftParams):
    t, y = _validate(t, y)
    k = p.kappa
    val = k * erf(y / math.sqrt(4.0 * (t + 1.0)))
    if t > 0.0:
        val = val + k * k * t * _profile(y / math.sqrt(4.0 * t))
    return _out(y, val)


def phi_y(t, y, p: LiftParams):
    t, y = _validate(t, y)
    k = p.kappa
    tb = t + 1.0
    val = k / math.sqrt(math.pi * tb) * np.exp(-y * y / (4.0 * tb))
    if t > 0.0:
        z = y / math.sqrt(4.0 * t)
        zc = np.minimum(z, 30.0)  # exp(-z^2) is already 0; avoids z^2 overflow
        val = val + k * k * (-y * erfc(z) + 2.0 * math.sqrt(t / math.pi) * np.exp(-zc * zc))
    return _out(y, val)


def phi_yy(t, y, p: LiftParams):
    """Second y-derivative. At ``t = 0`` the initial profile's value is used,
    including at ``y = 0`` where the ``t > 0`` limit would be ``-kappa**2``."""
    t, y = _validate(t, y)
    k = p.kappa
    tb = t + 1.0
    val = -k * y * np.exp(-y * y / (4.0 * tb)) / (2.0 * SQRT_PI * tb ** 1.5)
    if t > 0.0:
        val = val - k * k * erfc(y / math.sqrt(4.0 * t))
    return _out(y, val)


def far_field(t, p: LiftParams) -> float:
    return p.kappa + p.kappa ** 2 * t


def heat_residual(t, p: LiftParams, grid: Grid, dt=1e-4) -> float:
    """``max_y |phi_t - phi_yy - kappa^2|`` with a centred difference for phi_t."""
    if not t > 0:
        raise ValueError("heat_residual needs t > 0 (centred differencing in time)")
    if not 0 < dt <= t:
        raise ValueError(f"time increment must lie in (0, t], got {dt}")
    y = grid.nodes
    dphi_dt = (phi(t + dt, y, p) - phi(t - dt, y, p)) / (2.0 * dt)
    res = dphi_dt - phi_yy(t, y, p) - p.kappa ** 2
    return float(np.max(np.abs(res)))


def forcing_F(t, p: LiftParams, grid: Grid) -> np.ndarray:
    """``F = phi^2 - (int_0^y phi) phi_y`` on the grid."""
    y = grid.nodes
    ph = phi(t, y, p)
    return ph * ph - antiderivative(grid, ph) * phi_y(t, y, p)


@dataclass(frozen=True)
class LiftCoefficients:
    """phi and the quantities ``L`` needs, sampled on a grid at one time."""

    t: float
    phi: np.ndarray
    phi_y: np.ndarray
    int_phi: np.ndarray

    @classmethod
    def at(cls, t, p: LiftParams, grid: Grid) -> "LiftCoefficients":
        ph = phi(t, grid.nodes, p)
        return cls(t, ph, phi_y(t, grid.nodes, p), antiderivative(grid, ph))

    @property
    def forcing(self) -> np.ndarray:
        return self.phi * self.phi - self.int_phi * self.phi_y


def linear_L(a, t, p: LiftParams, grid: Grid, *, coeffs: LiftCoefficients | None = None,
             strict=True) -> np.ndarray:
    """``L[a] = -2 a phi + (int phi) a_y + (int a) phi_y``.

    ``strict`` enforces ``a(0) = 0``; switch it off to probe constants.
    """
    a = grid.check(a, "a")
    if strict and a[0] != 0.0:
        raise ValueError(f"L[a] requires a(0) = 0, got a[0] = {a[0]}")
    c = coeffs if coeffs is not None else LiftCoefficients.at(t, p, grid)
    return (-2.0 * a * c.phi + c.int_phi * first_derivative(grid, a)
            + antiderivative(grid, a) * c.phi_y)


@dataclass
class CheckResult:
    name: str
    margin: float
    t: float
    y: float
    passed: bool
    note: str = ""

    def to_dict(self):
        return {"name": self.name, "margin": self.margin, "t": self.t, "y": self.y,
                "passed": self.passed, "note": self.note}


@dataclass
class LiftReport:
    kappa: float
    checks: list = field(default_factory=list)
    c_kappa: float = 0.0
    tolerance: float = 1e-12

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        out = {"kappa": self.kappa, "c_kappa": self.c_kappa,
               "tolerance": self.tolerance, "passed": self.passed}
        for c in self.checks:
            for key, val in c.to_dict().items():
                if key != "name":
                    out[f"{c.name}.{key}"] = val
        return out


def verify_lift_properties(p: LiftParams, t_samples, grid: Grid, tol=1e-12,
                           far_field_tol=1e-10) -> LiftReport:
    """Evaluate the sign, monotonicity, concavity and growth properties of phi
    at every (t, node) pair. Failures are recorded, never raised."""
    ts = [float(t) for t in t_samples]
    if not ts:
        raise ValueError("t_samples must be non-empty")
    y = grid.nodes
    report = LiftReport(kappa=p.kappa, tolerance=tol)

    # worst[name] = (margin, t, y)
    worst = {}

    def record(name, margins, t):
        i = int(np.argmin(margins))
        m = float(margins[i])
        if name not in worst or m < worst[name][0]:
            worst[name] = (m, t, float(y[i]))

    ratio = []
    for t in ts:
        ph, d1, d2 = phi(t, y, p), phi_y(t, y, p), phi_yy(t, y, p)
        record("phi_nonnegative", ph, t)
        record("phi_increasing", d1, t)
        record("phi_concave", -d2, t)
        record("phi_origin", -np.abs(ph[:1]), t)
        record("phi_far_field", far_field_tol - np.abs(ph[-1:] - far_field(t, p)), t)
        record("phi_strict_positive", ph[1:], t)
        ratio.append(float(np.max(ph)) / (1.0 + t))
    report.c_kappa = max(ratio)
    for t in ts:
        ph = phi(t, y, p)
        record("phi_bounded", report.c_kappa * (1.0 + t) - ph, t)

    for name in ("phi_nonnegative", "phi_bounded", "phi_increasing", "phi_concave",
                 "phi_origin", "phi_far_field"):
        m, t, yy = worst[name]
        report.checks.append(CheckResult(name, m, t, yy, m >= -tol))
    m, t, yy = worst["phi_strict_positive"]
    if p.kappa > 0:
        report.checks.append(CheckResult("phi_strict_positive", m, t, yy, m > 0))
    else:
        report.checks.append(CheckResult("phi_strict_positive", m, t, yy, True,
                                         "skipped: kappa = 0"))
    return report
