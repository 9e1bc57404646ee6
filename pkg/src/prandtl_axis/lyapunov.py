"""The weighted functional G(t) = int a w, its rate decomposition and the
Riccati comparison that forces blowup.

Integrals over the half-line are split at ``y_max``. On ``[0, y_max]`` they
are evaluated on the grid (trapezoid for weights ``w``, exact product
integration for ``w''`` which jumps at the junctions). Beyond ``y_max`` the
fields are extended by their far-field values (``a`` and ``phi`` constant,
``phi_y = 0``) and the tails are integrated in closed form against the
power-law piece of the weight.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, TruncationWarning, antiderivative, first_derivative, trapezoid_weights
from .lift import LiftCoefficients, LiftParams, linear_L, verify_lift_properties
from .weight import Weight

RICCATI_CAP = 1e12


def curvature_weights(weight: Weight, grid: Grid) -> np.ndarray:
    """Nodal weights q with ``sum q_i u_i = int_0^{y_max} u_lin w''`` exactly,
    ``u_lin`` the piecewise-linear interpolant of u.

    Uses only w and w' at the nodes, both continuous, so the jumps of w''
    at the junctions cost nothing.
    """
    y = grid.nodes
    w, w1 = weight.w(y), weight.w1(y)
    slope = np.diff(w) / grid.h
    q = np.zeros(grid.size)
    q[:-1] += slope - w1[:-1]
    q[1:] += w1[1:] - slope
    return q


class Quadrature:
    """Grid-level quadrature rules and far-field tail data for one weight."""

    def __init__(self, weight: Weight, grid: Grid):
        if grid.y_max < weight.knot_tail:
            raise ValueError("y_max must lie on the power-law piece of the weight")
        self.weight = weight
        self.grid = grid
        self.w = weight.w(grid.nodes)
        self.trap = trapezoid_weights(grid)
        self.trap_w = self.trap * self.w
        self.curv = curvature_weights(weight, grid)
        self.tail_w = weight.tail_integral(grid.y_max)
        self.w1_end = float(weight.w1(grid.y_max))
        s = weight.spec
        self._shift = grid.y_max - weight.y_eps + s.B - 1.0

    def tail_curvature(self, start: float, slope: float) -> float:
        """``int_{y_max}^inf (start + slope (y - y_max))^2 w'' dy`` in closed form."""
        s = self.weight.spec
        r, B, sh = s.r, s.B, self._shift
        p = start - slope * sh
        return r * (r + 1.0) * B * (p * p * sh ** (-r - 1.0) / (r + 1.0)
                                    + 2.0 * p * slope * sh ** (-r) / r
                                    + slope * slope * sh ** (1.0 - r) / (r - 1.0))


_QUAD_CACHE: dict = {}


def _quadrature(weight: Weight, grid: Grid) -> Quadrature:
    key = (id(weight), grid.y_max, grid.n)
    q = _QUAD_CACHE.get(key)
    if q is None or q.weight is not weight:
        q = Quadrature(weight, grid)
        _QUAD_CACHE[key] = q
    return q


def G(state, weight: Weight, grid: Grid) -> float:
    """``int_0^inf a w`` with the constant far-field extension of a.

    ``state`` may be a State or the nodal values of a.
    """
    a = grid.check(state.a if hasattr(state, "a") else state, "a")
    q = _quadrature(weight, grid)
    return float(np.dot(q.trap_w, a)) + float(a[-1]) * q.tail_w


@dataclass
class Decomposition:
    t: float
    G: float
    I1: float
    I2: float
    I3: float
    I4: float
    F_term: float

    @property
    def rate(self) -> float:
        """``I1 + 2 I2 - I3/2 + I4 + F_term``, the exact rate of G."""
        return self.I1 + 2.0 * self.I2 - 0.5 * self.I3 + self.I4 + self.F_term

    @property
    def rate_lower(self) -> float:
        """The rate with the non-negative forcing dropped."""
        return self.rate - self.F_term


def decompose_rhs(state, weight: Weight, p: LiftParams, grid: Grid,
                  coeffs: LiftCoefficients | None = None, warn=True) -> Decomposition:
    """``I1 = int a w''``, ``I2 = int a^2 w``, ``I3 = int (int a)^2 w''``,
    ``I4 = int L[a] w`` and ``F_term = int F w``, far-field tails included."""
    a = grid.check(state.a, "a")
    t = float(state.t)
    q = _quadrature(weight, grid)
    c = coeffs if coeffs is not None else LiftCoefficients.at(t, p, grid)
    ia = antiderivative(grid, a)
    aY, iaY = float(a[-1]), float(ia[-1])
    phY = float(c.phi[-1])
    if warn:
        slope = abs(float(first_derivative(grid, a)[-1]))
        lead = abs(iaY * float(c.phi_y[-1]))
        scale = max(float(np.max(np.abs(a))), 1e-300)
        if slope > 1e-6 * scale or lead > 1e-10 * max(scale, abs(phY)) ** 2:
            warnings.warn(f"far field not settled at y_max={grid.y_max} (|a_y|={slope:.2e})",
                          TruncationWarning, stacklevel=2)
    g = float(np.dot(q.trap_w, a)) + aY * q.tail_w
    i1 = float(np.dot(q.curv, a)) - aY * q.w1_end
    i2 = float(np.dot(q.trap_w, a * a)) + aY * aY * q.tail_w
    i3 = float(np.dot(q.curv, ia * ia)) + q.tail_curvature(iaY, aY)
    la = linear_L(a, t, p, grid, coeffs=c, strict=False)
    i4 = float(np.dot(q.trap_w, la)) - 2.0 * aY * phY * q.tail_w
    ft = float(np.dot(q.trap_w, c.forcing)) + phY * phY * q.tail_w
    return Decomposition(t, g, i1, i2, i3, i4, ft)


@dataclass(frozen=True)
class BoundConstants:
    c_f: float
    bar_c_f: float
    c_1: float
    beta: float
    c_kappa: float

    @property
    def assembled(self) -> float:
        """``max(c_f + (3 + bar_c_f) C_kappa, c_1 / (2 (1 - beta)), 1)``."""
        return max(self.c_f + (3.0 + self.bar_c_f) * self.c_kappa,
                   self.c_1 / (2.0 * (1.0 - self.beta)), 1.0)

    def to_dict(self):
        return {"c_f": self.c_f, "bar_c_f": self.bar_c_f, "c_1": self.c_1,
                "beta": self.beta, "c_kappa": self.c_kappa, "C_assembled": self.assembled}


def bound_constants(weight: Weight, p: LiftParams, grid: Grid, t_max: float = 10.0,
                    n_times: int = 41) -> BoundConstants:
    ts = sorted(set(np.linspace(0.0, max(t_max, 10.0), n_times).tolist()
                    + [0.0, 0.1, 1.0, 5.0, 10.0]))
    rep = verify_lift_properties(p, ts, grid)
    return BoundConstants(weight.c_f, weight.bar_c_f, weight.c_1, weight.spec.beta,
                          rep.c_kappa)


@dataclass
class Margins:
    I1: float
    I2: float
    I3: float
    I4: float
    assembled: float

    def as_tuple(self):
        return (self.I1, self.I2, self.I3, self.I4)


def check_bounds(d: Decomposition, k: BoundConstants, C: float | None = None) -> Margins:
    """Signed slack in each of the four rate bounds and the assembled inequality.

    The assembled margin uses the rate without forcing, so it checks
    ``I1 + 2 I2 - I3/2 + I4 >= G^2 / C - C (1 + t) G``.
    """
    C = k.assembled if C is None else C
    tau = 1.0 + d.t
    return Margins(
        I1=d.I1 + k.c_f * d.G,
        I2=d.I2 - d.G * d.G / k.c_1,
        I3=4.0 * k.beta * d.I2 - d.I3,
        I4=d.I4 + (3.0 + k.bar_c_f) * k.c_kappa * tau * d.G,
        assembled=d.rate_lower - (d.G * d.G / C - C * tau * d.G),
    )


# -- Riccati comparison -----------------------------------------------------

@dataclass
class RiccatiSolution:
    C: float
    G0: float
    t: np.ndarray
    values: np.ndarray
    blowup_time: float | None

    def at(self, times) -> np.ndarray:
        """Interpolated values (log-linear), ``inf`` past the blowup time."""
        times = np.asarray(times, dtype=float)
        out = np.full(times.shape, np.inf)
        ok = times <= self.t[-1]
        if self.G0 > 0:
            out[ok] = np.exp(np.interp(times[ok], self.t, np.log(np.maximum(self.values, 1e-300))))
        else:
            out[ok] = np.interp(times[ok], self.t, self.values)
        if self.blowup_time is None:
            out[~ok] = np.nan
        return out


def riccati_rhs(t, g, C):
    return g * g / C - C * (1.0 + t) * g


def riccati_lower_bound(G0: float, C: float, t_span, rel_step: float = 1e-3,
                        h_max: float = 1e-2, t_eval=None, cap: float = RICCATI_CAP
                        ) -> RiccatiSolution:
    """Integrate ``G' = G^2/C - C (1+t) G`` with classical RK4.

    The step is limited so G changes by at most ``rel_step`` relatively per
    step. Integration stops when G exceeds ``cap``; the blowup time is then
    extrapolated with ``T = t + C/G`` (the remaining time when ``G^2/C``
    dominates).
    """
    if C < 1:
        raise ValueError("C must be at least 1")
    if G0 < 0:
        raise ValueError("G0 must be non-negative")
    t0, t1 = float(t_span[0]), float(t_span[1])
    marks = np.unique(np.asarray(t_eval if t_eval is not None else [], dtype=float))
    marks = marks[(marks > t0) & (marks < t1)]
    ts, gs = [t0], [float(G0)]
    t, g = t0, float(G0)
    mi = 0
    blowup = None
    while t < t1:
        rate = abs(g / C) + C * (1.0 + t)
        h = min(h_max, rel_step / rate if rate > 0 else h_max, t1 - t)
        if mi < marks.size and t + h > marks[mi]:
            h = marks[mi] - t
        k1 = riccati_rhs(t, g, C)
        k2 = riccati_rhs(t + h / 2, g + h * k1 / 2, C)
        k3 = riccati_rhs(t + h / 2, g + h * k2 / 2, C)
        k4 = riccati_rhs(t + h, g + h * k3, C)
        g = g + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        t = t + h
        while mi < marks.size and marks[mi] <= t + 1e-15:
            mi += 1
        ts.append(t)
        gs.append(g)
        if g > cap:
            blowup = t + C / g
            break
        if h < 1e-300:
            blowup = t
            break
    return RiccatiSolution(C, float(G0), np.array(ts), np.array(gs), blowup)


def threshold_check(G0: float, C: float) -> bool:
    if C < 1:
        raise ValueError("C must be at least 1")
    return G0 >= 4.0 * C * C


# -- traces ----------------------------------------------------------------

@dataclass
class LyapunovTrace:
    t: np.ndarray
    G: np.ndarray
    dG_dt: np.ndarray
    I1: np.ndarray
    I2: np.ndarray
    I3: np.ndarray
    I4: np.ndarray
    F_term: np.ndarray
    constants: BoundConstants
    margins: dict = field(default_factory=dict)
    C_fit: float | None = None
    riccati_G: np.ndarray | None = None

    @property
    def rate(self) -> np.ndarray:
        return self.I1 + 2.0 * self.I2 - 0.5 * self.I3 + self.I4 + self.F_term

    def __len__(self):
        return self.t.size

    def decomposition(self, i) -> Decomposition:
        return Decomposition(float(self.t[i]), float(self.G[i]), float(self.I1[i]),
                             float(self.I2[i]), float(self.I3[i]), float(self.I4[i]),
                             float(self.F_term[i]))

    def attach_riccati(self, C: float) -> RiccatiSolution:
        sol = riccati_lower_bound(float(self.G[0]), C, (float(self.t[0]), float(self.t[-1])),
                                  t_eval=self.t)
        self.riccati_G = sol.at(self.t)
        return sol

    def write_csv(self, path):
        from .solver import fmt
        cols = ["t", "G", "dG_dt_numeric", "I1", "I2", "I3", "I4", "F_term",
                "margin_I1", "margin_I2", "margin_I3", "margin_I4", "riccati_G"]
        ric = self.riccati_G if self.riccati_G is not None else np.full(self.t.size, np.nan)
        data = [self.t, self.G, self.dG_dt, self.I1, self.I2, self.I3, self.I4, self.F_term,
                self.margins["I1"], self.margins["I2"], self.margins["I3"], self.margins["I4"],
                ric]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(cols)
            for row in zip(*data):
                wr.writerow([fmt(v) for v in row])


def numeric_rate(t, g) -> np.ndarray:
    """Second-order differences on possibly non-uniform samples."""
    t = np.asarray(t, dtype=float)
    g = np.asarray(g, dtype=float)
    if t.size < 3:
        return np.full(t.size, np.nan)
    return np.gradient(g, t, edge_order=2)


class TraceRecorder:
    """Collects the functional and its decomposition along a run."""

    def __init__(self, weight: Weight, p: LiftParams, grid: Grid, t_max: float = 10.0,
                 constants: BoundConstants | None = None):
        self.weight, self.p, self.grid = weight, p, grid
        self.constants = constants or bound_constants(weight, p, grid, t_max)
        self.rows = []

    def record(self, state):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            d = decompose_rhs(state, self.weight, self.p, self.grid)
        self.rows.append((d.t, d.G, d.I1, d.I2, d.I3, d.I4, d.F_term))

    def finish(self) -> LyapunovTrace:
        arr = np.array(self.rows, dtype=float).reshape(-1, 7)
        # a rejected final step can repeat a time; keep strictly increasing samples
        keep = np.concatenate([[True], np.diff(arr[:, 0]) > 0])
        arr = arr[keep]
        t, g = arr[:, 0], arr[:, 1]
        tr = LyapunovTrace(t, g, numeric_rate(t, g), arr[:, 2], arr[:, 3], arr[:, 4],
                           arr[:, 5], arr[:, 6], self.constants)
        k = self.constants
        tau = 1.0 + t
        tr.margins = {
            "I1": tr.I1 + k.c_f * g,
            "I2": tr.I2 - g * g / k.c_1,
            "I3": 4.0 * k.beta * tr.I2 - tr.I3,
            "I4": tr.I4 + (3.0 + k.bar_c_f) * k.c_kappa * tau * g,
        }
        return tr


def pointwise_constants(t, g, rate) -> np.ndarray:
    """Smallest C > 0 with ``rate >= g^2/C - C (1+t) g`` at each sample (g > 0)."""
    t, g, rate = (np.asarray(x, dtype=float) for x in (t, g, rate))
    tau = 1.0 + t
    with np.errstate(invalid="ignore", divide="ignore"):
        c = (-rate + np.sqrt(rate * rate + 4.0 * tau * g ** 3)) / (2.0 * tau * g)
    return c[(g > 0) & np.isfinite(c)]


def fit_constant(trace: LyapunovTrace, coverage: float = 0.99) -> float:
    """Smallest ``C >= 1`` for which the Riccati inequality holds on at least
    ``coverage`` of the samples, using the numeric rate."""
    ok = np.isfinite(trace.dG_dt)
    c = np.sort(pointwise_constants(trace.t[ok], trace.G[ok], trace.dG_dt[ok]))
    if c.size == 0:
        return 1.0
    k = max(int(math.ceil(coverage * c.size)) - 1, 0)
    return max(1.0, float(c[k]))


# -- threshold helper ------------------------------------------------------

@dataclass
class AmplitudeChoice:
    amplitude: float
    C_fit: float
    G0: float
    iterations: int
    result: object

    @property
    def above_threshold(self) -> bool:
        return threshold_check(self.G0, self.C_fit)


def choose_amplitude(config, p: LiftParams, weight: Weight, headroom: float = 1.25,
                     max_iter: int = 6) -> AmplitudeChoice:
    """Pick the bump amplitude so that ``G0 >= 4 C^2`` for the C fitted on the
    run it produces.

    G0 is linear in the amplitude, so starting from ``C = 1`` each round sets
    ``A = headroom * 4 C^2 / G0(A=1)``, runs, refits C and stops once the
    threshold holds for the refitted constant.
    """
    from dataclasses import replace as _replace

    from .solver import initial_datum, run

    if headroom < 1:
        raise ValueError("headroom must be at least 1")
    grid = config.grid()
    unit = G(initial_datum("gaussian_bump", 1.0, grid, p), weight, grid)
    if not unit > 0:
        raise ValueError("the unit bump has no weighted mass")
    C = 1.0
    for it in range(1, max_iter + 1):
        amp = headroom * 4.0 * C * C / unit
        res = run(_replace(config, amplitude=amp), p, weight=weight)
        C_new = fit_constant(res.trace)
        g0 = float(res.trace.G[0])
        if threshold_check(g0, C_new):
            return AmplitudeChoice(amp, C_new, g0, it, res)
        C = C_new
    return AmplitudeChoice(amp, C_new, g0, max_iter, res)


def synthetic_fields(grid: Grid, rng: np.random.Generator, count: int, bumps: int = 4):
    """Random smooth fields vanishing at ``y = 0``: ``y`` times a sum of
    Gaussians with random signed heights, centres in ``[0, 10]`` and widths
    in ``[0.3, 3]``. They decay well inside ``[0, 40]``."""
    y = grid.nodes
    for _ in range(count):
        c = rng.normal(size=bumps)
        mu = rng.uniform(0.0, 10.0, size=bumps)
        sig = rng.uniform(0.3, 3.0, size=bumps)
        a = y * np.sum(c[:, None] * np.exp(-0.5 * ((y[None, :] - mu[:, None]) / sig[:, None]) ** 2),
                       axis=0)
        a[0] = 0.0
        yield a
