"""The piecewise weight w(y) used by the Lyapunov functional, and its certificate.

The unshifted weight is built from three pieces glued with matching value and
slope (so w is W^{2,inf}):

* a line ``h_eps`` on ``[-y_eps, eps]`` vanishing at ``-y_eps``,
* the concave quadratic ``f(x) = ((2B+r) x - (B+r) x^2) / B^r`` on ``[eps, Q]``,
* the convex tail ``g(x) = B / (x + B - 1)^r`` on ``[Q, inf)``.

The weight used everywhere else is the translate ``w(y) = w_eps(y - y_eps)``,
which puts the zero of the line at ``y = 0``. ``M`` and ``Q`` move with it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_EPSILON = 0.01
CERT_TOL = 1e-12


class WeightError(ValueError):
    pass


def default_onset(r: float) -> float:
    """Cutoff onset ``M`` with ``1 - M = 1 / (4r + 2)``."""
    return 1.0 - 1.0 / (4.0 * r + 2.0)


def default_beta(r: float) -> float:
    return (2.0 * r + 1.0) / (2.0 * r + 2.0)


def scale_bound_1(r: float) -> float:
    """Smallest admissible B from the onset condition."""
    return 1.0 / ((4.0 * r + 2.0) * (1.0 - (4.0 * r / (4.0 * r + 1.0)) ** (1.0 / r)))


def scale_bound_2(r: float) -> float:
    """Smallest admissible B from the cutoff-slope condition."""
    return 2.0 * r * (4.0 * r + 2.0) * ((4.0 * r + 1.0) / (4.0 * r)) ** ((r + 1.0) / r)


def smoothstep(z):
    """``psi(z) = 3z^2 - 2z^3`` clamped to [0, 1]; ``0 <= psi' <= 3/2``."""
    z = np.clip(np.asarray(z, dtype=float), 0.0, 1.0)
    return z * z * (3.0 - 2.0 * z)


def smoothstep_prime(z):
    z = np.asarray(z, dtype=float)
    zc = np.clip(z, 0.0, 1.0)
    return np.where((z > 0.0) & (z < 1.0), 6.0 * zc * (1.0 - zc), 0.0)


@dataclass(frozen=True)
class WeightSpec:
    r: float = 2.0
    B: float = 50.0
    Q: float = 1.0
    epsilon: float = DEFAULT_EPSILON
    M: float | None = None
    beta: float | None = None

    def __post_init__(self):
        for name in ("r", "B", "Q", "epsilon"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise WeightError(f"{name} must be a finite number, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.M is None:
            object.__setattr__(self, "M", default_onset(self.r) if self.r > 0 else 0.5)
        if self.beta is None:
            object.__setattr__(self, "beta", default_beta(self.r))
        object.__setattr__(self, "M", float(self.M))
        object.__setattr__(self, "beta", float(self.beta))

    @classmethod
    def paper_default(cls, epsilon=DEFAULT_EPSILON) -> "WeightSpec":
        return cls(r=2.0, B=50.0, Q=1.0, epsilon=epsilon, M=0.9, beta=5.0 / 6.0)

    def validate(self):
        r, B = self.r, self.B
        if r <= 1.0:
            raise WeightError(f"r must exceed 1 for w to be integrable, got r={r}")
        if self.Q != 1.0:
            raise WeightError(f"the glueing point Q is fixed at 1, got {self.Q}")
        if B <= 1.0:
            raise WeightError(f"B must exceed 1, got {B}")
        if not 0.5 < self.M < 1.0:
            raise WeightError(f"M must lie in (1/2, 1), got {self.M}")
        if 1.0 - self.M > 1.0 / (4.0 * r + 2.0) + 1e-15:
            raise WeightError(f"1 - M must not exceed 1/(4r+2), got M={self.M}")
        if not 0.0 < self.beta < 1.0:
            raise WeightError(f"beta must lie in (0, 1), got {self.beta}")
        if self.beta < r / (r + 1.0):
            raise WeightError(f"beta must be at least r/(r+1) = {r / (r + 1.0)}")
        if not 0.0 < self.epsilon < 0.5 or self.epsilon > self.M / 4.0:
            raise WeightError(f"epsilon must lie in (0, 1/2) with epsilon <= M/4, got {self.epsilon}")
        b1, b2 = scale_bound_1(r), scale_bound_2(r)
        if B < b1:
            raise WeightError(f"B={B} violates the onset condition B >= {b1:.6g}")
        if B < b2:
            raise WeightError(f"B={B} violates the cutoff-slope condition B >= {b2:.6g}")


@dataclass(frozen=True)
class Weight:
    spec: WeightSpec
    y_eps: float
    c_f: float
    bar_c_f: float
    c_1: float
    beta_measured: float
    _lin: float = field(repr=False)
    _quad: float = field(repr=False)

    # unshifted pieces -------------------------------------------------
    def f(self, x):
        return self._lin * x - self._quad * x * x

    def f1(self, x):
        return self._lin - 2.0 * self._quad * x

    def f2(self, x):
        return np.full_like(np.asarray(x, dtype=float), -2.0 * self._quad)

    def g(self, x):
        s = self.spec
        return s.B / (x + s.B - 1.0) ** s.r

    def g1(self, x):
        s = self.spec
        return -s.r * s.B / (x + s.B - 1.0) ** (s.r + 1.0)

    def g2(self, x):
        s = self.spec
        return s.r * (s.r + 1.0) * s.B / (x + s.B - 1.0) ** (s.r + 2.0)

    # junctions in the shifted variable ---------------------------------
    @property
    def knot_linear(self) -> float:
        return self.spec.epsilon + self.y_eps

    @property
    def knot_tail(self) -> float:
        return self.spec.Q + self.y_eps

    @property
    def onset(self) -> float:
        return self.spec.M + self.y_eps

    def _pieces(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < 0) or not np.all(np.isfinite(y)):
            raise ValueError("the weight is defined for finite y >= 0 only")
        x = y - self.y_eps
        lin = y < self.knot_linear
        tail = y >= self.knot_tail
        return y, x, lin, ~(lin | tail), tail

    def _eval(self, y, kind):
        yy, x, lin, quad, tail = self._pieces(y)
        out = np.empty_like(yy)
        slope = self.f1(self.spec.epsilon)
        if kind == 0:
            # the line through the origin of the shifted variable
            out[lin] = slope * yy[lin]
            out[quad] = self.f(x[quad])
            out[tail] = self.g(x[tail])
        elif kind == 1:
            out[lin] = slope
            out[quad] = self.f1(x[quad])
            out[tail] = self.g1(x[tail])
        else:
            out[lin] = 0.0
            out[quad] = -2.0 * self._quad
            out[tail] = self.g2(x[tail])
        return float(out) if np.ndim(y) == 0 else out

    def w(self, y):
        return self._eval(y, 0)

    def w1(self, y):
        return self._eval(y, 1)

    def w2(self, y):
        """Second derivative, taken from the right at the junctions."""
        return self._eval(y, 2)

    def eta(self, y):
        s = self.spec
        return smoothstep((np.asarray(y, dtype=float) - self.onset) / (s.Q - s.M))

    def eta1(self, y):
        s = self.spec
        return smoothstep_prime((np.asarray(y, dtype=float) - self.onset) / (s.Q - s.M)) / (s.Q - s.M)

    def tail_integral(self, y0: float) -> float:
        """``int_{y0}^inf w`` for ``y0`` on the power-law piece."""
        if y0 < self.knot_tail:
            raise ValueError("tail_integral needs y0 on the power-law piece")
        s = self.spec
        return s.B / ((s.r - 1.0) * (y0 - self.y_eps + s.B - 1.0) ** (s.r - 1.0))

    def l1_norm_exact(self) -> float:
        """Closed-form ``int_0^inf w``: triangle + quadratic + tail."""
        s = self.spec
        eps = s.epsilon
        tri = 0.5 * self.f(eps) * (eps + self.y_eps)
        quad = (self._lin * (s.Q ** 2 - eps ** 2) / 2.0
                - self._quad * (s.Q ** 3 - eps ** 3) / 3.0)
        return tri + quad + self.tail_integral(self.knot_tail)


def eval_w(weight: Weight, y):
    return weight.w(y)


def eval_w1(weight: Weight, y):
    return weight.w1(y)


def eval_w2(weight: Weight, y):
    return weight.w2(y)


def eta(y, weight: Weight):
    return weight.eta(y)


def _l1_by_quadrature(weight: Weight, points_per_piece: int) -> float:
    total = 0.0
    for a, b in ((0.0, weight.knot_linear), (weight.knot_linear, weight.knot_tail)):
        ys = np.linspace(a, b, points_per_piece + 1)
        vals = weight.w(ys)
        total += float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(ys)))
    return total + weight.tail_integral(weight.knot_tail)


def build_weight(spec: WeightSpec, samples: int = 100_000) -> Weight:
    """Build the shifted weight and measure ``c_f``, ``c_1`` and the effective beta."""
    spec.validate()
    r, B, eps = spec.r, spec.B, spec.epsilon
    lin = (2.0 * B + r) / B ** r
    quad = (B + r) / B ** r
    f_eps = lin * eps - quad * eps * eps
    f1_eps = lin - 2.0 * quad * eps
    y_eps = f_eps / f1_eps - eps
    proto = Weight(spec, y_eps, 1.0, 1.0, 0.0, 0.0, lin, quad)

    # c_f: sampled sup of |w''| / w where w'' < 0 (the quadratic piece)
    xs = np.linspace(eps, spec.Q, samples)
    c_f = max(1.0, float(np.max(2.0 * quad / proto.f(xs))))

    c_1 = _l1_by_quadrature(proto, samples)

    # effective beta after the shift: sup of the two key ratios
    ym = np.linspace(proto.onset, proto.knot_tail, samples)
    xm = ym - y_eps
    key2 = proto.eta(ym) * proto.g1(xm) ** 2 / (proto.f(xm) * proto.g2(xm))
    beta_measured = max(float(np.max(key2)), r / (r + 1.0))
    if beta_measured >= 1.0:
        raise WeightError(f"measured beta {beta_measured} is not below 1")
    return Weight(spec, y_eps, c_f, 1.0, c_1, beta_measured, lin, quad)


# -- certification -------------------------------------------------------

@dataclass
class ConditionResult:
    cid: str
    description: str
    margin: float
    location: float
    scale: float
    passed: bool
    strict: bool

    @property
    def strictly_positive(self) -> bool:
        return self.margin > 0.0

    def to_dict(self):
        return {"id": self.cid, "description": self.description, "margin": self.margin,
                "location": self.location, "scale": self.scale, "passed": self.passed,
                "strict": self.strict}


@dataclass
class Certificate:
    conditions: list
    samples: int
    constants: dict
    tolerance: float = CERT_TOL

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __getitem__(self, cid) -> ConditionResult:
        for c in self.conditions:
            if c.cid == cid:
                return c
        raise KeyError(cid)

    def to_dict(self):
        return {"passed": self.passed, "samples": self.samples, "tolerance": self.tolerance,
                "constants": dict(self.constants),
                "conditions": [c.to_dict() for c in self.conditions]}


def certify(weight: Weight, samples: int = 100_000, tol: float = CERT_TOL) -> Certificate:
    """Check every structural condition on a dense sample of its interval.

    Each record carries the worst signed margin (>= 0 means satisfied) and
    where it occurred. ``strict`` marks conditions that hold with slack; the
    others are saturated somewhere by construction (w(0) = 0, the linear
    piece, the measured c_f) and can only reach margin 0.
    """
    if samples < 10_000:
        raise ValueError("certification needs at least 1e4 samples")
    s = weight.spec
    ye = weight.y_eps
    beta = s.beta
    results = []

    def add(cid, desc, margins, where, scale, strict):
        margins = np.atleast_1d(np.asarray(margins, dtype=float))
        where = np.atleast_1d(np.asarray(where, dtype=float))
        i = int(np.argmin(margins))
        m = float(margins[i])
        results.append(ConditionResult(cid, desc, m, float(where[min(i, where.size - 1)]),
                                       float(scale), m >= -tol * scale, strict))

    head = np.linspace(0.0, weight.knot_tail, samples)
    wv, w1v, w2v = weight.w(head), weight.w1(head), weight.w2(head)
    # w'' is taken from the right, so at Q itself use the quadratic's value
    w2v[-1] = -2.0 * weight._quad
    sc_w = float(np.max(np.abs(wv)))
    sc_w2 = float(np.max(np.abs(w2v)))

    add("f:0", "w(0) = 0", [-abs(weight.w(0.0))], [0.0], sc_w, False)
    add("IK:f>0", "w >= 0 on [0, Q]", wv, head, sc_w, False)
    add("IK:f:d2<0", "w'' <= 0 on [0, Q]", -w2v, head, sc_w2, False)
    add("IK:f:d2:lower", "w'' >= -c_f w on [0, Q]", w2v + weight.c_f * wv, head,
        sc_w2, False)
    add("IK:f:d1", "y w' <= bar_c_f w on [0, Q]", weight.bar_c_f * wv - head * w1v, head,
        sc_w, False)

    # tail: dense near the onset, then geometric out to 1e6
    tail = np.concatenate([np.linspace(weight.onset, 10.0, samples // 2),
                           np.geomspace(10.0, 1e6, samples - samples // 2)])
    xt = tail - ye
    gv, g1v, g2v = weight.g(xt), weight.g1(xt), weight.g2(xt)
    far = 1e15
    add("g:infty", "g, g' -> 0 as y -> inf",
        [-max(weight.g(far), abs(weight.g1(far)))], [far], float(gv[0]), False)
    add("g>0", "g > 0 on [M, inf)", gv, tail, float(gv[0]), True)
    add("IK:g:decreasing", "g' < 0 on [M, inf)", -g1v, tail, float(abs(g1v[0])), True)
    add("g:convex", "g'' > 0 on [M, inf)", g2v, tail, float(g2v[0]), True)

    on_tail = tail >= weight.knot_tail
    ratio = g1v[on_tail] ** 2 / (gv[on_tail] * g2v[on_tail])
    add("IK:KEY:1", "g'^2 / (g g'') <= beta on [Q, inf)", beta - ratio, tail[on_tail], 1.0, True)

    mid = np.linspace(weight.onset, weight.knot_tail, samples)[1:-1]
    xm = mid - ye
    et, et1 = weight.eta(mid), weight.eta1(mid)
    key2 = et * weight.g1(xm) ** 2 / (weight.f(xm) * weight.g2(xm))
    add("IK:KEY:2", "eta g'^2 / (f g'') <= beta on (M, Q)", beta - key2, mid, 1.0, True)
    lhs = 2.0 * et1 * np.abs(weight.g1(xm))
    rhs = et * weight.g2(xm) - weight.f2(xm)
    add("IK:KEY:3", "2 eta' |g'| <= eta g'' - f'' on (M, Q)", rhs - lhs, mid,
        float(np.max(np.abs(rhs))), True)

    # supporting checks
    eta_s = np.linspace(0.0, weight.knot_tail + 0.5, samples)
    e1 = weight.eta1(eta_s)
    add("eta:slope", "0 <= eta' <= 2/(Q-M)", np.minimum(2.0 / (s.Q - s.M) - e1, e1), eta_s,
        2.0 / (s.Q - s.M), False)
    ev = weight.eta(eta_s)
    add("eta:monotone", "eta non-decreasing", np.diff(ev), eta_s[1:], 1.0, False)
    add("B:cond:1", "B >= onset bound", [s.B - scale_bound_1(s.r)], [s.B], s.B, True)
    add("B:cond:2", "B >= cutoff-slope bound", [s.B - scale_bound_2(s.r)], [s.B], s.B, True)
    for name, knot in (("linear", weight.knot_linear), ("tail", weight.knot_tail)):
        x = knot - ye
        if name == "linear":
            left_v = weight.f1(s.epsilon) * knot
            left_d, right_v, right_d = weight.f1(s.epsilon), weight.f(x), weight.f1(x)
        else:
            left_v, left_d = weight.f(x), weight.f1(x)
            right_v, right_d = weight.g(x), weight.g1(x)
        add(f"glue:{name}:value", f"w continuous at the {name} junction",
            [-abs(left_v - right_v)], [knot], abs(left_v), False)
        add(f"glue:{name}:slope", f"w' continuous at the {name} junction",
            [-abs(left_d - right_d)], [knot], abs(left_d), False)

    tail_ratio_err = float(np.max(np.abs(ratio - s.r / (s.r + 1.0))))
    constants = {
        "r": s.r, "B": s.B, "Q": s.Q, "M": s.M, "beta": beta, "epsilon": s.epsilon,
        "y_eps": ye, "c_f": weight.c_f, "bar_c_f": weight.bar_c_f, "c_1": weight.c_1,
        "beta_measured": weight.beta_measured, "tail_ratio": s.r / (s.r + 1.0),
        "tail_ratio_max_error": tail_ratio_err,
        "B_bound_1": scale_bound_1(s.r), "B_bound_2": scale_bound_2(s.r),
    }
    return Certificate(results, samples, constants, tol)
