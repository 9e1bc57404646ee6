"""IMEX time integration of the axis equation and blowup detection.

The primary unknown is ``b = -u_x`` on the axis,

    b_t = b_yy + b^2 - (int_0^y b) b_y - kappa^2,   b(0) = 0,  b(inf) = -kappa,

with the transport velocity ``V = int_0^y b`` and the reaction explicit, and
diffusion plus transport ``V b_y`` (with V frozen over the step) implicit: one
tridiagonal solve per step. Freezing V keeps the update linear while avoiding
the ``dt * V^2 <= 2`` stability limit of explicit centred transport, which
binds long before blowup. ``a = b + phi`` is rebuilt from the exact lift after every
step. The shifted equation for ``a`` can be integrated directly with
``formulation="a"``; that path exists to cross-check the b-form.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .grid import Grid, antiderivative, first_derivative, second_derivative
from .lift import LiftCoefficients, LiftParams, linear_L, phi

OUTCOMES = ("blewup", "reached_t_max", "min_principle_violation")


class SolverError(RuntimeError):
    """The update produced non-finite values."""


@dataclass(frozen=True)
class SolverConfig:
    y_max: float = 40.0
    n: int = 4000
    scheme: int = 1
    amplitude: float = 10.0
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    safety: float = 0.5
    blowup_threshold: float = 1e6
    t_max: float = 1.0
    far_field_tol: float = 1e-6
    formulation: str = "b"
    sample_dt: float = 0.05
    probes: tuple = (0.5, 1.0, 2.0, 5.0)
    # undershoot allowed by the minimum-principle monitor is C * h^2; None disables it
    min_principle_c: float | None = None
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.scheme not in (1, 2):
            raise ValueError(f"scheme must be 1 or 2, got {self.scheme}")
        if self.formulation not in ("a", "b"):
            raise ValueError(f"formulation must be 'a' or 'b', got {self.formulation!r}")
        if not (self.dt_min > 0 and self.dt_init > 0 and self.dt_min <= self.dt_init):
            raise ValueError("need 0 < dt_min <= dt_init")
        if not 0 < self.safety <= 1:
            raise ValueError(f"safety must lie in (0, 1], got {self.safety}")
        if self.blowup_threshold < 1e3:
            raise ValueError("blowup_threshold must be at least 1e3")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.amplitude < 0 or not math.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite and non-negative")
        for y in self.probes:
            if not 0 <= y <= self.y_max:
                raise ValueError(f"probe point {y} outside [0, {self.y_max}]")

    def grid(self) -> Grid:
        return Grid(self.y_max, self.n)


@dataclass(frozen=True)
class State:
    t: float
    b: np.ndarray
    a: np.ndarray
    step_index: int = 0
    # full nonlinear term, transport velocity and u_y at this state, the step
    # that led here and the previous (u, explicit, u_y, velocity); the
    # two-step scheme needs them
    explicit: np.ndarray | None = field(default=None, repr=False, compare=False)
    speed: float = field(default=math.nan, repr=False, compare=False)
    vel: np.ndarray | None = field(default=None, repr=False, compare=False)
    du: np.ndarray | None = field(default=None, repr=False, compare=False)
    dt_prev: float | None = field(default=None, repr=False, compare=False)
    prev: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def max_abs_a(self) -> float:
        return float(np.max(np.abs(self.a)))


def initial_datum(kind: str, amplitude: float, grid: Grid, p: LiftParams,
                  profile=None) -> State:
    """Initial state with ``a0 = A y^2 exp(-y^2)`` or a custom non-negative profile.

    ``profile`` may be a callable of y or an array of node values; it is
    scaled by ``amplitude``.
    """
    if amplitude < 0 or not math.isfinite(amplitude):
        raise ValueError("amplitude must be finite and non-negative")
    y = grid.nodes
    if kind == "gaussian_bump":
        a0 = amplitude * y * y * np.exp(-y * y)
    elif kind == "custom":
        if profile is None:
            raise ValueError("a custom initial datum needs a profile")
        base = profile(y) if callable(profile) else profile
        a0 = amplitude * grid.check(base, "profile")
        if a0[0] != 0.0:
            raise ValueError(f"the profile must vanish at y = 0, got {a0[0]}")
        if np.any(a0 < 0):
            raise ValueError("the profile must be non-negative")
    else:
        raise ValueError(f"unknown initial datum kind {kind!r}")
    a0 = grid.check(a0, "a0").copy()
    b0 = a0 - p.kappa * _erf_half(y)
    b0[0] = 0.0
    b0[-1] = -p.kappa + a0[-1]
    return State(0.0, b0, b0 + phi(0.0, y, p))


def _erf_half(y):
    from .lift import erf
    return erf(y / 2.0)


def rhs_b(state: State, p: LiftParams, grid: Grid) -> np.ndarray:
    """``b_yy + b^2 - (int b) b_y - kappa^2`` at every node."""
    b = grid.check(state.b, "b")
    return (second_derivative(grid, b) + b * b
            - antiderivative(grid, b) * first_derivative(grid, b) - p.kappa ** 2)


def rhs_a(a, t, p: LiftParams, grid: Grid, coeffs: LiftCoefficients | None = None) -> np.ndarray:
    """``a_yy + a^2 - (int a) a_y + L[a] + F`` at every node."""
    a = grid.check(a, "a")
    c = coeffs if coeffs is not None else LiftCoefficients.at(t, p, grid)
    return (second_derivative(grid, a) + a * a
            - antiderivative(grid, a) * first_derivative(grid, a)
            + linear_L(a, t, p, grid, coeffs=c, strict=False) + c.forcing)


def _explicit_b(b, grid: Grid, p: LiftParams):
    return kernels.transport_b(b, grid.h, p.kappa)


def _explicit_a(a, t, grid: Grid, p: LiftParams):
    c = LiftCoefficients.at(t, p, grid)
    ia = kernels.cumtrapz(a, grid.h)
    da = kernels.d1(a, grid.h)
    out = (a * a - ia * da
           - 2.0 * a * c.phi + c.int_phi * da + ia * c.phi_y + c.forcing)
    out[0] = out[-1] = 0.0
    vel = ia - c.int_phi
    return out, vel, da, float(np.max(np.abs(vel)))


def _unknown(state: State, config: SolverConfig) -> np.ndarray:
    return state.b if config.formulation == "b" else state.a


def _explicit(u, t, grid, p, config):
    if config.formulation == "b":
        return _explicit_b(u, grid, p)
    return _explicit_a(u, t, grid, p)


def _boundary(t, grid, p, config):
    if config.formulation == "b":
        return 0.0, -p.kappa
    return 0.0, float(phi(t, grid.y_max, p)) - p.kappa


def prepare(state: State, config: SolverConfig, p: LiftParams, grid: Grid) -> State:
    """Attach the explicit term, velocity and transport speed if missing."""
    if state.explicit is not None:
        return state
    u = np.ascontiguousarray(_unknown(state, config))
    expl, vel, du, speed = _explicit(u, state.t, grid, p, config)
    return replace(state, explicit=expl, speed=speed, vel=vel, du=du)


def step(state: State, dt: float, config: SolverConfig, p: LiftParams,
         grid: Grid | None = None, source=None) -> State:
    """Advance one IMEX step of size ``dt``.

    Scheme 1 is backward/forward Euler. Scheme 2 is the variable-step
    semi-implicit BDF2 with linearly extrapolated explicit terms and
    velocity; its first step falls back to scheme 1. In both, the transport
    ``V u_y`` is moved to the implicit side with V fixed at its (extrapolated)
    value, and the same term at the old levels is added back explicitly.
    ``source(t, y)``, if given, is added at the new time level.
    """
    grid = grid or config.grid()
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    state = prepare(state, config, p, grid)
    u = _unknown(state, config)
    t_new = state.t + dt

    if config.scheme == 2 and state.prev is not None:
        u_old, n_old, du_old, v_old = state.prev
        om = dt / state.dt_prev
        alpha = (1.0 + 2.0 * om) / (1.0 + om)
        vel = (1.0 + om) * state.vel - om * v_old
        extrap = ((1.0 + om) * (state.explicit + vel * state.du)
                  - om * (n_old + vel * du_old))
        rhs = (1.0 + om) * u - (om * om / (1.0 + om)) * u_old
    else:
        alpha = 1.0
        vel = state.vel
        extrap = state.explicit + vel * state.du
        rhs = u.copy()
    if source is not None:
        extrap = extrap + np.asarray(source(t_new, grid.nodes), dtype=float)
    rhs = rhs + dt * extrap

    left, right = _boundary(t_new, grid, p, config)
    with np.errstate(over="ignore", invalid="ignore"):
        u_new = kernels.implicit_solve(np.ascontiguousarray(rhs), alpha, dt, grid.h,
                                       np.ascontiguousarray(vel), left, right)
    if not np.all(np.isfinite(u_new)):
        raise SolverError(f"non-finite values after the step to t={t_new:.6g}")

    ph = phi(t_new, grid.nodes, p)
    if config.formulation == "b":
        b_new, a_new = u_new, u_new + ph
        a_new[0] = 0.0
    else:
        a_new, b_new = u_new, u_new - ph
        b_new[0] = 0.0
    new = State(t_new, b_new, a_new, state.step_index + 1,
                dt_prev=dt, prev=(u, state.explicit, state.du, state.vel))
    with np.errstate(over="ignore", invalid="ignore"):
        return prepare(new, config, p, grid)


def min_principle_monitor(state: State) -> float:
    return float(np.min(state.a))


@dataclass
class BlowupReport:
    outcome: str
    t_final: float
    t_star: float | None
    final_max_abs_a: float
    min_a: float
    min_a_time: float
    n_steps: int
    doubling_times: list
    history: dict = field(repr=False)
    far_field_slope: float = 0.0
    message: str = ""
    # largest |b_y(y_max)| seen and the first time it exceeded the tolerance;
    # past that time the profile has reached the truncation boundary
    far_field_slope_max: float = 0.0
    far_field_exit_time: float | None = None

    def doubling_intervals(self) -> np.ndarray:
        return np.diff(np.asarray(self.doubling_times, dtype=float))

    def to_dict(self):
        return {
            "outcome": self.outcome, "t_final": self.t_final, "t_star": self.t_star,
            "final_max_abs_a": self.final_max_abs_a, "min_a": self.min_a,
            "min_a_time": self.min_a_time, "n_steps": self.n_steps,
            "doublings": len(self.doubling_times),
            "doubling_times": list(self.doubling_times),
            "far_field_slope": self.far_field_slope,
            "far_field_slope_max": self.far_field_slope_max,
            "far_field_exit_time": self.far_field_exit_time, "message": self.message,
        }


@dataclass
class RunResult:
    states: list
    report: BlowupReport
    trace: object | None = None
    grid: Grid | None = None

    def __iter__(self):
        return iter((self.states, self.report, self.trace))


def choose_dt(state: State, config: SolverConfig, grid: Grid) -> float:
    """Step limited by the explicit terms: ``safety * min(h / max|V|, 1 / max|b|)``."""
    dt = config.dt_init
    if state.speed > 0:
        dt = min(dt, config.safety * grid.h / state.speed)
    bmax = float(np.max(np.abs(state.b)))
    if bmax > 0:
        dt = min(dt, config.safety / bmax)
    return dt


def run(config: SolverConfig, p: LiftParams, weight=None, state0: State | None = None,
        progress=None) -> RunResult:
    """Integrate until ``t_max``, blowup, or a minimum-principle violation.

    Blowup is declared when the admissible step falls below ``dt_min`` or
    ``max|a|`` exceeds ``blowup_threshold``. With a weight the Lyapunov
    functional and its rate decomposition are recorded at every step.
    """
    grid = config.grid()
    state = state0 if state0 is not None else initial_datum(
        "gaussian_bump", config.amplitude, grid, p)
    state = prepare(state, config, p, grid)

    recorder = None
    if weight is not None:
        from .lyapunov import TraceRecorder
        recorder = TraceRecorder(weight, p, grid)
        recorder.record(state)

    probe_idx = [int(round(y / grid.h)) for y in config.probes]
    hist = {"t": [], "dt": [], "max_abs_a": [], "min_a": []}
    for y in config.probes:
        hist[f"b_at_{y:g}"] = []

    ff = {"max": 0.0, "exit": None}

    def log(s, dt):
        b = s.b
        slope = abs(3.0 * b[-1] - 4.0 * b[-2] + b[-3]) / (2.0 * grid.h)
        ff["max"] = max(ff["max"], slope)
        if ff["exit"] is None and slope > config.far_field_tol:
            ff["exit"] = s.t
        hist["t"].append(s.t)
        hist["dt"].append(dt)
        hist["max_abs_a"].append(s.max_abs_a)
        hist["min_a"].append(min_principle_monitor(s))
        for y, i in zip(config.probes, probe_idx):
            hist[f"b_at_{y:g}"].append(float(s.b[i]))

    log(state, 0.0)
    states = [state]
    next_sample = config.sample_dt
    a_ref = max(state.max_abs_a, 1e-300)
    doublings = []
    next_double = 2.0 * a_ref if state.max_abs_a > 0 else math.inf
    tol_min = (config.min_principle_c * grid.h ** 2
               if config.min_principle_c is not None else math.inf)
    min_a, min_a_t = min_principle_monitor(state), 0.0
    outcome, message = "reached_t_max", ""
    prev_state = state

    while True:
        if state.t >= config.t_max * (1 - 1e-14):
            break
        if state.step_index >= config.max_steps:
            message = "step budget exhausted"
            break
        dt = choose_dt(state, config, grid)
        if dt < config.dt_min:
            outcome, message = "blewup", f"time step collapsed to {dt:.3e}"
            break
        dt = min(dt, config.t_max - state.t)
        try:
            new = step(state, dt, config, p, grid)
        except SolverError as exc:
            outcome, message = "blewup", str(exc)
            break
        prev_state, state = state, new
        log(state, dt)
        if recorder is not None:
            recorder.record(state)
        m = min_principle_monitor(state)
        if m < min_a:
            min_a, min_a_t = m, state.t
        amax = state.max_abs_a
        while amax >= next_double:
            # crossing time by interpolation in log(max|a|)
            a0, a1 = math.log(prev_state.max_abs_a), math.log(amax)
            lvl = math.log(next_double)
            frac = (lvl - a0) / (a1 - a0) if a1 > a0 else 1.0
            doublings.append(prev_state.t + frac * (state.t - prev_state.t))
            next_double *= 2.0
            states.append(state)
        if state.t >= next_sample - 1e-12:
            if states[-1] is not state:
                states.append(state)
            next_sample += config.sample_dt
        if progress is not None:
            progress(state)
        if m < -tol_min:
            outcome = "min_principle_violation"
            message = f"min a = {m:.3e} below -{tol_min:.3e} at t={state.t:.6g}"
            break
        if amax > config.blowup_threshold:
            outcome, message = "blewup", f"max|a| = {amax:.3e} exceeded the threshold"
            break

    if states[-1] is not state:
        states.append(state)
    t_star = None
    if outcome == "blewup":
        t_star = _extrapolate_blowup(hist)
    slope = float(abs(first_derivative(grid, state.b)[-1]))
    report = BlowupReport(outcome, state.t, t_star, state.max_abs_a, min_a, min_a_t,
                          state.step_index, doublings, hist, slope, message,
                          ff["max"], ff["exit"])
    trace = recorder.finish() if recorder is not None else None
    return RunResult(states, report, trace, grid)


def _extrapolate_blowup(hist) -> float:
    """Zero of ``1/max|a|`` extrapolated linearly from the last two steps."""
    t = hist["t"]
    m = hist["max_abs_a"]
    if len(t) < 2 or not (m[-1] > m[-2] > 0):
        return t[-1]
    inv1, inv0 = 1.0 / m[-1], 1.0 / m[-2]
    return t[-1] + inv1 * (t[-1] - t[-2]) / (inv0 - inv1)


def select_rows(hist, cadence: float, t_star: float | None):
    """Row indices at a fixed time cadence plus geometric in ``T* - t``."""
    t = np.asarray(hist["t"])
    keep = {0, len(t) - 1}
    marks = np.floor(t / cadence + 1e-9)
    keep.update(np.flatnonzero(np.diff(marks) > 0) + 1)
    if t_star is not None and len(t) > 1:
        gap = np.maximum(t_star - t, 1e-300)
        levels = np.floor(np.log2(gap[0] / gap))
        keep.update(np.flatnonzero(np.diff(levels) > 0) + 1)
    return sorted(int(i) for i in keep)


def fmt(x) -> str:
    """Round-trippable 17-significant-digit text."""
    return format(float(x), ".17g")


def write_trajectory_csv(path, report: BlowupReport, cadence: float):
    hist = report.history
    cols = list(hist)
    rows = select_rows(hist, cadence, report.t_star)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(cols)
        for i in rows:
            wr.writerow([fmt(hist[c][i]) for c in cols])
    return rows
