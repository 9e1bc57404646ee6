"""Strict flat TOML run configuration.

Every key is optional and has a documented default; unknown keys, nested
tables and wrongly typed values are rejected with the offending key named.

========================  =========================================================
key                       meaning (units)
========================  =========================================================
kappa                     far-field slip, ``b(inf) = -kappa`` (>= 0)
amplitude                 bump amplitude A, or ``"auto"`` to meet the blowup threshold
profile                   ``"gaussian_bump"`` or a path to a two-column ``y value`` file
y_max, n                  domain ``[0, y_max]`` split into ``n`` intervals
scheme                    1 (IMEX Euler) or 2 (IMEX BDF2)
formulation               ``"b"`` (primary) or ``"a"`` (shifted unknown)
dt_init, dt_min           largest and smallest admissible step (time units)
safety                    CFL safety factor in ``(0, 1]``
t_max                     final time
blowup_threshold          ``max|a|`` that ends a run as blowup
far_field_tol             tolerance on ``|b_y(y_max)|``
min_principle_c           stop when ``min a < -C h^2`` (absent: monitor only)
weight                    ``"paper-default"`` or ``"custom"``
weight_r, weight_B,       power, scale and onset of a custom weight
weight_epsilon
out_dir                   output directory (``--out`` overrides)
sample_cadence            time spacing of trajectory rows
probes                    list of y positions recorded in the trajectory
lift_times                list of times checked by ``verify-lift``
certify_samples           samples per condition in ``certify-weight``
seed, random_fields       seed and count of synthetic fields in ``lyapunov-report``
margin_tol                relative slack allowed in the Lyapunov bound margins
sweep_amplitudes          list of amplitudes for ``sweep``
sweep_kappas              list of kappas for ``sweep``
========================  =========================================================
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .grid import Grid, GridError
from .lift import LiftParams
from .solver import SolverConfig
from .weight import WeightError, WeightSpec


class ConfigError(ValueError):
    """Malformed or invalid configuration."""


@dataclass(frozen=True)
class RunConfig:
    kappa: float = 1.0
    amplitude: float | str = 10.0
    profile: str = "gaussian_bump"
    y_max: float = 40.0
    n: int = 4000
    scheme: int = 1
    formulation: str = "b"
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    safety: float = 0.5
    t_max: float = 1.0
    blowup_threshold: float = 1e6
    far_field_tol: float = 1e-6
    min_principle_c: float | None = None
    weight: str = "paper-default"
    weight_r: float | None = None
    weight_B: float | None = None
    weight_epsilon: float | None = None
    out_dir: str = "out"
    sample_cadence: float = 0.05
    probes: tuple = (0.5, 1.0, 2.0, 5.0)
    lift_times: tuple = (0.0, 0.1, 1.0, 5.0, 10.0)
    certify_samples: int = 100_000
    seed: int = 0
    random_fields: int = 100
    margin_tol: float = 1e-6
    sweep_amplitudes: tuple = ()
    sweep_kappas: tuple = ()

    # -- derived objects ---------------------------------------------------

    def lift_params(self) -> LiftParams:
        return LiftParams(self.kappa)

    def grid(self) -> Grid:
        return Grid(self.y_max, self.n)

    def weight_spec(self) -> WeightSpec:
        if self.weight == "paper-default":
            return WeightSpec.paper_default()
        kw = {}
        for key, name in (("r", "weight_r"), ("B", "weight_B"), ("epsilon", "weight_epsilon")):
            val = getattr(self, name)
            if val is not None:
                kw[key] = val
        return WeightSpec(**kw)

    def solver_config(self, amplitude: float | None = None) -> SolverConfig:
        amp = self.amplitude if amplitude is None else amplitude
        if isinstance(amp, str):
            amp = 0.0
        return SolverConfig(
            y_max=self.y_max, n=self.n, scheme=self.scheme, amplitude=float(amp),
            dt_init=self.dt_init, dt_min=self.dt_min, safety=self.safety,
            blowup_threshold=self.blowup_threshold, t_max=self.t_max,
            far_field_tol=self.far_field_tol, formulation=self.formulation,
            sample_dt=self.sample_cadence, probes=tuple(self.probes),
            min_principle_c=self.min_principle_c)

    def custom_profile(self, grid: Grid) -> np.ndarray | None:
        """Node values of a file-based profile, linearly interpolated."""
        if self.profile == "gaussian_bump":
            return None
        data = np.loadtxt(self.profile, ndmin=2)
        if data.shape[1] != 2:
            raise ConfigError(f"profile file {self.profile!r} must have two columns")
        return np.interp(grid.nodes, data[:, 0], data[:, 1], right=data[-1, 1])


_FLOAT_KEYS = {"kappa", "y_max", "dt_init", "dt_min", "safety", "t_max", "blowup_threshold",
               "far_field_tol", "min_principle_c", "weight_r", "weight_B", "weight_epsilon",
               "sample_cadence", "margin_tol"}
_INT_KEYS = {"n", "scheme", "certify_samples", "seed", "random_fields"}
_STR_KEYS = {"profile", "formulation", "weight", "out_dir"}
_LIST_KEYS = {"probes", "lift_times", "sweep_amplitudes", "sweep_kappas"}
KEYS = {f.name for f in fields(RunConfig)}


def _number(key, val):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"key {key!r}: expected a number, got {val!r}")
    if not math.isfinite(val):
        raise ConfigError(f"key {key!r}: value must be finite")
    return float(val)


def _coerce(key, val):
    if isinstance(val, dict):
        raise ConfigError(f"key {key!r}: nested tables are not allowed")
    if key in _FLOAT_KEYS:
        return _number(key, val)
    if key in _INT_KEYS:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"key {key!r}: expected an integer, got {val!r}")
        return val
    if key in _STR_KEYS:
        if not isinstance(val, str):
            raise ConfigError(f"key {key!r}: expected a string, got {val!r}")
        return val
    if key in _LIST_KEYS:
        if not isinstance(val, list):
            raise ConfigError(f"key {key!r}: expected a list, got {val!r}")
        return tuple(_number(key, v) for v in val)
    if key == "amplitude":
        if val == "auto":
            return val
        return _number(key, val)
    raise ConfigError(f"unknown key {key!r}")  # pragma: no cover


def from_mapping(raw: dict) -> RunConfig:
    unknown = sorted(set(raw) - KEYS)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r}")
    cfg = RunConfig(**{k: _coerce(k, v) for k, v in raw.items()})
    validate(cfg)
    return cfg


def load(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return from_mapping(raw)


def validate(cfg: RunConfig) -> None:
    """Build every owned object once so invalid values fail before any work."""
    if cfg.weight not in ("paper-default", "custom"):
        raise ConfigError(f"key 'weight': expected 'paper-default' or 'custom', got {cfg.weight!r}")
    if cfg.weight == "paper-default":
        given = [k for k in ("weight_r", "weight_B", "weight_epsilon") if getattr(cfg, k) is not None]
        if given:
            raise ConfigError(f"key {given[0]!r} needs weight = \"custom\"")
    if cfg.profile != "gaussian_bump" and not Path(cfg.profile).is_file():
        raise ConfigError(f"key 'profile': no such file {cfg.profile!r}")
    if cfg.certify_samples < 10_000:
        raise ConfigError("key 'certify_samples' must be at least 10000")
    if cfg.random_fields < 1:
        raise ConfigError("key 'random_fields' must be positive")
    if cfg.sample_cadence <= 0:
        raise ConfigError("key 'sample_cadence' must be positive")
    if cfg.margin_tol < 0:
        raise ConfigError("key 'margin_tol' must be non-negative")
    if any(t < 0 for t in cfg.lift_times) or not cfg.lift_times:
        raise ConfigError("key 'lift_times' must be a non-empty list of non-negative times")
    if isinstance(cfg.amplitude, float) and cfg.amplitude < 0:
        raise ConfigError("key 'amplitude' must be non-negative")
    try:
        cfg.lift_params()
        cfg.grid()
        cfg.solver_config()
        cfg.weight_spec().validate()
    except (ValueError, GridError, WeightError) as exc:
        raise ConfigError(str(exc)) from exc
