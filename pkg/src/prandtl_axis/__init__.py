"""Numerical laboratory for finite-time blowup of the Prandtl boundary-layer
equations restricted to the symmetry axis.

Modules: :mod:`grid` (uniform grid and operators), :mod:`lift` (the exact
heat lift), :mod:`weight` (the Lyapunov weight and its certificate),
:mod:`solver` (IMEX time stepping and blowup detection), :mod:`lyapunov`
(the weighted functional and Riccati comparison) and :mod:`cli`.
"""
from .grid import Grid, GridError, make_grid
from .kernels import BACKEND
from .lift import LiftParams, phi, verify_lift_properties
from .lyapunov import G, choose_amplitude, decompose_rhs, fit_constant, riccati_lower_bound
from .solver import SolverConfig, initial_datum, run, step
from .weight import WeightSpec, build_weight, certify

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "G", "Grid", "GridError", "LiftParams", "SolverConfig", "WeightSpec",
    "build_weight", "certify", "choose_amplitude", "decompose_rhs", "fit_constant",
    "initial_datum", "make_grid", "phi", "riccati_lower_bound", "run", "step",
    "verify_lift_properties",
]
