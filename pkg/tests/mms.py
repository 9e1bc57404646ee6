"""Manufactured solution ``b*(t, y) = exp(-t) sin(pi y / Y) - kappa sin^2(pi y / (2Y))``."""
import math

import numpy as np

from prandtl_axis.lift import LiftParams
from prandtl_axis.solver import SolverConfig, State, prepare, step


def exact(t, y, Y, kappa):
    k = math.pi / Y
    return math.exp(-t) * np.sin(k * y) - kappa * np.sin(0.5 * k * y) ** 2


def source(Y, kappa):
    k = math.pi / Y

    def s(t, y):
        e = math.exp(-t)
        b = exact(t, y, Y, kappa)
        b_t = -e * np.sin(k * y)
        b_y = e * k * np.cos(k * y) - 0.5 * kappa * k * np.sin(k * y)
        b_yy = -e * k * k * np.sin(k * y) - 0.5 * kappa * k * k * np.cos(k * y)
        ib = e * (1.0 - np.cos(k * y)) / k - kappa * (0.5 * y - np.sin(k * y) / (2.0 * k))
        return b_t - (b_yy + b * b - ib * b_y - kappa * kappa)

    return s


def mms_error(n, dt, scheme, Y=2.0, kappa=1.0, t_end=0.2):
    """Max-norm error at ``t_end`` after uniform steps of size ``dt``."""
    cfg = SolverConfig(y_max=Y, n=n, scheme=scheme, dt_init=max(dt, 1e-3), probes=())
    p = LiftParams(kappa)
    grid = cfg.grid()
    b0 = exact(0.0, grid.nodes, Y, kappa)
    b0[0], b0[-1] = 0.0, -kappa
    st = prepare(State(0.0, b0, b0.copy()), cfg, p, grid)
    src = source(Y, kappa)
    steps = int(round(t_end / dt))
    for _ in range(steps):
        st = step(st, dt, cfg, p, grid, source=src)
    return float(np.max(np.abs(st.b - exact(st.t, grid.nodes, Y, kappa))))
