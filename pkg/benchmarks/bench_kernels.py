"""Compare the Cython and numpy kernel backends.

Times each hot kernel on a range of grid sizes, then a short end-to-end
solver run under each backend (selected through ``PRANDTL_AXIS_KERNELS`` in a
subprocess, since the choice is made at import).

    python3 benchmarks/bench_kernels.py [--sizes 1000 4000 16000] [--repeat 5]
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from prandtl_axis import _kernels_py

try:
    from prandtl_axis import _ckernels
except ImportError:
    _ckernels = None

RUN_SNIPPET = """
import json, time
from prandtl_axis import kernels
from prandtl_axis.lift import LiftParams
from prandtl_axis.solver import SolverConfig, run
t0 = time.perf_counter()
rep = run(SolverConfig(n={n}, amplitude=10.0, t_max={t_max}), LiftParams(1.0)).report
print(json.dumps({{"backend": kernels.BACKEND, "seconds": time.perf_counter() - t0,
                  "steps": rep.n_steps}}))
"""


def kernel_cases(n, rng):
    y = np.linspace(0.0, 40.0, n + 1)
    h = y[1] - y[0]
    b = -np.tanh(y) + 0.5 * y * np.exp(-y * y / 8) + 1e-3 * rng.normal(size=y.size)
    b[0] = 0.0
    vel = np.cumsum(b) * h
    return {
        "cumtrapz": lambda m: m.cumtrapz(b, h),
        "d1": lambda m: m.d1(b, h),
        "d2": lambda m: m.d2(b, h),
        "transport_b": lambda m: m.transport_b(b, h, 1.0),
        "implicit_solve": lambda m: m.implicit_solve(b, 1.0, 1e-3, h, vel, 0.0, -1.0),
    }


def best_of(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def end_to_end(n, t_max):
    out = {}
    for backend in ("python", "cython"):
        env = dict(os.environ, PRANDTL_AXIS_KERNELS=backend)
        proc = subprocess.run([sys.executable, "-c", RUN_SNIPPET.format(n=n, t_max=t_max)],
                              env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            out[backend] = None
            continue
        out[backend] = json.loads(proc.stdout.strip().splitlines()[-1])
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 4000, 16000])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--run-n", type=int, default=4000)
    ap.add_argument("--run-t", type=float, default=0.3)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels not built; only the numpy backend is available")
    rng = np.random.default_rng(0)

    print(f"{'kernel':<16}{'n':>8}{'numpy [us]':>14}{'cython [us]':>14}{'speedup':>10}")
    for n in args.sizes:
        for name, fn in kernel_cases(n, rng).items():
            tp = best_of(lambda: fn(_kernels_py), args.repeat) * 1e6
            if _ckernels is None:
                print(f"{name:<16}{n:>8}{tp:>14.2f}{'-':>14}{'-':>10}")
                continue
            tc = best_of(lambda: fn(_ckernels), args.repeat) * 1e6
            print(f"{name:<16}{n:>8}{tp:>14.2f}{tc:>14.2f}{tp / tc:>10.2f}")

    res = end_to_end(args.run_n, args.run_t)
    print(f"\nsolver run n={args.run_n}, A=10, t_max={args.run_t}:")
    for backend, r in res.items():
        if r is None:
            print(f"  {backend:<7} unavailable")
        else:
            print(f"  {r['backend']:<7} {r['seconds']:.3f}s  {r['steps']} steps")


if __name__ == "__main__":
    main()
