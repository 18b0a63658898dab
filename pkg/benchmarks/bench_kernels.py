"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from ancient_fbmcf import kernels
from ancient_fbmcf.flow_solver import build_initial_profile
from ancient_fbmcf.spectrum import solve_lambda0


def _cases(gs):
    mus = np.linspace(-25.0, 60.0, 341)
    heat0 = np.ones(201)
    state = build_initial_profile(gs.n, 0.05, 200, gs)

    def shoot(impl):
        return lambda: impl.shoot_residuals(gs.n, 0, mus, 1e-4, 2000)

    def heat(impl):
        return lambda: impl.heat_advance(heat0.copy(), gs.n, 1 / 200, 0.25 / 200 ** 2, 2000)

    def flow(impl):
        return lambda: impl.flow_advance(state.u.copy(), state.xb, 0.0, gs.n, 0.2, 0.0,
                                         math.inf, 2.0, 0.0, 2000)

    return [("shoot_residuals (341 mu)", shoot), ("heat_advance (2000 steps)", heat),
            ("flow_advance (2000 steps, M=200)", flow)]


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--dim", type=int, default=2)
    args = p.parse_args(argv)
    if kernels.compiled_impl is None:
        print("compiled extension not available; nothing to compare")
        return
    gs = solve_lambda0(args.dim)
    print(f"{'kernel':<34} {'python [s]':>11} {'cython [s]':>11} {'speed-up':>9}")
    for name, make in _cases(gs):
        tp = min(timeit.repeat(make(kernels.python_impl), number=1, repeat=args.repeat))
        tc = min(timeit.repeat(make(kernels.compiled_impl), number=1, repeat=args.repeat))
        print(f"{name:<34} {tp:>11.4f} {tc:>11.4f} {tp / tc:>8.1f}x")


if __name__ == "__main__":
    main()
