#!/usr/bin/env python3
"""Time the compiled kernels against the pure-Python fallback.

Runs the public entry points (particle simulation and the radial solvers)
once per backend and reports wall-clock times and speedups.  Invoke from
the repository root:

    python3 benchmarks/bench_backends.py          # full sizes
    python3 benchmarks/bench_backends.py --quick  # CI-friendly sizes
"""
import argparse
import time

from barenblatt._kernels import available_backends
from barenblatt.core import derive_params
from barenblatt.pde import (grid_for, profile_cell_averages, solve_linearized,
                            solve_plaplace)
from barenblatt.sde import SimConfig, simulate


def _best_of(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(quick: bool) -> None:
    params = derive_params(2, 4.0)
    n_paths = 4000 if quick else 40000
    cells_nl = 300 if quick else 1000
    cells_lin = 600 if quick else 2000
    repeats = 2 if quick else 3

    cfg = dict(d=2, p=4.0, t_start=0.05, t_end=0.4, h=1e-3,
               n_paths=n_paths, seed=9, n_workers=1)

    grid_nl = grid_for(params, 1.0, cells_nl)
    u0_nl = profile_cell_averages(params, 0.1, grid_nl)
    grid_lin = grid_for(params, 1.0, cells_lin)
    u0_lin = profile_cell_averages(params, 0.2, grid_lin)

    tasks = {
        f"particles (N={n_paths}, 350 steps)":
            lambda b: simulate(SimConfig(backend=b, **cfg)),
        f"nonlinear solver (M={cells_nl}, t 0.1 -> 1)":
            lambda b: solve_plaplace(grid_nl, u0_nl, 4.0, 0.9, t_from=0.1,
                                     backend=b),
        f"linearized solver (M={cells_lin}, duration 0.8)":
            lambda b: solve_linearized(grid_lin, u0_lin, params, 0.8,
                                       delta=0.2, backend=b),
    }

    backends = available_backends()
    print(f"backends: {', '.join(backends)}   "
          f"(best of {repeats} runs each)\n")
    both = "python" in backends and "cython" in backends
    width = max(len(name) for name in tasks)
    header = f"{'task':<{width}}" + "".join(f"  {b:>10}" for b in backends)
    if both:
        header += f"  {'cython speedup':>15}"
    print(header)
    print("-" * len(header))
    for name, run in tasks.items():
        times = [_best_of(lambda: run(b), repeats) for b in backends]
        row = f"{name:<{width}}" + "".join(f"  {t:>9.3f}s" for t in times)
        if both:
            ratio = (times[backends.index("python")]
                     / times[backends.index("cython")])
            row += f"  {ratio:>14.1f}x"
        print(row)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--quick", action="store_true",
                        help="smaller problem sizes and fewer repeats")
    args = parser.parse_args()
    bench(args.quick)


if __name__ == "__main__":
    main()
