"""Benchmark the JIT kernel lane against the pure NumPy fallback.

Runs the three time-stepping loops on identical inputs through both
implementations and reports best-of-N wall times plus the speedup.  The JIT
lane is warmed before timing so compilation is excluded.

    python3 benchmarks/bench_kernels.py --n-cells 256 --steps 256
"""
import argparse
import time

import numpy as np

from burgers_control import _kernels_np
from burgers_control import _kernels_numba

NEWTON_TOL = 1e-11
NEWTON_MAX_ITER = 50


def build_workload(n_cells: int, steps: int):
    x = np.linspace(0.0, 1.0, n_cells + 1)
    dx = 1.0 / n_cells
    dt = 1.0 / n_cells
    u0 = np.sin(np.pi * x)
    u0[0] = u0[-1] = 0.0
    z0 = x * (1.0 - x)
    z0[0] = z0[-1] = 0.0
    t_mid = (np.arange(steps) + 0.5) * dt
    f_mid = 0.5 * np.sin(2.0 * np.pi * x)[None, :] * np.cos(3.0 * t_mid)[:, None]
    t_frames = np.arange(steps + 1) * dt
    a_frames = np.sin(2.0 * np.pi * x)[None, :] * np.cos(4.0 * t_frames)[:, None]
    nu = 0.1
    return {
        "burgers_integrate": (u0, f_mid, nu, dx, dt, NEWTON_TOL, NEWTON_MAX_ITER),
        "linear_integrate": (u0, a_frames, nu, dx, dt),
        "advective_integrate": (z0, a_frames, nu, dx, dt),
    }


def best_time(fn, args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        frames, status, _ = fn(*args)
        elapsed = time.perf_counter() - start
        if status != 0:
            raise RuntimeError(f"{fn.__name__} returned status {status}")
        best = min(best, elapsed)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-cells", type=int, default=256)
    parser.add_argument("--steps", type=int, default=256)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    work = build_workload(args.n_cells, args.steps)
    # warm the JIT so compilation time stays out of the table
    small = build_workload(16, 4)
    for op, small_args in small.items():
        getattr(_kernels_numba, op)(*small_args)

    print(f"kernel benchmarks (n_cells={args.n_cells}, steps={args.steps}, "
          f"best of {args.repeats})")
    print(f"{'op':<22}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for op, op_args in work.items():
        t_nb = best_time(getattr(_kernels_numba, op), op_args, args.repeats)
        t_np = best_time(getattr(_kernels_np, op), op_args, args.repeats)
        print(f"{op:<22}{t_nb * 1e3:>10.2f}ms{t_np * 1e3:>10.2f}ms"
              f"{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
