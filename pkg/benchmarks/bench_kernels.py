"""Timing of the numba and numpy interpolation kernels.

Usage: python3 benchmarks/bench_kernels.py [--points N] [--repeat K]
"""

import argparse
import time

import numpy as np

from polarwave import kernels
from polarwave.fields import Grid


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=1 << 16)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    cases = [
        ("1d n=1024 order=8", Grid(1, 1024, 40.0), 8),
        ("1d n=1024 order=4", Grid(1, 1024, 40.0), 4),
        ("2d n=256^2 order=4", Grid(2, 256, 40.0), 4),
    ]
    print(f"numba available: {kernels.USING_NUMBA}")
    print("case,points,numpy_s,numba_s,speedup,max_abs_diff")
    for name, grid, order in cases:
        vals = rng.normal(size=grid.shape)
        pts = grid.origin + rng.random((args.points, grid.dim)) * np.array(grid.extent)
        if grid.dim == 1:
            pts = pts[:, 0]
        ref = kernels.interp_periodic_numpy(vals, pts, grid.origin, grid.spacing, order)
        t_np = best_of(lambda: kernels.interp_periodic_numpy(vals, pts, grid.origin, grid.spacing, order), args.repeat)
        if kernels.USING_NUMBA:
            out = kernels.interp_periodic_numba(vals, pts, grid.origin, grid.spacing, order)
            t_nb = best_of(lambda: kernels.interp_periodic_numba(vals, pts, grid.origin, grid.spacing, order), args.repeat)
            diff = float(np.max(np.abs(out - ref)))
            print(f"{name},{args.points},{t_np:.4g},{t_nb:.4g},{t_np / t_nb:.1f},{diff:.1e}")
        else:
            print(f"{name},{args.points},{t_np:.4g},nan,nan,nan")


if __name__ == "__main__":
    main()
