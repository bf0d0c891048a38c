#!/usr/bin/env python3
"""Benchmark the numba kernel lane against the pure-numpy fallback.

Times one evaluation of each hot kernel (full-grid curvature extraction,
conserved flux-form RHS, general curvature-form RHS, and the axisymmetric
RHS) on representative grids, then reports the per-call times and the
numba speedup. Both lanes are imported directly, so the result does not
depend on HFLOW_NO_NUMBA.

Usage: python benchmarks/bench_kernels.py [--size 128] [--repeat 50]
"""

import argparse
import math
import time

import numpy as np

from hflow import _kernels as K
from hflow._compat import HAVE_NUMBA
from hflow import hypersurface as hs


def timeit(fun, args, repeat):
    fun(*args)  # warm-up (and JIT compile for the numba lane)
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fun(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=128, help="full grid n_theta = n_xi")
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args()

    if not HAVE_NUMBA:
        print("numba unavailable or disabled; only the numpy lane can run")

    nt = args.size
    grid = hs.SphereGrid.full2d(nt, nt)
    phi = hs.perturbed_sphere(grid, 1.0, 0.05, 2).phi
    phi = phi + 1e-3 * np.sin(2 * grid.theta)[:, None] * np.cos(
        3 * np.arange(nt) * grid.h_xi)[None, :]
    phi = np.minimum(phi, -1e-3)

    grid1 = hs.SphereGrid.axisym(2, 4 * nt)
    phi1 = hs.perturbed_sphere(grid1, 1.0, 0.05, 2).phi

    cm = np.array([1.0, 1.0])
    cn = np.array([1.0, 2.0, 1.0])
    full = (phi, grid.sin_t, grid.cos_t, grid.h_theta, grid.h_xi)
    cases = [
        ("full2d curvature", K.full2d_geometry_numpy, full,
         K.full2d_curvature_numba if HAVE_NUMBA else None, full),
        ("full2d rhs conserved", K.full2d_rhs_conserved_numpy,
         (phi, grid.sin_t, grid.h_theta, grid.h_xi),
         K.full2d_rhs_conserved_numba if HAVE_NUMBA else None,
         (phi, grid.sin_t, grid.h_theta, grid.h_xi)),
        ("full2d rhs general", K.full2d_rhs_general_numpy,
         full + (1, 2, 1.0, -1.0, 2, 1),
         K.full2d_rhs_general_numba if HAVE_NUMBA else None,
         full + (1, 2, 1.0, -1.0, 2, 1, cm, cn)),
        ("axisym rhs conserved", K.axisym_rhs_conserved_numpy,
         (phi1, 2, grid1.sin_t, grid1.cos_t, grid1.h_theta),
         K.axisym_rhs_conserved_numba if HAVE_NUMBA else None,
         (phi1, 2, grid1.sin_t, grid1.cos_t, grid1.h_theta)),
    ]

    print(f"grid: full2d {nt}x{nt}, axisym {4 * nt}; best of {args.repeat}")
    print(f"{'kernel':<24}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name, f_np, a_np, f_nb, a_nb in cases:
        t_np = timeit(f_np, a_np, args.repeat)
        if f_nb is None:
            print(f"{name:<24}{t_np * 1e3:>10.3f}ms{'-':>12}{'-':>10}")
            continue
        t_nb = timeit(f_nb, a_nb, args.repeat)
        print(f"{name:<24}{t_np * 1e3:>10.3f}ms{t_nb * 1e3:>10.3f}ms{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
