"""Smallest three frequencies at the X point under mesh refinement.

Usage: python3 scripts/mesh_convergence.py [--sizes 8 16 32] [--gamma 0.5]
"""

import argparse
import time

import numpy as np

from nsfmaxwell.lattice import make_grid
from nsfmaxwell.media import Geometry, build_medium
from nsfmaxwell.nfsep import MaterialBlock, NfsepOperator, default_eig_tol, solve_hhpd
from nsfmaxwell.spectral import build_svd


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32])
    parser.add_argument("--eps-i", type=float, default=13.0)
    parser.add_argument("--gamma", type=float, default=0.5)
    parser.add_argument("--nev", type=int, default=3)
    args = parser.parse_args()

    k = (0.5, 0.0, 0.0)
    previous = None
    print("n  seconds  lanczos  avg_cg  max_res/tol  omega  |change|")
    for n in args.sizes:
        grid = make_grid(1.0, n, n, n)
        medium = build_medium(grid, Geometry(), "chiral", args.eps_i, 1.0, args.gamma)
        op = NfsepOperator(build_svd(grid, k), MaterialBlock(medium), "hhpd")
        start = time.perf_counter()
        res = solve_hhpd(op, args.nev)
        elapsed = time.perf_counter() - start
        change = "" if previous is None else np.array2string(np.abs(res.omega - previous), precision=5)
        print(f"{n:<3d} {elapsed:7.1f}  {res.lanczos_iters:7d}  {res.avg_cg_iters:6.1f}  "
              f"{res.residuals.max() / default_eig_tol(grid):11.2f}  "
              f"{np.array2string(res.omega, precision=8)}  {change}", flush=True)
        previous = res.omega


if __name__ == "__main__":
    main()
