"""Average inner CG iterations per solve as the chirality grows.

Usage: python3 scripts/gamma_cg_iterations.py [--n 8] [--gammas 0.5 1 2 3] [--cg-tol 1e-14]
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
    parser.add_argument("--n", type=int, default=8)
    parser.add_argument("--eps-i", type=float, default=13.0)
    parser.add_argument("--gammas", type=float, nargs="+", default=[0.5, 1.0, 2.0, 3.0])
    parser.add_argument("--nev", type=int, default=10)
    parser.add_argument("--cg-tol", type=float, default=1e-14)
    args = parser.parse_args()

    grid = make_grid(1.0, args.n, args.n, args.n)
    svd = build_svd(grid, (0.5, 0.0, 0.0))
    tol = default_eig_tol(grid)
    print("gamma  phi_inside  seconds  avg_cg  max_res/tol  omega[:3]")
    for gamma in args.gammas:
        medium = build_medium(grid, Geometry(), "chiral", args.eps_i, 1.0, gamma)
        # Phi inside the network; the solve gets harder as it approaches zero
        margin = args.eps_i - gamma**2
        op = NfsepOperator(svd, MaterialBlock(medium), "hhpd")
        start = time.perf_counter()
        res = solve_hhpd(op, args.nev, cg_tol=args.cg_tol)
        elapsed = time.perf_counter() - start
        print(f"{gamma:5.2f}  {margin:10.3f}  {elapsed:7.1f}  {res.avg_cg_iters:6.1f}  "
              f"{res.residuals.max() / tol:11.2f}  {np.array2string(res.omega[:3], precision=6)}", flush=True)


if __name__ == "__main__":
    main()
