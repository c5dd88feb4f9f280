"""Command-line front end: ``nsfmaxwell solve --config run.toml``.

Exit status is 0 when every k point converged with residuals within
``10*tol``, 1 when any point failed or an oracle cross-check disagreed, and
2 for configuration or I/O errors.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .bands import BandTable, emit_csv, emit_svg, run_band_sweep
from .config import THREADS_ENV, ConfigError, RunConfig, load_config

# dense cross-checks only run up to this many cells
ORACLE_MAX_CELLS = 4**3
ORACLE_RTOL = 1e-8


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsfmaxwell",
                                     description="Band structures of chiral and pseudochiral photonic crystals.")
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", help="sweep the configured wave vectors")
    solve.add_argument("--config", required=True, help="TOML run configuration")
    solve.add_argument("--threads", type=int, default=None,
                       help=f"worker threads (default: [solver] threads, then ${THREADS_ENV}, then 1)")
    solve.add_argument("--out-csv", default=None, help="band table path (overrides [output] csv)")
    solve.add_argument("--out-svg", default=None, help="band plot path (overrides [output] svg)")
    solve.add_argument("--oracle", action="store_true",
                       help=f"cross-check against dense eigensolves (grids up to {ORACLE_MAX_CELLS} cells)")
    solve.add_argument("--quiet", action="store_true", help="only print the summary line")
    return parser


def oracle_check(config: RunConfig, table: BandTable) -> list[str]:
    """Compare every row with the dense GEP; returns one message per disagreement."""
    from .oracle import build_dense_bundle, dense_gep_eigen

    medium = config.build_medium()
    problems = []
    for row in table.rows:
        if row.error is not None:
            continue
        spec = dense_gep_eigen(build_dense_bundle(config.grid, row.k, medium, config.alpha, config.beta))
        nz = spec.nonzero
        positive = np.sort(nz.real[nz.real > 0])[: config.nev]
        got = row.omega[: len(positive)]
        err = np.max(np.abs(got - positive) / np.abs(positive))
        if not err <= ORACLE_RTOL:
            problems.append(f"k_index {row.k_index}: max relative deviation from dense GEP {err:.3e}")
    return problems


def _solve(args) -> int:
    try:
        config = load_config(args.config, threads=args.threads)
    except ConfigError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return 2
    if config.nev == 0:
        print("nev = 0: nothing to compute")
        return 0

    def report(row):
        if args.quiet:
            return
        if row.error is None:
            w = " ".join(f"{x:.6f}" for x in row.omega)
            print(f"[{row.k_index:3d}] k=({row.k[0]:.4f},{row.k[1]:.4f},{row.k[2]:.4f}) {w}  "
                  f"max res {np.nanmax(row.residuals):.2e}", flush=True)
        else:
            print(f"[{row.k_index:3d}] FAILED: {row.error}", flush=True)

    if not args.quiet:
        g = config.grid
        print(f"grid {g.n1}x{g.n2}x{g.n3}, {config.kind} (eps_i={config.eps_inside}, eps_o={config.eps_outside}, "
              f"gamma={config.gamma}), mode {config.mode}, {len(config.samples)} k points, "
              f"{config.threads} thread(s), tol {config.tol:.3e}", flush=True)
    table = run_band_sweep(config, progress=report)

    status = 0 if table.ok else 1
    csv_path = args.out_csv or config.csv_path
    svg_path = args.out_svg or config.svg_path
    try:
        if csv_path:
            emit_csv(table, csv_path, normalized=config.normalized)
        if svg_path:
            emit_svg(table, svg_path, normalized=config.normalized)
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return 2

    if args.oracle:
        if config.grid.n > ORACLE_MAX_CELLS:
            print(f"--oracle skipped: {config.grid.n} cells exceeds {ORACLE_MAX_CELLS}", file=sys.stderr)
        else:
            problems = oracle_check(config, table)
            for p in problems:
                print(f"oracle: {p}", file=sys.stderr)
            if problems:
                status = 1
            else:
                print(f"oracle: all {len(table.rows)} rows match the dense GEP to {ORACLE_RTOL:g}")

    failed = sum(not r.converged for r in table.rows)
    print(f"{len(table.rows) - failed}/{len(table.rows)} k points converged")
    return status


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "solve":
        return _solve(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
