"""Band structure along G-X-M-R-G for a configuration file, written as CSV and SVG.

Usage: python3 scripts/band_sweep.py configs/chiral_n8.toml [--threads N] [--out-dir DIR]
"""

import argparse
from pathlib import Path

from nsfmaxwell.bands import emit_csv, emit_svg, run_band_sweep
from nsfmaxwell.config import load_config


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("config")
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--out-dir", default=".")
    args = parser.parse_args()

    config = load_config(args.config, threads=args.threads)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.config).stem

    def report(row):
        status = "ok" if row.converged else f"FAILED ({row.error})"
        print(f"k {row.k_index:3d} s={row.arclen:.4f} omega[:3]={row.omega[:3]} {status}", flush=True)

    table = run_band_sweep(config, progress=report)
    emit_csv(table, out / f"{stem}.csv", normalized=config.normalized)
    emit_svg(table, out / f"{stem}.svg", normalized=config.normalized)
    print(f"{sum(r.converged for r in table.rows)}/{len(table.rows)} converged; wrote {out / stem}.csv/.svg")


if __name__ == "__main__":
    main()
