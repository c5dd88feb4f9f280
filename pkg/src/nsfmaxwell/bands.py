"""Band-structure sweeps over sampled wave vectors and their CSV/SVG output."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig
from .curl import CurlOperator
from .lattice import PathSample, corner_arclengths
from .nfsep import MaterialBlock, NfsepOperator, solve_general, solve_hhpd
from .spectral import build_svd

FIXED_HEAD = ("k_index", "kx", "ky", "kz", "arclen")
FIXED_TAIL = ("lanczos_iters", "cg_iters_total", "seconds")


def point_seed(seed: int, k_index: int) -> int:
    """Solver seed for one k point; depends only on the run seed and the point's index."""
    return int(np.random.SeedSequence([seed, k_index]).generate_state(1)[0])


@dataclass
class BandRow:
    k_index: int
    k: tuple[float, float, float]
    arclen: float
    omega: np.ndarray  # length nev, NaN where missing
    residuals: np.ndarray
    lanczos_iters: int = 0
    cg_iters_total: int = 0
    seconds: float = 0.0
    converged: bool = False
    error: str | None = None

    def numeric(self) -> list[float]:
        """All numeric fields except wall time."""
        return [self.k_index, *self.k, self.arclen, *self.omega, *self.residuals,
                self.lanczos_iters, self.cg_iters_total]


@dataclass
class BandTable:
    nev: int
    rows: list[BandRow]
    lattice_constant: float = 1.0
    ticks: list[tuple[float, str]] = field(default_factory=list)
    tol: float = 0.0

    @property
    def ok(self) -> bool:
        return all(r.converged for r in self.rows)

    def omega_matrix(self) -> np.ndarray:
        return np.array([r.omega for r in self.rows]).reshape(len(self.rows), self.nev)

    def numeric_fields(self) -> np.ndarray:
        return np.array([r.numeric() for r in self.rows], dtype=float)

    def header(self, normalized: bool = False) -> list[str]:
        cols = list(FIXED_HEAD)
        cols += [f"omega_{j}" for j in range(1, self.nev + 1)]
        cols += [f"res_{j}" for j in range(1, self.nev + 1)]
        cols += list(FIXED_TAIL)
        if normalized:
            cols += [f"omega_norm_{j}" for j in range(1, self.nev + 1)]
        return cols


def _pad(values, nev) -> np.ndarray:
    out = np.full(nev, np.nan)
    values = np.real(np.asarray(values))[:nev]
    out[: len(values)] = values
    return out


def solve_point(config: RunConfig, material: MaterialBlock, k_index: int, sample: PathSample) -> BandRow:
    """Solve one wave vector; failures are recorded in the row rather than raised."""
    k = sample.k.as_tuple()
    nan = np.full(config.nev, np.nan)
    try:
        svd = build_svd(config.grid, sample.k, config.alpha, config.beta)
        op = NfsepOperator(svd, material, config.mode)
        curl = CurlOperator(config.grid, sample.k)
        seed = point_seed(config.seed, k_index)
        if config.mode == "hhpd":
            res = solve_hhpd(op, config.nev, tol=config.tol, cg_tol=config.cg_tol, seed=seed, curl=curl)
        else:
            res = solve_general(op, config.nev, tol=config.tol, seed=seed, curl=curl)
    except Exception as exc:  # noqa: BLE001  the sweep keeps going and reports the failure
        return BandRow(k_index, k, sample.arclength, nan, nan.copy(),
                       error=f"{type(exc).__name__}: {exc}")
    omega = _pad(res.omega, config.nev)
    resid = _pad(res.residuals, config.nev)
    converged = len(res.omega) == config.nev and bool(np.all(res.residuals <= 10 * config.tol))
    error = None
    if not converged:
        error = (f"{len(res.omega)} of {config.nev} frequencies, max residual "
                 f"{np.max(res.residuals, initial=0.0):.3e} vs bound {10 * config.tol:.3e}")
    return BandRow(k_index, k, sample.arclength, omega, resid, res.lanczos_iters, res.cg_iters_total,
                   res.seconds, converged, error)


def run_band_sweep(config: RunConfig, threads: int | None = None, progress=None) -> BandTable:
    """Solve every sampled wave vector of ``config`` on a pool of worker threads.

    Rows come back in path order whatever the completion order; each point's
    random start depends only on the run seed and the point index, so the
    numeric output does not depend on the thread count.
    """
    threads = config.threads if threads is None else threads
    medium = config.build_medium()
    material = MaterialBlock(medium)
    samples = list(config.samples)
    rows: list[BandRow | None] = [None] * len(samples)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {pool.submit(solve_point, config, material, i, s): i for i, s in enumerate(samples)}
        for fut, i in futures.items():
            rows[i] = fut.result()
            if progress is not None:
                progress(rows[i])
    ticks = []
    if config.path is not None:
        ticks = list(zip(corner_arclengths(config.path), config.path.labels))
    return BandTable(config.nev, rows, config.grid.a, ticks, config.tol)


def emit_csv(table: BandTable, path, normalized: bool = False) -> None:
    """Write the table; ``normalized`` appends ``omega*a/(2 pi)`` columns."""
    if not table.rows:
        raise ValueError("cannot write an empty band table")
    path = Path(path)
    scale = table.lattice_constant / (2 * math.pi)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(table.header(normalized))
            for r in table.rows:
                line = [r.k_index, *map(repr, r.k), repr(r.arclen)]
                line += [repr(float(x)) for x in r.omega]
                line += [repr(float(x)) for x in r.residuals]
                line += [r.lanczos_iters, r.cg_iters_total, repr(r.seconds)]
                if normalized:
                    line += [repr(float(x) * scale) for x in r.omega]
                w.writerow(line)
    except OSError as exc:
        raise OSError(f"cannot write band table to {path}: {exc.strerror}") from exc


def read_csv(path) -> BandTable:
    """Parse a table written by :func:`emit_csv` (normalized columns are ignored)."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        nev = sum(1 for c in header if c.startswith("omega_") and not c.startswith("omega_norm_"))
        rows = []
        for rec in reader:
            v = dict(zip(header, rec))
            omega = np.array([float(v[f"omega_{j}"]) for j in range(1, nev + 1)])
            res = np.array([float(v[f"res_{j}"]) for j in range(1, nev + 1)])
            rows.append(BandRow(int(v["k_index"]), (float(v["kx"]), float(v["ky"]), float(v["kz"])),
                                float(v["arclen"]), omega, res, int(v["lanczos_iters"]),
                                int(v["cg_iters_total"]), float(v["seconds"]),
                                converged=bool(np.all(np.isfinite(omega)))))
    return BandTable(nev, rows)


def emit_svg(table: BandTable, path, normalized: bool = False) -> None:
    """Line plot of every band against path arc length, one polyline per band."""
    if not table.rows:
        raise ValueError("cannot plot an empty band table")
    from matplotlib.backends.backend_svg import FigureCanvasSVG
    from matplotlib.figure import Figure

    s = np.array([r.arclen for r in table.rows])
    omega = table.omega_matrix()
    ylabel = r"$\omega$"
    if normalized:
        omega = omega * table.lattice_constant / (2 * math.pi)
        ylabel = r"$\omega a / 2\pi$"
    fig = Figure(figsize=(6, 4))
    FigureCanvasSVG(fig)
    ax = fig.add_subplot()
    for j in range(table.nev):
        (line,) = ax.plot(s, omega[:, j], color="C0", lw=1.2, marker="." if len(s) == 1 else None)
        line.set_gid(f"band-{j + 1}")
    for x, label in table.ticks:
        ax.axvline(x, color="0.7", lw=0.6)
    if table.ticks:
        ax.set_xticks([t[0] for t in table.ticks], [t[1] for t in table.ticks])
    else:
        ax.set_xlabel("arc length")
    ax.set_ylabel(ylabel)
    ax.set_xlim(s.min(), s.max() if s.max() > s.min() else s.min() + 1)
    fig.tight_layout()
    path = Path(path)
    try:
        fig.savefig(path, format="svg")
    except OSError as exc:
        raise OSError(f"cannot write band plot to {path}: {exc.strerror}") from exc
