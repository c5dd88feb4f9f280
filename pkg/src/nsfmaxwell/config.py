"""Run configuration for band sweeps, read from TOML.

Schema (``[section] key``; ``*`` marks required keys)::

    [grid]    n*            cells per axis (or n1, n2, n3 for anisotropic grids)
              a             lattice constant, default 1
    [medium]  kind*         "chiral" or "pseudochiral"
              eps_i*        permittivity inside the sphere/cylinder network
              gamma*        chirality strength
              eps_o         permittivity outside, default 1
              r, s          sphere and cylinder radii as fractions of a, default 0.345, 0.11
    [path]    samples_per_segment   default 10 (G-X-M-R-G)
              gamma_shift   |k| used in place of k = 0, default 1/(64 max n)
              k             explicit list of [k1, k2, k3] triples; replaces the G-X-M-R-G path
    [solver]  nev           number of frequencies per k, default 10
              mode          "auto", "hhpd" or "general", default "auto"
              tol           eigensolver tolerance, default 1e4 eps / (2 sqrt(sum delta^-2))
              cg_tol        inner CG tolerance of the hhpd solver, default 1e-15
              alpha, beta   basis parameters, default 1, 2
              seed          default 0
              threads       worker count; default from NSFMAXWELL_THREADS, else 1
    [output]  csv, svg      output paths (optional)
              normalized    add omega*a/(2 pi) columns to the CSV, default false
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import tomli

from .lattice import (BrillouinPath, Grid, PathSample, WaveVector, gamma_shift_for, make_grid,
                      sample_path_detailed, sc_brillouin_path)
from .media import Geometry, MediumModel, build_medium, check_assumption
from .nfsep import HHPD_CG_TOL, default_eig_tol
from .spectral import RankConditionError, check_rank_parameters

THREADS_ENV = "NSFMAXWELL_THREADS"
MODES = ("auto", "hhpd", "general")

_SCHEMA = {
    "grid": {"n", "n1", "n2", "n3", "a"},
    "medium": {"kind", "eps_i", "eps_o", "gamma", "r", "s"},
    "path": {"samples_per_segment", "gamma_shift", "k"},
    "solver": {"nev", "mode", "tol", "cg_tol", "alpha", "beta", "seed", "threads"},
    "output": {"csv", "svg", "normalized"},
}
REQUIRED = ("grid.n", "medium.kind", "medium.eps_i", "medium.gamma")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


@dataclass(frozen=True)
class RunConfig:
    grid: Grid
    geometry: Geometry
    kind: str
    eps_inside: float
    eps_outside: float
    gamma: float
    samples: tuple[PathSample, ...]
    path: BrillouinPath | None
    nev: int = 10
    mode: str = "hhpd"  # resolved: "hhpd" or "general"
    requested_mode: str = "auto"
    tol: float = 0.0
    cg_tol: float = HHPD_CG_TOL
    alpha: float = 1.0
    beta: float = 2.0
    seed: int = 0
    threads: int = 1
    csv_path: str | None = None
    svg_path: str | None = None
    normalized: bool = False

    def build_medium(self) -> MediumModel:
        return build_medium(self.grid, self.geometry, self.kind, self.eps_inside, self.eps_outside,
                            self.gamma, require_hhpd=self.mode == "hhpd")


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    """Map ``(section, key)`` to its 1-based line number."""
    out = {}
    section = ""
    header = re.compile(r"^\s*\[\s*([A-Za-z0-9_.\-]+)\s*\]")
    assign = re.compile(r"^\s*([A-Za-z0-9_\-]+)\s*=")
    for i, line in enumerate(text.splitlines(), start=1):
        m = header.match(line)
        if m:
            section = m.group(1)
            out.setdefault((section, ""), i)
            continue
        m = assign.match(line)
        if m:
            out.setdefault((section, m.group(1)), i)
    return out


def _threads_default() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV}={raw!r} is not an integer") from None
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1, got {value}")
    return value


def _explicit_samples(ks, line) -> tuple[PathSample, ...]:
    if not isinstance(ks, list) or not ks:
        raise ConfigError("path.k must be a non-empty list of [k1, k2, k3] triples", line)
    samples = []
    s = 0.0
    prev = None
    for j, k in enumerate(ks):
        if not (isinstance(k, list) and len(k) == 3 and all(isinstance(x, (int, float)) for x in k)):
            raise ConfigError(f"path.k[{j}] must be three numbers, got {k!r}", line)
        try:
            wv = WaveVector.of(k)
        except ValueError as exc:
            raise ConfigError(f"path.k[{j}]: {exc}", line) from None
        if wv.is_zero():
            raise ConfigError(f"path.k[{j}] is zero; k = 0 makes the curl basis singular, "
                              "use a small nonzero vector instead", line)
        p = np.array(wv.as_tuple())
        if prev is not None:
            s += float(np.linalg.norm(p - prev))
        prev = p
        samples.append(PathSample(wv, s, False))
    return tuple(samples)


def parse_config(text: str, threads: int | None = None) -> RunConfig:
    """Parse and validate TOML ``text``; ``threads`` overrides the configured worker count."""
    lines = _key_lines(text)
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None

    if not raw:
        raise ConfigError("empty configuration; required keys: " + ", ".join(REQUIRED))

    for section, body in raw.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]; expected one of {sorted(_SCHEMA)}",
                              lines.get((section, "")))
        if not isinstance(body, dict):
            raise ConfigError(f"'{section}' must be a [section], not a value", lines.get(("", section)))
        for key in body:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]; allowed: {sorted(_SCHEMA[section])}",
                                  lines.get((section, key)))
    missing = [key for key in REQUIRED if key.split(".")[1] not in raw.get(key.split(".")[0], {})]
    grid_raw = raw.get("grid", {})
    if "grid.n" in missing and {"n1", "n2", "n3"} <= set(grid_raw):
        missing.remove("grid.n")
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))

    def get(section, key, default, kind):
        body = raw.get(section, {})
        if key not in body:
            return default
        value = body[key]
        line = lines.get((section, key))
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if kind is bool:
            ok = isinstance(value, bool)
        else:
            ok = isinstance(value, kind) and not isinstance(value, bool)
        if not ok:
            raise ConfigError(f"{section}.{key} must be {kind.__name__}, got {value!r}", line)
        return value

    def where(section, key):
        return lines.get((section, key))

    # grid
    if "n" in grid_raw:
        if {"n1", "n2", "n3"} & set(grid_raw):
            raise ConfigError("give either grid.n or grid.n1/n2/n3, not both", where("grid", "n"))
        n = get("grid", "n", None, int)
        ns = (n, n, n)
    else:
        ns = tuple(get("grid", f"n{i}", None, int) for i in (1, 2, 3))
    a = get("grid", "a", 1.0, float)
    try:
        grid = make_grid(a, *ns)
    except ValueError as exc:
        raise ConfigError(str(exc), where("grid", "n") or where("grid", "n1")) from None

    # medium
    kind = get("medium", "kind", None, str)
    if kind not in ("chiral", "pseudochiral"):
        raise ConfigError(f"medium.kind must be 'chiral' or 'pseudochiral', got {kind!r}",
                          where("medium", "kind"))
    eps_i = get("medium", "eps_i", None, float)
    eps_o = get("medium", "eps_o", 1.0, float)
    gamma = get("medium", "gamma", None, float)
    for key, value in (("eps_i", eps_i), ("eps_o", eps_o)):
        if not value > 0:
            raise ConfigError(f"medium.{key} must be positive, got {value}", where("medium", key))
    if gamma < 0:
        raise ConfigError(f"medium.gamma must be >= 0, got {gamma}", where("medium", "gamma"))
    r = get("medium", "r", 0.345, float)
    s = get("medium", "s", 0.11, float)
    try:
        geometry = Geometry(r * a, s * a, a)
    except ValueError as exc:
        raise ConfigError(f"medium geometry: {exc}", where("medium", "r") or where("medium", "s")) from None

    # solver
    nev = get("solver", "nev", 10, int)
    if nev < 0:
        raise ConfigError(f"solver.nev must be >= 0, got {nev}", where("solver", "nev"))
    requested = get("solver", "mode", "auto", str)
    if requested not in MODES:
        raise ConfigError(f"solver.mode must be one of {MODES}, got {requested!r}", where("solver", "mode"))
    tol = get("solver", "tol", default_eig_tol(grid), float)
    cg_tol = get("solver", "cg_tol", HHPD_CG_TOL, float)
    for key, value in (("tol", tol), ("cg_tol", cg_tol)):
        if not 0 < value < 1:
            raise ConfigError(f"solver.{key} must lie in (0, 1), got {value}", where("solver", key))
    alpha = get("solver", "alpha", 1.0, float)
    beta = get("solver", "beta", 2.0, float)
    try:
        check_rank_parameters(grid, alpha, beta)
    except RankConditionError as exc:
        raise ConfigError(str(exc), where("solver", "beta") or where("solver", "alpha")) from None
    seed = get("solver", "seed", 0, int)
    if threads is None:
        threads = get("solver", "threads", None, int)
        if threads is None:
            threads = _threads_default()
    if threads < 1:
        raise ConfigError(f"thread count must be >= 1, got {threads}", where("solver", "threads"))

    if requested == "hhpd" and kind in ("chiral", "pseudochiral") and gamma >= np.sqrt(eps_i):
        raise ConfigError(
            f"mode 'hhpd' needs gamma < sqrt(eps_i) = {np.sqrt(eps_i):.6g}, got gamma = {gamma}",
            where("medium", "gamma") or where("solver", "mode"))
    medium = build_medium(grid, geometry, kind, eps_i, eps_o, gamma)
    report = check_assumption(medium)
    if requested == "auto":
        mode = "hhpd" if report.passed else "general"
    elif requested == "hhpd" and not report.passed:
        raise ConfigError("mode 'hhpd' requested but the medium fails the positivity check: "
                          + "; ".join(report.messages), where("solver", "mode"))
    else:
        mode = requested

    # k points
    path = None
    if "k" in raw.get("path", {}):
        if {"samples_per_segment", "gamma_shift"} & set(raw["path"]):
            raise ConfigError("path.k replaces the G-X-M-R-G path; drop samples_per_segment/gamma_shift",
                              where("path", "k"))
        samples = _explicit_samples(raw["path"]["k"], where("path", "k"))
    else:
        per = get("path", "samples_per_segment", 10, int)
        if per < 1:
            raise ConfigError(f"path.samples_per_segment must be >= 1, got {per}",
                              where("path", "samples_per_segment"))
        shift = get("path", "gamma_shift", gamma_shift_for(*ns), float)
        if not 0 < shift <= 0.5:
            raise ConfigError(f"path.gamma_shift must lie in (0, 1/2], got {shift}",
                              where("path", "gamma_shift"))
        path = sc_brillouin_path(a, per, shift)
        samples = tuple(sample_path_detailed(path))

    csv_path = get("output", "csv", None, str)
    svg_path = get("output", "svg", None, str)
    normalized = get("output", "normalized", False, bool)

    return RunConfig(grid, geometry, kind, eps_i, eps_o, gamma, samples, path, nev, mode, requested,
                     tol, cg_tol, alpha, beta, seed, threads, csv_path, svg_path, normalized)


def load_config(path, threads: int | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, threads=threads)
