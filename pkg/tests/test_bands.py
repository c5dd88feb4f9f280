import csv
import re

import numpy as np
import pytest

from nsfmaxwell import bands
from nsfmaxwell.bands import BandRow, BandTable, emit_csv, emit_svg, point_seed, read_csv, run_band_sweep
from nsfmaxwell.config import parse_config
from nsfmaxwell.spectral import eigen_diagonals

VACUUM = """
[grid]
n = 4
[medium]
kind = "chiral"
eps_i = 1
gamma = 0
[path]
samples_per_segment = 2
[solver]
nev = 6
"""

CHIRAL_POINT = """
[grid]
n = 4
[medium]
kind = "chiral"
eps_i = 13
gamma = 0.5
[path]
k = [[0.5, 0, 0]]
[solver]
nev = 6
"""


@pytest.fixture(scope="module")
def vacuum_table():
    return run_band_sweep(parse_config(VACUUM, threads=1))


def test_vacuum_sweep_is_analytic(vacuum_table):
    config = parse_config(VACUUM, threads=1)
    assert vacuum_table.ok and len(vacuum_table.rows) == 9
    for row, sample in zip(vacuum_table.rows, config.samples):
        root = np.sqrt(eigen_diagonals(config.grid, sample.k).lambda_q)
        expected = np.sort(np.concatenate([root, root]))[: config.nev]
        np.testing.assert_allclose(row.omega, expected, rtol=1e-10)
        assert np.all(row.residuals <= 10 * config.tol)


def test_rows_ordered_and_sorted(vacuum_table):
    assert [r.k_index for r in vacuum_table.rows] == list(range(9))
    s = [r.arclen for r in vacuum_table.rows]
    assert np.all(np.diff(s) >= 0)
    for r in vacuum_table.rows:
        assert np.all(np.diff(r.omega) >= 0)


def test_single_point_delegates_to_solver():
    from test_nfsep import DENSE_CHIRAL_N4_X

    table = run_band_sweep(parse_config(CHIRAL_POINT, threads=1))
    assert table.ok
    np.testing.assert_allclose(table.rows[0].omega, DENSE_CHIRAL_N4_X, rtol=1e-8)


def test_csv_layout_and_round_trip(vacuum_table, tmp_path):
    path = tmp_path / "bands.csv"
    emit_csv(vacuum_table, path)
    with path.open() as fh:
        rows = list(csv.reader(fh))
    nev = vacuum_table.nev
    assert len(rows) == len(vacuum_table.rows) + 1
    assert rows[0] == (["k_index", "kx", "ky", "kz", "arclen"] + [f"omega_{j}" for j in range(1, nev + 1)]
                       + [f"res_{j}" for j in range(1, nev + 1)] + ["lanczos_iters", "cg_iters_total", "seconds"])
    assert all(len(r) == 5 + 2 * nev + 3 for r in rows)
    back = read_csv(path)
    np.testing.assert_array_equal(back.numeric_fields(), vacuum_table.numeric_fields())


def test_csv_normalized_columns(vacuum_table, tmp_path):
    path = tmp_path / "norm.csv"
    emit_csv(vacuum_table, path, normalized=True)
    with path.open() as fh:
        rows = list(csv.reader(fh))
    nev = vacuum_table.nev
    assert rows[0][-nev:] == [f"omega_norm_{j}" for j in range(1, nev + 1)]
    w = float(rows[1][5])
    assert np.isclose(float(rows[1][-nev]), w / (2 * np.pi))


def test_svg_has_one_polyline_per_band(vacuum_table, tmp_path):
    path = tmp_path / "bands.svg"
    emit_svg(vacuum_table, path)
    text = path.read_text()
    assert text.lstrip().startswith("<?xml")
    ids = re.findall(r'id="band-(\d+)"', text)
    assert sorted(map(int, ids)) == list(range(1, vacuum_table.nev + 1))


def test_single_row_svg(tmp_path):
    row = BandRow(0, (0.5, 0.0, 0.0), 0.0, np.arange(1.0, 11.0), np.zeros(10), converged=True)
    path = tmp_path / "one.svg"
    emit_svg(BandTable(10, [row]), path)
    assert len(re.findall(r'id="band-\d+"', path.read_text())) == 10


def test_empty_table_rejected(tmp_path):
    with pytest.raises(ValueError):
        emit_csv(BandTable(3, []), tmp_path / "x.csv")
    with pytest.raises(ValueError):
        emit_svg(BandTable(3, []), tmp_path / "x.svg")


def test_io_error_names_path(vacuum_table, tmp_path):
    target = tmp_path / "missing" / "bands.csv"
    with pytest.raises(OSError, match="missing"):
        emit_csv(vacuum_table, target)


def test_failure_is_recorded_and_sweep_continues(monkeypatch):
    calls = []
    real = bands.solve_hhpd

    def flaky(op, nev, **kw):
        calls.append(1)
        if len(calls) == 2:
            raise RuntimeError("boom")
        return real(op, nev, **kw)

    monkeypatch.setattr(bands, "solve_hhpd", flaky)
    table = run_band_sweep(parse_config(CHIRAL_POINT.replace("[[0.5, 0, 0]]", "[[0.5, 0, 0], [0.5, 0.5, 0], [0.5, 0.5, 0.5]]"), threads=1))
    assert not table.ok
    assert [r.converged for r in table.rows] == [True, False, True]
    assert "boom" in table.rows[1].error and np.all(np.isnan(table.rows[1].omega))


def test_point_seed():
    assert point_seed(0, 3) == point_seed(0, 3)
    assert point_seed(0, 3) != point_seed(0, 4)
    assert point_seed(0, 3) != point_seed(1, 3)


def test_thread_count_does_not_change_numbers():
    config = parse_config(VACUUM.replace("eps_i = 1", "eps_i = 13").replace("gamma = 0", "gamma = 0.5")
                          .replace("samples_per_segment = 2", "samples_per_segment = 1"))
    one = run_band_sweep(config, threads=1)
    three = run_band_sweep(config, threads=3)
    np.testing.assert_array_equal(one.numeric_fields(), three.numeric_fields())
