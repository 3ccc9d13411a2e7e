import math

import numpy as np
import pytest

from nematicflow import make_grid
from nematicflow.io import format_float, read_csv, read_snapshot, write_csv, write_snapshot, write_vtk
from nematicflow.presets import random_smooth


def test_format_float():
    assert format_float(0.1) == "0.1" and float(format_float(1 / 3)) == 1 / 3
    assert format_float(math.nan) == "nan" and format_float(-math.inf) == "-inf"


def test_csv_round_trip(tmp_path):
    path = write_csv(tmp_path / "a.csv", ("i", "x"), [[1, 0.25], [2, math.nan]], "abc123")
    text = path.read_text().splitlines()
    assert text[:3] == ["# manifest: abc123", "i,x", "1,0.25"]
    manifest, cols, rows = read_csv(path)
    assert manifest == "abc123" and cols == ["i", "x"]
    assert rows[0] == [1.0, 0.25] and math.isnan(rows[1][1])


@pytest.mark.parametrize("dims,mode", [((8, 12), "wall"), ((6, 4, 5), "periodic")])
def test_snapshot_round_trip(tmp_path, dims, mode):
    s = random_smooth(make_grid(dims, None, mode), seed=4)
    s.t = 0.125
    binf, txt = write_snapshot(s, tmp_path / "snap")
    back = read_snapshot(tmp_path / "snap")
    assert back.grid == s.grid and back.t == 0.125
    assert all(np.array_equal(a, b) for a, b in zip(back.u.comps, s.u.comps))
    assert np.array_equal(back.d.data, s.d.data) and np.array_equal(back.p.data, s.p.data)
    header = txt.read_text()
    assert "dtype <f8" in header and f"bc_mode {mode}" in header
    n_vals = sum(s.u.interior(a).size for a in range(len(dims))) + 4 * s.grid.n_cells
    assert binf.stat().st_size == 8 * n_vals


def test_snapshot_size_mismatch(tmp_path):
    s = random_smooth(make_grid((8, 8)))
    write_snapshot(s, tmp_path / "snap")
    with open(tmp_path / "snap.bin", "ab") as fh:
        fh.write(b"\0" * 8)
    with pytest.raises(ValueError):
        read_snapshot(tmp_path / "snap")


def test_vtk_layout(tmp_path):
    s = random_smooth(make_grid((6, 4)))
    lines = write_vtk(s, tmp_path / "s.vtk").read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0" and lines[3] == "DATASET STRUCTURED_POINTS"
    assert lines[4] == "DIMENSIONS 6 4 1" and lines[7] == "POINT_DATA 24"
    i = lines.index("VECTORS director double")
    # x runs fastest: second point is cell (1, 0)
    assert [float(v) for v in lines[i + 2].split()] == pytest.approx(s.d.interior[:, 1, 0].tolist())
    assert len(lines) == 10 + 24 + 1 + 24 + 1 + 24
