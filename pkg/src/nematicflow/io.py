"""Snapshots, legacy VTK output and CSV time series."""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .grid import DirectorField, MacVectorField, ScalarField, State, make_grid
from .operators import cell_velocity

SNAPSHOT_VERSION = 1


def format_float(x):
    """Shortest round-tripping text for a float; 'nan' and 'inf' spelled plainly."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def write_csv(path, columns, rows, manifest_hash=None):
    """Write a CSV with a fixed header, optionally preceded by ``# manifest: <hash>``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        if manifest_hash is not None:
            fh.write(f"# manifest: {manifest_hash}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([v if isinstance(v, (int, np.integer)) and not isinstance(v, bool)
                        else format_float(v) for v in row])
    return path


def read_csv(path):
    """Return (manifest_hash or None, columns, rows as float lists)."""
    manifest = None
    with Path(path).open(newline="") as fh:
        lines = fh.read().splitlines()
    if lines and lines[0].startswith("# manifest:"):
        manifest = lines[0].split(":", 1)[1].strip()
        lines = lines[1:]
    reader = csv.reader(lines)
    columns = next(reader)
    rows = [[float(v) for v in r] for r in reader if r]
    return manifest, columns, rows


def _snapshot_arrays(state):
    g = state.grid
    names, arrays = [], []
    for a in range(g.ndim):
        names.append(f"u{a}")
        arrays.append(state.u.interior(a))
    for i in range(3):
        names.append(f"d{i}")
        arrays.append(state.d.interior[i])
    names.append("p")
    arrays.append(state.p.interior)
    return names, arrays


def write_snapshot(state, stem):
    """Write ``stem.bin`` (little-endian float64, row-major, one block per
    component) and the text header ``stem.txt``."""
    stem = Path(stem)
    names, arrays = _snapshot_arrays(state)
    g = state.grid
    header = [
        f"version {SNAPSHOT_VERSION}",
        "dims " + " ".join(str(n) for n in g.dims),
        "lengths " + " ".join(format_float(L) for L in g.lengths),
        f"bc_mode {g.bc_mode.value}",
        f"time {format_float(state.t)}",
        "dtype <f8",
    ]
    for name, arr in zip(names, arrays):
        header.append(f"component {name} " + " ".join(str(n) for n in arr.shape))
    stem.with_suffix(".txt").write_text("\n".join(header) + "\n")
    with stem.with_suffix(".bin").open("wb") as fh:
        for arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return stem.with_suffix(".bin"), stem.with_suffix(".txt")


def read_snapshot(stem):
    stem = Path(stem)
    meta, comps = {}, []
    for line in stem.with_suffix(".txt").read_text().splitlines():
        key, _, rest = line.partition(" ")
        if key == "component":
            name, *shape = rest.split()
            comps.append((name, tuple(int(n) for n in shape)))
        else:
            meta[key] = rest
    grid = make_grid([int(n) for n in meta["dims"].split()],
                     [float(v) for v in meta["lengths"].split()], meta["bc_mode"])
    raw = np.frombuffer(stem.with_suffix(".bin").read_bytes(), dtype="<f8")
    arrays, pos = {}, 0
    for name, shape in comps:
        size = int(np.prod(shape))
        arrays[name] = raw[pos:pos + size].reshape(shape).astype(float)
        pos += size
    if pos != raw.size:
        raise ValueError(f"snapshot size mismatch: header covers {pos} values, file has {raw.size}")
    u = MacVectorField.from_interior(grid, [arrays[f"u{a}"] for a in range(grid.ndim)])
    d = DirectorField.from_interior(grid, np.stack([arrays[f"d{i}"] for i in range(3)]))
    p = ScalarField.from_interior(grid, arrays["p"])
    return State(u, d, p, float(meta["time"]))


def write_vtk(state, path):
    """Legacy-VTK structured points, cell-centred values written as point data."""
    g = state.grid
    dims = list(g.dims) + [1] * (3 - g.ndim)
    h = list(g.spacing) + [1.0] * (3 - g.ndim)
    origin = [0.5 * x for x in h[:g.ndim]] + [0.0] * (3 - g.ndim)

    def flat(a):
        # VTK runs x fastest
        return np.asarray(a).transpose(tuple(reversed(range(a.ndim)))).ravel()

    U = cell_velocity(state.u)
    vel = [flat(c) for c in U] + [np.zeros(int(np.prod(g.dims)))] * (3 - g.ndim)
    dirs = [flat(c) for c in state.d.interior]
    lines = [
        "# vtk DataFile Version 3.0",
        f"nematic state t={format_float(state.t)}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        "DIMENSIONS " + " ".join(str(n) for n in dims),
        "ORIGIN " + " ".join(format_float(x) for x in origin),
        "SPACING " + " ".join(format_float(x) for x in h),
        f"POINT_DATA {int(np.prod(dims))}",
        "SCALARS pressure double 1",
        "LOOKUP_TABLE default",
    ]
    lines += [format_float(v) for v in flat(state.p.interior)]
    for name, comps in (("velocity", vel), ("director", dirs)):
        lines.append(f"VECTORS {name} double")
        lines += [" ".join(format_float(c[i]) for c in comps) for i in range(comps[0].size)]
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)
