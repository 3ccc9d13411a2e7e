"""MAC grid geometry, field containers and ghost-layer boundary conditions.

Storage convention
------------------
Every array carries one ghost layer on each side of every spatial axis.
Cell-centred arrays have padded length ``n + 2`` per axis; storage index
``s`` holds cell ``s - 1`` whose centre sits at ``(s - 1/2) h``.

Velocity component ``a`` lives on the faces normal to axis ``a``.  Along
its own axis storage index ``s`` holds face ``s - 1`` at ``x = (s - 1) h``,
so face ``s`` is the left face of cell storage ``s``.  Periodic grids have
``n`` distinct faces (padded length ``n + 2``); wall grids have ``n + 1``
faces including both boundary faces (padded length ``n + 3``).  Along the
other axes a face array is laid out like a cell array.

Ghost rules
-----------
Periodic: wraparound.  Wall: cell fields (director, pressure) are mirrored,
which gives a zero normal derivative at the wall.  Velocity components are
reflected with a sign change, which puts the interpolated wall velocity at
zero; boundary faces of the normal component are set to exactly zero.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import GridError, GridMismatch


class BCMode(str, enum.Enum):
    WALL = "wall"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class GridSpec:
    dims: tuple
    lengths: tuple
    bc_mode: BCMode

    @property
    def ndim(self):
        return len(self.dims)

    @property
    def spacing(self):
        return tuple(L / n for L, n in zip(self.lengths, self.dims))

    @property
    def cell_volume(self):
        return math.prod(self.spacing)

    @property
    def periodic(self):
        return self.bc_mode is BCMode.PERIODIC

    @property
    def n_cells(self):
        return math.prod(self.dims)

    def cell_shape(self):
        """Padded shape of a cell-centred array."""
        return tuple(n + 2 for n in self.dims)

    def n_faces(self, axis):
        return self.dims[axis] if self.periodic else self.dims[axis] + 1

    def face_shape(self, axis):
        """Padded shape of the velocity component normal to ``axis``."""
        shape = list(self.cell_shape())
        shape[axis] = self.n_faces(axis) + 2
        return tuple(shape)

    def cell_coords(self):
        """Coordinates of interior cell centres, ``indexing='ij'``."""
        axes = [(np.arange(n) + 0.5) * h for n, h in zip(self.dims, self.spacing)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def face_coords(self, axis):
        """Coordinates of the interior faces normal to ``axis``."""
        axes = []
        for ax, (n, h) in enumerate(zip(self.dims, self.spacing)):
            if ax == axis:
                axes.append(np.arange(self.n_faces(axis)) * h)
            else:
                axes.append((np.arange(n) + 0.5) * h)
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def describe(self):
        return {
            "dims": list(self.dims),
            "lengths": list(self.lengths),
            "bc_mode": self.bc_mode.value,
        }


def make_grid(dims, lengths=None, bc_mode="periodic"):
    """Build a :class:`GridSpec` on the box ``[0, L_0] x ... x [0, L_{d-1}]``.

    ``lengths`` defaults to the unit box.  Two or three axes are supported and
    every axis needs at least four cells.
    """
    dims = tuple(int(n) for n in dims)
    if len(dims) not in (2, 3):
        raise GridError(f"expected 2 or 3 axes, got {len(dims)}")
    if any(n < 4 for n in dims):
        raise GridError(f"every axis needs at least 4 cells, got dims={dims}")
    if lengths is None:
        lengths = (1.0,) * len(dims)
    lengths = tuple(float(L) for L in lengths)
    if len(lengths) != len(dims):
        raise GridError("lengths and dims must have the same number of axes")
    if any(not (L > 0.0) or not math.isfinite(L) for L in lengths):
        raise GridError(f"box lengths must be positive, got {lengths}")
    try:
        mode = BCMode(bc_mode.lower() if isinstance(bc_mode, str) else bc_mode)
    except ValueError:
        raise GridError(f"unknown bc_mode {bc_mode!r}") from None
    return GridSpec(dims, lengths, mode)


def check_same_grid(*items):
    grids = [getattr(x, "grid", x) for x in items]
    for g in grids[1:]:
        if g != grids[0]:
            raise GridMismatch(f"grid mismatch: {grids[0]} vs {g}")
    return grids[0]


def interior_slice(ndim, offset=0):
    return (slice(None),) * offset + (slice(1, -1),) * ndim


def fill_ghosts(a, grid, face_axis=None, parity=1, offset=0):
    """Fill the ghost layer of a padded array in place and return it.

    ``face_axis`` marks the array as the velocity component normal to that
    axis; ``parity`` is the wall reflection sign for the remaining axes,
    either one sign or one per axis.  ``offset`` counts leading non-spatial
    axes (e.g. 1 for the director).
    """
    signs = parity if isinstance(parity, (tuple, list)) else (parity,) * grid.ndim
    for ax in range(grid.ndim):
        v = np.moveaxis(a, offset + ax, 0)
        if grid.periodic:
            v[0] = v[-2]
            v[-1] = v[1]
        elif ax == face_axis:
            v[1] = 0.0
            v[-2] = 0.0
            v[0] = -v[2]
            v[-1] = -v[-3]
        else:
            v[0] = signs[ax] * v[1]
            v[-1] = signs[ax] * v[-2]
    return a


def _pad(values, shape, offset=0):
    out = np.zeros(values.shape[:offset] + tuple(shape), dtype=float)
    out[interior_slice(len(shape), offset)] = values
    return out


class _FieldArithmetic:
    """Linear combinations of padded arrays.

    Every ghost rule is linear, so combining fields with valid ghosts yields
    a field with valid ghosts.
    """

    def _arrays(self):
        raise NotImplementedError

    def _rebuild(self, arrays):
        raise NotImplementedError

    def _combine(self, other, op):
        if isinstance(other, _FieldArithmetic):
            check_same_grid(self, other)
            return self._rebuild([op(a, b) for a, b in zip(self._arrays(), other._arrays())])
        return self._rebuild([op(a, other) for a in self._arrays()])

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, scalar):
        return self._rebuild([a * scalar for a in self._arrays()])

    __rmul__ = __mul__

    def __neg__(self):
        return self._rebuild([-a for a in self._arrays()])

    def copy(self):
        return self._rebuild([a.copy() for a in self._arrays()])


@dataclass(eq=False)
class ScalarField(_FieldArithmetic):
    """Cell-centred scalar (pressure, |grad d|^2, ...)."""

    grid: GridSpec
    data: np.ndarray

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.cell_shape()))

    @classmethod
    def from_interior(cls, grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != tuple(grid.dims):
            raise GridMismatch(f"expected shape {grid.dims}, got {values.shape}")
        return cls(grid, fill_ghosts(_pad(values, grid.cell_shape()), grid))

    @property
    def interior(self):
        return self.data[interior_slice(self.grid.ndim)]

    def _arrays(self):
        return [self.data]

    def _rebuild(self, arrays):
        return ScalarField(self.grid, arrays[0])


@dataclass(eq=False)
class MacVectorField(_FieldArithmetic):
    """Velocity-like field with component ``a`` stored on faces normal to axis ``a``."""

    grid: GridSpec
    comps: list

    @classmethod
    def zeros(cls, grid):
        return cls(grid, [np.zeros(grid.face_shape(a)) for a in range(grid.ndim)])

    @classmethod
    def from_interior(cls, grid, values):
        comps = []
        for a, v in enumerate(values):
            v = np.asarray(v, dtype=float)
            want = grid.face_shape(a)
            if v.shape != tuple(n - 2 for n in want):
                raise GridMismatch(f"component {a}: expected interior shape "
                                   f"{tuple(n - 2 for n in want)}, got {v.shape}")
            comps.append(fill_ghosts(_pad(v, want), grid, face_axis=a, parity=-1))
        if len(comps) != grid.ndim:
            raise GridMismatch(f"need {grid.ndim} velocity components, got {len(comps)}")
        return cls(grid, comps)

    def interior(self, axis):
        return self.comps[axis][interior_slice(self.grid.ndim)]

    def active(self, axis):
        """Faces that carry unknowns (boundary faces excluded in wall mode)."""
        sl = list(interior_slice(self.grid.ndim))
        if not self.grid.periodic:
            sl[axis] = slice(2, -2)
        return self.comps[axis][tuple(sl)]

    def _arrays(self):
        return list(self.comps)

    def _rebuild(self, arrays):
        return MacVectorField(self.grid, list(arrays))


@dataclass(eq=False)
class DirectorField(_FieldArithmetic):
    """Three-component cell-centred field; always three components, also in 2D."""

    grid: GridSpec
    data: np.ndarray  # shape (3, *cell_shape)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((3,) + grid.cell_shape()))

    @classmethod
    def constant(cls, grid, vec):
        d = cls.zeros(grid)
        d.data[:] = np.asarray(vec, dtype=float).reshape((3,) + (1,) * grid.ndim)
        return d

    @classmethod
    def from_interior(cls, grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (3,) + tuple(grid.dims):
            raise GridMismatch(f"expected shape {(3,) + tuple(grid.dims)}, got {values.shape}")
        return cls(grid, fill_ghosts(_pad(values, grid.cell_shape(), offset=1), grid, offset=1))

    @property
    def interior(self):
        return self.data[interior_slice(self.grid.ndim, offset=1)]

    def norm_sq(self):
        """Cell-wise |d|^2 on the interior."""
        return np.sum(self.interior ** 2, axis=0)

    def renormalized(self):
        """Return d / |d| cell-wise."""
        vals = self.interior / np.sqrt(self.norm_sq())
        return DirectorField.from_interior(self.grid, vals)

    def _arrays(self):
        return [self.data]

    def _rebuild(self, arrays):
        return DirectorField(self.grid, arrays[0])


@dataclass(eq=False)
class State:
    u: MacVectorField
    d: DirectorField
    p: ScalarField
    t: float = 0.0

    def __post_init__(self):
        check_same_grid(self.u, self.d, self.p)

    @property
    def grid(self):
        return self.u.grid

    @classmethod
    def zeros(cls, grid, director=(0.0, 0.0, 1.0), t=0.0):
        return cls(MacVectorField.zeros(grid), DirectorField.constant(grid, director),
                   ScalarField.zeros(grid), t)

    def copy(self):
        return State(self.u.copy(), self.d.copy(), self.p.copy(), self.t)


def apply_velocity_bc(u):
    """Return a copy of ``u`` with no-slip ghosts (wall) or wrapped ghosts (periodic).

    In periodic mode only the wraparound ghosts are refreshed; there is no
    wall to enforce.
    """
    return MacVectorField(u.grid, [fill_ghosts(c.copy(), u.grid, face_axis=a, parity=-1)
                                   for a, c in enumerate(u.comps)])


def apply_director_bc(d):
    """Return a copy of ``d`` with mirrored (zero normal derivative) or wrapped ghosts."""
    return DirectorField(d.grid, fill_ghosts(d.data.copy(), d.grid, offset=1))


def apply_scalar_bc(p):
    return ScalarField(p.grid, fill_ghosts(p.data.copy(), p.grid))
