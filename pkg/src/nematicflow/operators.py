"""Second-order difference operators on the MAC grid and the nonlinear terms.

All operators expect inputs whose ghost layers are valid (every field built
through the constructors in :mod:`nematicflow.grid` satisfies this) and
return fields with freshly filled ghosts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    DirectorField,
    GridSpec,
    MacVectorField,
    ScalarField,
    _pad,
    check_same_grid,
    fill_ghosts,
)


def _win(P, ndim, spans=None, offset=0):
    """Window into a padded array: interior on every axis unless overridden.

    ``spans`` maps axis -> (start, stop) in padded storage indices.
    """
    spans = spans or {}
    sl = []
    for ax in range(ndim):
        if ax in spans:
            start, stop = spans[ax]
            sl.append(slice(start, stop))
        else:
            sl.append(slice(1, P.shape[offset + ax] - 1))
    return P[(slice(None),) * offset + tuple(sl)]


def _shifted(P, ndim, axis, k, offset=0):
    n = P.shape[offset + axis]
    return _win(P, ndim, {axis: (1 + k, n - 1 + k)}, offset)


def _centered(P, grid, axis, offset=0):
    h = grid.spacing[axis]
    return (_shifted(P, grid.ndim, axis, 1, offset) - _shifted(P, grid.ndim, axis, -1, offset)) / (2.0 * h)


def _laplace_padded(P, grid, offset=0):
    out = 0.0
    for ax, h in enumerate(grid.spacing):
        out = out + (_shifted(P, grid.ndim, ax, 1, offset) - 2.0 * _shifted(P, grid.ndim, ax, 0, offset)
                     + _shifted(P, grid.ndim, ax, -1, offset)) / h ** 2
    return out


def _cells_to_faces(P, grid, axis, offset=0, keep_padded=()):
    """(left cell, right cell) windows for every interior face normal to ``axis``."""
    nf = grid.n_faces(axis)
    spans_l = {axis: (0, nf)}
    spans_r = {axis: (1, nf + 1)}
    for ax in keep_padded:
        spans_l[ax] = spans_r[ax] = (0, P.shape[offset + ax])
    return _win(P, grid.ndim, spans_l, offset), _win(P, grid.ndim, spans_r, offset)


def _faces_to_cells(F, grid, axis):
    """(left face, right face) windows for every interior cell along ``axis``."""
    n = grid.dims[axis]
    return _win(F, grid.ndim, {axis: (1, n + 1)}), _win(F, grid.ndim, {axis: (2, n + 2)})


def _cell_parity(grid, odd_axes=()):
    return tuple(-1 if ax in odd_axes else 1 for ax in range(grid.ndim))


def _scalar_padded(grid, values, odd_axes=()):
    return fill_ghosts(_pad(values, grid.cell_shape()), grid, parity=_cell_parity(grid, odd_axes))


@dataclass
class GradTensor:
    """Cell-centred director gradient; ``data[i, j]`` is the derivative of d_i along axis j."""

    grid: GridSpec
    data: np.ndarray  # (3, ndim, *dims)

    def gram(self):
        """(grad d)^T grad d, entry (j, k) = sum_i d_j d_i * d_k d_i."""
        return np.einsum("ij...,ik...->jk...", self.data, self.data)

    def norm_sq(self):
        """|grad d|^2 cell-wise (trace of the Gram matrix)."""
        return np.sum(self.data ** 2, axis=(0, 1))


def gradient(p):
    """Face-centred gradient of a cell scalar.

    On a wall grid the boundary faces are set to zero; on a periodic grid the
    face at x = 0 differences the last and first cells (wraparound).
    """
    grid = p.grid
    comps = []
    for a, h in enumerate(grid.spacing):
        left, right = _cells_to_faces(p.data, grid, a)
        comps.append((right - left) / h)
    return MacVectorField.from_interior(grid, comps)


def divergence(u):
    grid = u.grid
    out = np.zeros(grid.dims)
    for a, h in enumerate(grid.spacing):
        left, right = _faces_to_cells(u.comps[a], grid, a)
        out += (right - left) / h
    return ScalarField.from_interior(grid, out)


def laplacian(f):
    """Standard 5-point (2D) / 7-point (3D) Laplacian, per component."""
    grid = getattr(f, "grid", None)
    if isinstance(f, ScalarField):
        return ScalarField.from_interior(grid, _laplace_padded(f.data, grid))
    if isinstance(f, DirectorField):
        return DirectorField.from_interior(grid, _laplace_padded(f.data, grid, offset=1))
    if isinstance(f, MacVectorField):
        return MacVectorField.from_interior(grid, [_laplace_padded(c, grid) for c in f.comps])
    raise TypeError(f"unsupported field type {type(f).__name__}")


def cell_velocity(u):
    """Velocity averaged from faces to cell centres, one interior array per axis."""
    out = []
    for a in range(u.grid.ndim):
        left, right = _faces_to_cells(u.comps[a], u.grid, a)
        out.append(0.5 * (left + right))
    return out


def face_velocity(u, axis, comp):
    """Velocity component ``comp`` sampled at the faces normal to ``axis``.

    For ``comp != axis`` this is the four-point average of the neighbouring
    ``comp`` faces.
    """
    grid = u.grid
    if comp == axis:
        return _win(u.comps[axis], grid.ndim)
    nf = grid.n_faces(axis)
    n = grid.dims[comp]
    F = u.comps[comp]
    total = 0.0
    for sa in ((0, nf), (1, nf + 1)):
        for sb in ((1, n + 1), (2, n + 2)):
            total = total + _win(F, grid.ndim, {axis: sa, comp: sb})
    return 0.25 * total


def _advect_cells(u, P, grid, offset, parity, skew):
    U = cell_velocity(u)
    out = 0.0
    for b in range(grid.ndim):
        out = out + U[b] * _centered(P, grid, b, offset)
    if not skew:
        return out
    # flux form div(U f); U is odd across walls so the product flips parity
    vals = _win(P, grid.ndim, offset=offset)
    odd = tuple(-p for p in parity)
    flux = 0.0
    for b in range(grid.ndim):
        Q = _pad(U[b] * vals, grid.cell_shape(), offset)
        fill_ghosts(Q, grid, parity=odd, offset=offset)
        flux = flux + _centered(Q, grid, b, offset)
    return 0.5 * (out + flux)


def _advect_faces(u, f, skew):
    grid = u.grid
    comps = []
    for a in range(grid.ndim):
        F = f.comps[a]
        out = 0.0
        flux = 0.0
        for b in range(grid.ndim):
            Ub = face_velocity(u, a, b)
            out = out + Ub * _centered(F, grid, b)
            if skew:
                Q = _pad(Ub * _win(F, grid.ndim), grid.face_shape(a))
                fill_ghosts(Q, grid, face_axis=a, parity=1)
                flux = flux + _centered(Q, grid, b)
        comps.append(0.5 * (out + flux) if skew else out)
    return MacVectorField.from_interior(grid, comps)


def advect(u, f, skew=False):
    """(u . grad) f with centred differences.

    Cell fields use face-to-centre averaged velocities; velocity fields use
    the velocity interpolated to each face.  ``skew=True`` returns the
    skew-symmetric form ``(u.grad f + div(u f)) / 2``, which is exactly
    energy-neutral on the discrete level.
    """
    grid = check_same_grid(u, f)
    if isinstance(f, ScalarField):
        return ScalarField.from_interior(grid, _advect_cells(u, f.data, grid, 0, (1,) * grid.ndim, skew))
    if isinstance(f, DirectorField):
        return DirectorField.from_interior(grid, _advect_cells(u, f.data, grid, 1, (1,) * grid.ndim, skew))
    if isinstance(f, MacVectorField):
        return _advect_faces(u, f, skew)
    raise TypeError(f"unsupported field type {type(f).__name__}")


def grad_tensor(d):
    grid = d.grid
    data = np.stack([_centered(d.data, grid, j, offset=1) for j in range(grid.ndim)], axis=1)
    return GradTensor(grid, data)


def elastic_force_direct(d):
    """-div(grad d (.) grad d) on faces, from the cell-centred Gram matrix.

    Row j of the Gram matrix is differenced onto the j-faces: the diagonal
    entry with a compact face difference, off-diagonal entries by averaging
    to the face and a centred difference across it.
    """
    grid = d.grid
    G = grad_tensor(d).gram()
    nd = grid.ndim
    comps = []
    for j in range(nd):
        hj = grid.spacing[j]
        Gjj = _scalar_padded(grid, G[j, j])
        left, right = _cells_to_faces(Gjj, grid, j)
        div = (right - left) / hj
        for k in range(nd):
            if k == j:
                continue
            # off-diagonal entries flip sign across walls normal to j or k
            Gjk = _scalar_padded(grid, G[j, k], odd_axes=(j, k))
            left, right = _cells_to_faces(Gjk, grid, j, keep_padded=(k,))
            avg = 0.5 * (left + right)
            plus = [slice(None)] * nd
            minus = [slice(None)] * nd
            plus[k] = slice(2, None)
            minus[k] = slice(0, -2)
            div = div + (avg[tuple(plus)] - avg[tuple(minus)]) / (2.0 * grid.spacing[k])
        comps.append(-div)
    return MacVectorField.from_interior(grid, comps)


def _stress_parts(d):
    """(|grad d|^2, (grad d)^T lap d) at cell centres."""
    T = grad_tensor(d)
    lap = _laplace_padded(d.data, d.grid, offset=1)
    w = np.einsum("ij...,i...->j...", T.data, lap)
    return T.norm_sq(), w


def elastic_force_identity(d):
    """-grad(|grad d|^2 / 2) - (grad d)^T lap d on faces.

    The second term is formed at cell centres and averaged onto faces, the
    transpose of the face-to-centre velocity average, so that its work
    against u matches the director transport term exactly.
    """
    grid = d.grid
    gsq, w = _stress_parts(d)
    q = gradient(ScalarField(grid, _scalar_padded(grid, 0.5 * gsq)))
    comps = []
    for b in range(grid.ndim):
        W = _scalar_padded(grid, w[b], odd_axes=(b,))
        left, right = _cells_to_faces(W, grid, b)
        comps.append(-(_win(q.comps[b], grid.ndim) + 0.5 * (left + right)))
    return MacVectorField.from_interior(grid, comps)


def director_rhs(u, d, gamma=1.0):
    """-(u.grad) d + gamma (lap d + |grad d|^2 d)."""
    grid = check_same_grid(u, d)
    T = grad_tensor(d)
    lap = _laplace_padded(d.data, grid, offset=1)
    vals = d.interior
    transport = _advect_cells(u, d.data, grid, 1, (1,) * grid.ndim, skew=False)
    return DirectorField.from_interior(grid, -transport + gamma * (lap + T.norm_sq() * vals))


def harmonic_residual(d):
    """lap d + |grad d|^2 d at cell centres (interior array, shape (3, *dims))."""
    T = grad_tensor(d)
    lap = _laplace_padded(d.data, d.grid, offset=1)
    return lap + T.norm_sq() * d.interior


# --- quadratic forms shared by the diagnostics --------------------------------

def _edge_sum(P, grid, axis, face_axis=None, offset=0):
    """Sum of squared forward differences along ``axis`` over the grid's edges.

    Wall edges that straddle a ghost get half weight (their dual cell is cut
    by the wall); with mirrored ghosts those differences vanish anyway.
    """
    nd = grid.ndim
    n = P.shape[offset + axis]
    if grid.periodic:
        diff = _win(P, nd, {axis: (2, n)}, offset) - _win(P, nd, {axis: (1, n - 1)}, offset)
        return float(np.sum(diff ** 2))
    if axis == face_axis:
        diff = _win(P, nd, {axis: (2, n - 1)}, offset) - _win(P, nd, {axis: (1, n - 2)}, offset)
        return float(np.sum(diff ** 2))
    diff = _win(P, nd, {axis: (1, n)}, offset) - _win(P, nd, {axis: (0, n - 1)}, offset)
    sq = diff ** 2
    ends = np.moveaxis(sq, offset + axis, 0)
    return float(np.sum(sq) - 0.5 * np.sum(ends[0]) - 0.5 * np.sum(ends[-1]))


def velocity_dirichlet(u):
    """Discrete integral of |grad u|^2 (equals -<u, lap u> on the faces)."""
    grid = u.grid
    total = 0.0
    for a in range(grid.ndim):
        for b, h in enumerate(grid.spacing):
            total += _edge_sum(u.comps[a], grid, b, face_axis=a) / h ** 2
    return total * grid.cell_volume


def director_dirichlet(d):
    """Discrete integral of |grad d|^2 (equals -<d, lap d> on the cells)."""
    grid = d.grid
    total = 0.0
    for b, h in enumerate(grid.spacing):
        total += _edge_sum(d.data, grid, b, offset=1) / h ** 2
    return total * grid.cell_volume


def inner(f, g):
    """Discrete L2 inner product (faces for velocity fields, cells otherwise)."""
    grid = check_same_grid(f, g)
    if isinstance(f, MacVectorField):
        s = sum(float(np.sum(f.interior(a) * g.interior(a))) for a in range(grid.ndim))
    else:
        s = float(np.sum(f.interior * g.interior))
    return s * grid.cell_volume


def l2_norm(f):
    return float(np.sqrt(max(inner(f, f), 0.0)))
