"""Poisson / Helmholtz solves and the discrete Leray projection.

The default back end diagonalises the 5/7-point Laplacian exactly: FFT on
periodic grids, DCT-II for cell fields with mirrored ghosts, DST-II for
velocity components across a no-slip wall (odd ghosts) and DST-I along a
component's own axis (boundary faces held at zero).  A matrix-free
conjugate-gradient back end is available for cross-checking.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft
from scipy.sparse.linalg import LinearOperator, cg

from .errors import IncompatibleRhs, NonConvergence
from .grid import DirectorField, GridSpec, MacVectorField, ScalarField
from .operators import divergence, gradient, laplacian

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class PoissonSolveConfig:
    tol: float = 1e-10
    max_iter: int = 500
    method: str = "spectral"

    def __post_init__(self):
        if not 0.0 < self.tol < 1.0:
            raise ValueError(f"tol must lie in (0, 1), got {self.tol}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.method not in ("spectral", "cg"):
            raise ValueError(f"unknown method {self.method!r}")


def _axis_kinds(grid, face_axis):
    if grid.periodic:
        return ("fft",) * grid.ndim
    return tuple("dst1" if ax == face_axis else ("dst2" if face_axis is not None else "dct2")
                 for ax in range(grid.ndim))


@lru_cache(maxsize=64)
def _eigenvalues(grid: GridSpec, face_axis):
    """Eigenvalues of -lap on the active unknowns, broadcast to their shape."""
    total = 0.0
    for ax, (kind, n, h) in enumerate(zip(_axis_kinds(grid, face_axis), grid.dims, grid.spacing)):
        if kind == "fft":
            theta = 2.0 * np.pi * np.arange(n) / n
        elif kind == "dct2":
            theta = np.pi * np.arange(n) / n
        elif kind == "dst2":
            theta = np.pi * np.arange(1, n + 1) / n
        else:
            theta = np.pi * np.arange(1, n) / n
        lam = (2.0 - 2.0 * np.cos(theta)) / h ** 2
        shape = [1] * grid.ndim
        shape[ax] = lam.size
        total = total + lam.reshape(shape)
    return total


def _forward(x, kinds):
    if kinds[0] == "fft":
        return sfft.fftn(x, workers=1)
    for ax, kind in enumerate(kinds):
        if kind == "dct2":
            x = sfft.dct(x, type=2, axis=ax, norm="ortho")
        elif kind == "dst2":
            x = sfft.dst(x, type=2, axis=ax, norm="ortho")
        else:
            x = sfft.dst(x, type=1, axis=ax, norm="ortho")
    return x


def _backward(x, kinds):
    if kinds[0] == "fft":
        return sfft.ifftn(x, workers=1).real
    for ax, kind in enumerate(kinds):
        if kind == "dct2":
            x = sfft.idct(x, type=2, axis=ax, norm="ortho")
        elif kind == "dst2":
            x = sfft.idst(x, type=2, axis=ax, norm="ortho")
        else:
            x = sfft.idst(x, type=1, axis=ax, norm="ortho")
    return x


def _spectral_solve(rhs, grid, face_axis, alpha, beta):
    """Solve (alpha - beta * lap) x = rhs on the active unknowns."""
    kinds = _axis_kinds(grid, face_axis)
    denom = alpha + beta * _eigenvalues(grid, face_axis)
    xhat = _forward(rhs, kinds)
    singular = denom == 0.0
    if np.any(singular):
        denom = np.where(singular, 1.0, denom)
        xhat = np.where(singular, 0.0, xhat / denom)
    else:
        xhat = xhat / denom
    return _backward(xhat, kinds)


def _active_slices(grid, face_axis):
    sl = [slice(None)] * grid.ndim
    if face_axis is not None and not grid.periodic:
        sl[face_axis] = slice(1, -1)
    return tuple(sl)


def _apply_operator(x, grid, face_axis, alpha, beta):
    """(alpha - beta * lap) x on active unknowns, via the field operators."""
    if face_axis is None:
        lap = laplacian(ScalarField.from_interior(grid, x)).interior
        return alpha * x - beta * lap
    act = _active_slices(grid, face_axis)
    comps = [np.zeros(tuple(n - 2 for n in grid.face_shape(a))) for a in range(grid.ndim)]
    comps[face_axis][act] = x
    lap = laplacian(MacVectorField.from_interior(grid, comps)).interior(face_axis)[act]
    return alpha * x - beta * lap


def _cg_solve(rhs, grid, face_axis, alpha, beta, cfg):
    shape = rhs.shape
    # the singular Poisson case is solved for -lap, which is SPD on zero-mean data
    sign = -1.0 if alpha == 0.0 else 1.0

    def matvec(v):
        return sign * _apply_operator(v.reshape(shape), grid, face_axis, alpha, beta).ravel()

    op = LinearOperator((rhs.size, rhs.size), matvec=matvec, dtype=float)
    x, info = cg(op, sign * rhs.ravel(), rtol=cfg.tol * 1e-2, atol=0.0, maxiter=cfg.max_iter)
    if info != 0:
        raise NonConvergence(f"conjugate gradient stopped after {cfg.max_iter} iterations",
                             iterations=cfg.max_iter)
    return x.reshape(shape)


def _solve(rhs, grid, face_axis, alpha, beta, cfg):
    if not np.any(rhs):
        return np.zeros_like(rhs)
    if alpha != 0.0 and (face_axis is None or grid.periodic) and np.ptp(rhs) == 0.0:
        # constants are exact null vectors of lap here; keep them bit-exact
        return rhs / alpha
    if cfg.method == "cg":
        x = _cg_solve(rhs, grid, face_axis, alpha, beta, cfg)
    else:
        x = _spectral_solve(rhs, grid, face_axis, alpha, beta)
    res = np.linalg.norm(_apply_operator(x, grid, face_axis, alpha, beta) - rhs)
    scale = np.linalg.norm(rhs)
    if res > cfg.tol * scale:
        raise NonConvergence(f"relative residual {res / scale:.3e} above tol {cfg.tol:.1e}",
                             residual=res / scale)
    return x


def solve_poisson(rhs, cfg=PoissonSolveConfig()):
    """Solve lap x = rhs for a cell scalar with Neumann/periodic conditions.

    The problem is singular, so ``rhs`` must have zero mean (the caller
    subtracts it); the returned solution has zero mean.
    """
    grid = rhs.grid
    b = rhs.interior
    scale = float(np.max(np.abs(b))) if b.size else 0.0
    if scale == 0.0:
        return ScalarField.zeros(grid)
    mean = float(np.mean(b))
    if abs(mean) > cfg.tol * scale:
        raise IncompatibleRhs(f"rhs mean {mean:.3e} is not zero (scale {scale:.3e})")
    x = _solve(b, grid, None, 0.0, -1.0, cfg)
    return ScalarField.from_interior(grid, x - np.mean(x))


def solve_helmholtz(rhs, coeff, cfg=PoissonSolveConfig()):
    """Solve (I - coeff * lap) x = rhs per component, with the field's boundary conditions."""
    grid = rhs.grid
    if isinstance(rhs, ScalarField):
        return ScalarField.from_interior(grid, _solve(rhs.interior, grid, None, 1.0, coeff, cfg))
    if isinstance(rhs, DirectorField):
        vals = np.stack([_solve(c, grid, None, 1.0, coeff, cfg) for c in rhs.interior])
        return DirectorField.from_interior(grid, vals)
    if isinstance(rhs, MacVectorField):
        comps = []
        for a in range(grid.ndim):
            act = _active_slices(grid, a)
            out = np.zeros(rhs.interior(a).shape)
            out[act] = _solve(rhs.interior(a)[act], grid, a, 1.0, coeff, cfg)
            comps.append(out)
        return MacVectorField.from_interior(grid, comps)
    raise TypeError(f"unsupported field type {type(rhs).__name__}")


def project(u_star, dt, cfg=PoissonSolveConfig()):
    """Remove the gradient part of ``u_star``.

    Solves lap(phi) = div(u_star) / dt, returns ``u = u_star - dt grad(phi)``
    and the zero-mean pressure ``phi``.
    """
    grid = u_star.grid
    div_star = divergence(u_star).interior
    scale = float(np.max(np.abs(div_star)))
    rhs = div_star / dt
    rhs = rhs - np.mean(rhs)
    phi = solve_poisson(ScalarField.from_interior(grid, rhs), cfg)
    u = u_star - dt * gradient(phi)
    umax = max(float(np.max(np.abs(c))) for c in u_star.comps)
    floor = 64.0 * EPS * umax * grid.ndim / min(grid.spacing)
    residual = float(np.max(np.abs(divergence(u).interior)))
    if residual > 10.0 * cfg.tol * scale + floor:
        raise NonConvergence(f"projected divergence {residual:.3e} above bound")
    return u, phi
