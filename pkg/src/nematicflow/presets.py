"""Named initial conditions.

Velocities are sampled on faces and then projected, so every preset starts
discretely divergence-free.  Directors are built from angle fields, so
|d| = 1 holds cell-wise to rounding.  Wavenumbers are expressed in units of
the box: ``k`` periods per box length on periodic grids and ``k`` half
periods on wall grids, where cosine profiles keep the director's zero
normal derivative.
"""
from __future__ import annotations

import math

import numpy as np

from .grid import DirectorField, MacVectorField, ScalarField, State
from .projection import PoissonSolveConfig, project

PRESETS = ("zero", "taylor_green", "twist", "random_smooth")


def _wavenumbers(grid):
    factor = 2.0 * math.pi if grid.periodic else math.pi
    return [factor / L for L in grid.lengths]


def _director_from_angles(grid, theta, psi=None):
    if psi is None:
        psi = np.zeros_like(theta)
    vals = np.stack([np.sin(theta) * np.cos(psi), np.sin(theta) * np.sin(psi), np.cos(theta)])
    return DirectorField.from_interior(grid, vals)


def _projected(grid, comps, poisson):
    u = MacVectorField.from_interior(grid, comps)
    return project(u, 1.0, poisson)[0]


def zero_state(grid, director=(0.0, 0.0, 1.0)):
    return State.zeros(grid, director)


def taylor_green(grid, eps=0.1, tilt=0.0, poisson=PoissonSolveConfig()):
    """Taylor-Green vortex of amplitude ``eps``; director tilted by ``tilt cos kx cos ky``.

    On periodic grids the vortex has one period per box length.  On wall
    grids the normal velocity vanishes on the walls; the tangential slip is
    left to the no-slip stencils.
    """
    if eps < 0.0:
        raise ValueError("eps must be non-negative")
    k = [2.0 * math.pi / L for L in grid.lengths]
    z_factor = (lambda c: np.cos(k[2] * c[2])) if grid.ndim == 3 else (lambda c: 1.0)
    comps = []
    for a in range(grid.ndim):
        c = grid.face_coords(a)
        if a == 0:
            v = eps * np.sin(k[0] * c[0]) * np.cos(k[1] * c[1]) * z_factor(c)
        elif a == 1:
            v = -eps * np.cos(k[0] * c[0]) * np.sin(k[1] * c[1]) * z_factor(c)
        else:
            v = np.zeros_like(c[0])
        comps.append(v)
    u = _projected(grid, comps, poisson)
    x = grid.cell_coords()
    theta = tilt * np.cos(k[0] * x[0]) * np.cos(k[1] * x[1])
    return State(u, _director_from_angles(grid, theta), ScalarField.zeros(grid))


def twist(grid, k=1.0):
    """Planar twist d = (sin kx, 0, cos kx) at rest; ``k`` in periods per box length."""
    kx = 2.0 * math.pi * k / grid.lengths[0]
    x = grid.cell_coords()[0]
    return State(MacVectorField.zeros(grid), _director_from_angles(grid, kx * x),
                 ScalarField.zeros(grid))


def _random_series(rng, coords, kvec, max_mode, decay=2.0):
    """Sum of low-order cosine/sine products with seeded coefficients."""
    out = np.zeros_like(coords[0])
    modes = np.arange(max_mode + 1)
    for idx in np.ndindex(*([max_mode + 1] * len(coords))):
        if sum(idx) == 0:
            continue
        weight = 1.0 / (1.0 + sum(m * m for m in idx)) ** decay
        term = 1.0
        for m, c, kk in zip(idx, coords, kvec):
            phase = rng.uniform(0.0, 2.0 * math.pi)
            term = term * np.cos(modes[m] * kk * c + phase)
        out = out + weight * rng.standard_normal() * term
    return out


def _random_cosine_series(rng, coords, kvec, max_mode, decay=2.0):
    """Like :func:`_random_series` but with cosines only (zero normal derivative on walls)."""
    out = np.zeros_like(coords[0])
    for idx in np.ndindex(*([max_mode + 1] * len(coords))):
        if sum(idx) == 0:
            continue
        weight = 1.0 / (1.0 + sum(m * m for m in idx)) ** decay
        term = 1.0
        for m, c, kk in zip(idx, coords, kvec):
            term = term * np.cos(m * kk * c)
        out = out + weight * rng.standard_normal() * term
    return out


def random_smooth(grid, seed=0, eps=0.1, max_mode=1, angle_scale=1.0,
                  poisson=PoissonSolveConfig()):
    """Seeded smooth random state.

    The velocity has amplitude ``eps``; the director comes from two random
    angle fields of size ``angle_scale``.  Only modes up to ``max_mode`` per
    axis appear, so the fields stay well resolved on coarse grids.
    """
    rng = np.random.default_rng(seed)
    kvec = _wavenumbers(grid)
    series = _random_series if grid.periodic else _random_cosine_series
    comps = []
    for a in range(grid.ndim):
        comps.append(eps * series(rng, grid.face_coords(a), kvec, max_mode))
    u = _projected(grid, comps, poisson)
    x = grid.cell_coords()
    theta = 0.5 * math.pi + angle_scale * series(rng, x, kvec, max_mode)
    psi = angle_scale * series(rng, x, kvec, max_mode)
    return State(u, _director_from_angles(grid, theta, psi), ScalarField.zeros(grid))


def build_preset(grid, name, params=None, seed=0, poisson=PoissonSolveConfig()):
    """Dispatch on the preset name with a parameter dict."""
    params = dict(params or {})
    if name == "zero":
        return zero_state(grid)
    if name == "taylor_green":
        return taylor_green(grid, poisson=poisson, **params)
    if name == "twist":
        return twist(grid, **params)
    if name == "random_smooth":
        params.setdefault("seed", seed)
        return random_smooth(grid, poisson=poisson, **params)
    raise ValueError(f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}")
