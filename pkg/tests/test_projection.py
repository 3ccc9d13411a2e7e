import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nematicflow import (IncompatibleRhs, MacVectorField, NonConvergence, PoissonSolveConfig, ScalarField,
                         make_grid, project, solve_helmholtz, solve_poisson)
from nematicflow import operators as ops

import oracles as orc
from conftest import random_director, random_scalar, random_velocity

CG = PoissonSolveConfig(method="cg", max_iter=2000)


@pytest.mark.parametrize("cfg", [PoissonSolveConfig(), CG])
def test_zero_rhs_gives_zero(grid8, cfg):
    assert np.all(solve_poisson(ScalarField.zeros(grid8), cfg).interior == 0.0)


def test_poisson_eigenfunction_matches_dense_oracle():
    g = make_grid((8, 8), (1, 1))
    x, y = g.cell_coords()
    f = np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)
    h = 0.125
    lam = -2 * (2 - 2 * math.cos(2 * math.pi * h)) / h ** 2
    for cfg in (PoissonSolveConfig(), CG):
        sol = solve_poisson(ScalarField.from_interior(g, f), cfg).interior
        assert np.max(np.abs(sol - f / lam)) < 1e-12
    # the dense Laplacian applied to the solution gives back the rhs
    L = orc.cell_laplacian_matrix(g.dims, g.spacing, True)
    assert np.max(np.abs(orc.apply_dense(L, sol, g.dims) - f)) < 1e-10


def test_constant_rhs_is_incompatible(grid8):
    with pytest.raises(IncompatibleRhs):
        solve_poisson(ScalarField.from_interior(grid8, np.ones(grid8.dims)))


def test_poisson_solution_has_zero_mean_and_solves(grid8):
    rng = np.random.default_rng(2)
    b = rng.standard_normal(grid8.dims)
    b -= b.mean()
    for cfg in (PoissonSolveConfig(), CG):
        x = solve_poisson(ScalarField.from_interior(grid8, b), cfg)
        assert abs(np.mean(x.interior)) < 1e-15 * grid8.n_cells * np.max(np.abs(x.interior))
        assert np.max(np.abs(ops.laplacian(x).interior - b)) < 1e-9


def test_helmholtz_matches_dense_solve(grid8):
    rng = np.random.default_rng(4)
    dims, h, per = tuple(grid8.dims), grid8.spacing, grid8.periodic
    u = random_velocity(grid8, rng)
    for cfg in (PoissonSolveConfig(), CG):
        x = solve_helmholtz(u, 0.01, cfg)
        for a in range(2):
            A = np.eye(u.interior(a).size) - 0.01 * orc.face_laplacian_matrix(dims, h, per, a)
            rhs = u.interior(a).ravel().copy()
            if not per:
                # boundary unknowns are pinned to zero
                shape = u.interior(a).shape
                bnd = [i for i, p in enumerate(np.ndindex(shape)) if p[a] in (0, shape[a] - 1)]
                A[bnd] = 0.0
                A[bnd, bnd] = 1.0
                rhs[bnd] = 0.0
            want = np.linalg.solve(A, rhs).reshape(u.interior(a).shape)
            assert np.max(np.abs(x.interior(a) - want)) < 1e-9
    d = random_director(grid8, rng)
    y = solve_helmholtz(d, 0.02).interior
    A = np.eye(grid8.n_cells) - 0.02 * orc.cell_laplacian_matrix(dims, h, per)
    for i in range(3):
        assert np.max(np.abs(y[i] - np.linalg.solve(A, d.interior[i].ravel()).reshape(dims))) < 1e-10


def test_cg_reports_nonconvergence(grid8):
    rng = np.random.default_rng(5)
    b = rng.standard_normal(grid8.dims)
    b -= b.mean()
    with pytest.raises(NonConvergence):
        solve_poisson(ScalarField.from_interior(grid8, b), PoissonSolveConfig(method="cg", max_iter=1))


def test_config_validation():
    for kw in ({"tol": 0.0}, {"tol": 1.0}, {"max_iter": 0}, {"method": "multigrid"}):
        with pytest.raises(ValueError):
            PoissonSolveConfig(**kw)


def test_project_fixed_point_and_zero(grid8):
    rng = np.random.default_rng(6)
    u0, _ = project(random_velocity(grid8, rng), 1.0)
    u1, phi = project(u0, 1.0)
    assert max(np.max(np.abs(a - b)) for a, b in zip(u1.comps, u0.comps)) < 1e-12
    assert np.max(np.abs(phi.interior)) < 1e-12
    z, pz = project(MacVectorField.zeros(grid8), 0.1)
    assert all(np.all(c == 0.0) for c in z.comps) and np.all(pz.interior == 0.0)


def test_project_removes_pure_gradient():
    g = make_grid((8, 8), (1, 1))
    x, _ = g.cell_coords()
    s = np.sin(2 * np.pi * x)
    u, phi = project(ops.gradient(ScalarField.from_interior(g, s)), 1.0)
    assert max(np.max(np.abs(c)) for c in u.comps) < 1e-12
    assert np.max(np.abs(phi.interior - (s - s.mean()))) < 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 31), wall=st.booleans(), dt=st.floats(1e-3, 10.0))
def test_projection_properties(seed, wall, dt):
    g = make_grid((7, 9), (1.0, 1.4), "wall" if wall else "periodic")
    u_star = random_velocity(g, np.random.default_rng(seed))
    u, phi = project(u_star, dt)
    umax = max(np.max(np.abs(c)) for c in u_star.comps)
    assert np.max(np.abs(ops.divergence(u).interior)) < 1e-9 * umax / min(g.spacing)
    assert abs(np.mean(phi.interior)) <= 1e-13 * max(1.0, np.max(np.abs(phi.interior)))
    assert ops.l2_norm(u) <= ops.l2_norm(u_star) * (1 + 1e-12)
    # orthogonal decomposition: |u*|^2 = |u|^2 + |u* - u|^2
    r = u_star - u
    assert abs(ops.inner(u_star, u_star) - ops.inner(u, u) - ops.inner(r, r)) < 1e-10 * ops.inner(u_star, u_star)
    u2, _ = project(u, dt)
    assert max(np.max(np.abs(a - b)) for a, b in zip(u2.comps, u.comps)) < 1e-10 * umax


def test_cg_and_spectral_projection_agree(grid8):
    u_star = random_velocity(grid8, np.random.default_rng(9))
    a, pa = project(u_star, 0.5)
    b, pb = project(u_star, 0.5, CG)
    assert max(np.max(np.abs(x - y)) for x, y in zip(a.comps, b.comps)) < 1e-8
    assert np.max(np.abs(pa.interior - pb.interior)) < 1e-8


def test_helmholtz_keeps_constants_exact():
    g = make_grid((8, 8))
    s = random_scalar(g, np.random.default_rng(0)) * 0.0 + 0.0
    c = ScalarField.from_interior(g, np.full((8, 8), 0.37))
    assert np.all(solve_helmholtz(c, 0.3).interior == 0.37)
    assert np.all(solve_helmholtz(s, 0.3).interior == 0.0)
