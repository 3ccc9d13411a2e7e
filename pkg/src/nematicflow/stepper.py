"""Picard time stepping over slabs.

Within a slab of length ``slab_T`` the nonlinear terms are frozen at the
previous Picard iterate's trajectory and the resulting linear Stokes and
heat problems are marched with backward Euler.  Iterate 0 is the slab's
initial state held constant in time.  When successive differences stop
contracting, the slab (and the step inside it) is halved and the iteration
restarts.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import data_size
from .errors import MaxHalvingsExceeded
from .grid import DirectorField, State, apply_velocity_bc
from .operators import (
    advect,
    elastic_force_direct,
    elastic_force_identity,
    grad_tensor,
    l2_norm,
)
from .projection import PoissonSolveConfig, project, solve_helmholtz

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Physics:
    mu: float = 1.0
    lam: float = 1.0
    gamma: float = 1.0
    skew_advection: bool = False
    stress_form: str = "identity"

    def __post_init__(self):
        if min(self.mu, self.lam, self.gamma) <= 0.0:
            raise ValueError("mu, lam and gamma must be positive")
        if self.stress_form not in ("identity", "direct"):
            raise ValueError(f"unknown stress_form {self.stress_form!r}")


@dataclass(frozen=True)
class SlabConfig:
    dt: float = 1e-3
    slab_T: float = 1e-2
    contraction_target: float = 0.5
    picard_tol: float = 1e-10
    max_picard: int = 40
    max_halvings: int = 8

    def __post_init__(self):
        if not 0.0 < self.contraction_target < 1.0:
            raise ValueError("contraction_target must lie in (0, 1)")
        if not 0.0 < self.dt <= self.slab_T * (1.0 + 1e-12):
            raise ValueError(f"need 0 < dt <= slab_T, got dt={self.dt}, slab_T={self.slab_T}")
        if self.picard_tol <= 0.0 or self.max_picard < 1 or self.max_halvings < 0:
            raise ValueError("picard_tol, max_picard and max_halvings out of range")


@dataclass
class PicardReport:
    """Iteration trace of one slab.

    ``iterates[k]`` is the successive-difference size between Picard iterates
    k+1 and k, measured as the max over the slab's time levels of
    ||du||_2 + ||dd||_2 + ||d grad d||_2.
    """

    slab_index: int = 0
    t_start: float = 0.0
    slab_T: float = 0.0
    dt: float = 0.0
    iterates: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    halvings: int = 0
    converged: bool = False
    rejected: list = field(default_factory=list)

    @property
    def terminal_ratio(self):
        return self.ratios[-1] if self.ratios else 0.0

    @property
    def max_ratio(self):
        return max(self.ratios) if self.ratios else 0.0

    def rows(self):
        """(slab_index, iter, U_bar, ratio, halvings) rows for the accepted attempt."""
        out = []
        for k, U in enumerate(self.iterates):
            ratio = self.ratios[k - 1] if k > 0 else math.nan
            out.append([self.slab_index, k, U, ratio, self.halvings])
        return out


def frozen_forcing(v, physics=Physics()):
    """Right-hand sides with the nonlinearities frozen at ``v``.

    f_u = -v.grad v - lam div(grad d (.) grad d),  f_d = -v.grad d + gamma |grad d|^2 d.
    """
    u, d = v.u, v.d
    stress = elastic_force_identity(d) if physics.stress_form == "identity" else elastic_force_direct(d)
    f_u = physics.lam * stress - advect(u, u, skew=physics.skew_advection)
    gsq = grad_tensor(d).norm_sq()
    vals = physics.gamma * gsq * d.interior - advect(u, d).interior
    return f_u, DirectorField.from_interior(d.grid, vals)


def stokes_substep(u_n, f_u, dt, physics=Physics(), poisson=PoissonSolveConfig()):
    """One backward-Euler Stokes step: diffuse implicitly, then project."""
    rhs = apply_velocity_bc(u_n + dt * f_u)
    u_star = solve_helmholtz(rhs, dt * physics.mu, poisson)
    return project(u_star, dt, poisson)


def heat_substep(d_n, f_d, dt, physics=Physics(), poisson=PoissonSolveConfig()):
    """(I - dt gamma lap) d = d_n + dt f_d with the director's Neumann/periodic ghosts."""
    return solve_helmholtz(d_n + dt * f_d, dt * physics.gamma, poisson)


def _difference_size(a, b):
    dd = a.d - b.d
    g = grad_tensor(dd).data
    return (l2_norm(a.u - b.u) + l2_norm(dd)
            + math.sqrt(float(np.sum(g ** 2)) * a.grid.cell_volume))


def _sweep(s0, previous, dt, physics, poisson, forcing):
    traj = [s0]
    cache = {}
    for j in range(len(previous) - 1):
        t = s0.t + (j + 1) * dt
        v = previous[j + 1]
        key = id(v)
        if key not in cache:
            cache[key] = frozen_forcing(v, physics)
        f_u, f_d = cache[key]
        if forcing is not None:
            g_u, g_d = forcing(t)
            f_u = f_u + g_u
            f_d = f_d + g_d
        u, p = stokes_substep(traj[j].u, f_u, dt, physics, poisson)
        d = heat_substep(traj[j].d, f_d, dt, physics, poisson)
        traj.append(State(u, d, p, t))
    return traj


def picard_advance(s0, cfg=SlabConfig(), physics=Physics(), poisson=PoissonSolveConfig(),
                   forcing=None, slab_index=0, allow_halving=True, on_step=None):
    """Advance ``s0`` over one slab by Picard iteration.

    Returns the final state and a :class:`PicardReport`.  With
    ``allow_halving=False`` a non-contracting slab is returned as is, with
    ``converged=False`` (used by contraction studies).  ``forcing(t)``, when
    given, returns extra (velocity, director) right-hand sides at time t.
    ``on_step(prev, next, dt)`` is called for every step of the accepted
    trajectory.
    """
    slab_T, dt = cfg.slab_T, cfg.dt
    halvings = 0
    rejected = []
    while True:
        m = max(1, int(round(slab_T / dt)))
        dt = slab_T / m
        previous = [s0] * (m + 1)
        iterates, ratios = [], []
        above = 0
        converged = False
        for _ in range(cfg.max_picard):
            traj = _sweep(s0, previous, dt, physics, poisson, forcing)
            U = max(_difference_size(a, b) for a, b in zip(traj[1:], previous[1:]))
            iterates.append(U)
            previous = traj
            if len(iterates) > 1:
                ratio = U / iterates[-2]
                ratios.append(ratio)
                above = above + 1 if ratio > cfg.contraction_target else 0
            if U <= cfg.picard_tol:
                converged = True
                break
            if above >= 2:
                break
        report = PicardReport(slab_index, s0.t, slab_T, dt, iterates, ratios, halvings,
                              converged, rejected)
        if converged or not allow_halving:
            break
        rejected.append((slab_T, list(iterates)))
        halvings += 1
        if halvings > cfg.max_halvings:
            size = data_size(s0)
            raise MaxHalvingsExceeded(
                f"Picard iteration did not contract after {cfg.max_halvings} halvings "
                f"(t={s0.t:.6g}, data size {size:.4g})", data_size=size, report=report)
        log.info("slab %d: halving slab_T %.4g -> %.4g", slab_index, slab_T, slab_T / 2)
        slab_T /= 2.0
        dt /= 2.0
    final = previous[-1]
    final.t = s0.t + slab_T
    if on_step is not None:
        for a, b in zip(previous[:-1], previous[1:]):
            on_step(a, b, dt)
    return final, report


def advance_to(s0, t_end, cfg=SlabConfig(), physics=Physics(), poisson=PoissonSolveConfig(),
               forcing=None, renormalize=False, on_step=None, on_slab=None):
    """Chain Picard slabs from ``s0.t`` to ``t_end``.

    The last slab is shortened to land on ``t_end``; the step inside it is
    reduced so that it divides the slab.  With ``renormalize`` the director
    is divided by its length after every slab.
    """
    if t_end < s0.t:
        raise ValueError(f"t_end={t_end} lies before the initial time {s0.t}")
    s = s0
    reports = []
    eps = 1e-12 * max(1.0, abs(t_end))
    while t_end - s.t > eps:
        remaining = t_end - s.t
        T = cfg.slab_T if remaining > cfg.slab_T + eps else remaining
        m = max(1, math.ceil(T / cfg.dt - 1e-9))
        slab = replace(cfg, slab_T=T, dt=T / m)
        s, report = picard_advance(s, slab, physics, poisson, forcing,
                                   slab_index=len(reports), on_step=on_step)
        if T == remaining and report.halvings == 0:
            s.t = t_end
        if renormalize:
            s = State(s.u, s.d.renormalized(), s.p, s.t)
        reports.append(report)
        if on_slab is not None:
            on_slab(s, report)
    return s, reports
