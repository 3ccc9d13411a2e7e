"""Picard contraction study over a ladder of slab lengths and data amplitudes."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

from .diagnostics import data_size
from .presets import taylor_green
from .projection import PoissonSolveConfig
from .stepper import Physics, SlabConfig, picard_advance

STUDY_COLUMNS = ("eps", "slab_T", "dt", "iterations", "converged",
                 "terminal_ratio", "max_ratio", "U_final", "U0_proxy")


@dataclass
class StudyRow:
    eps: float
    slab_T: float
    dt: float
    iterations: int
    converged: bool
    terminal_ratio: float
    max_ratio: float
    U_final: float
    U0_proxy: float

    def row(self):
        return [self.eps, self.slab_T, self.dt, self.iterations, int(self.converged),
                self.terminal_ratio, self.max_ratio, self.U_final, self.U0_proxy]


def contraction_study(grid, eps_ladder, slab_ladder, steps_per_slab=10, tilt_ratio=1.0,
                      template=SlabConfig(), physics=Physics(), poisson=PoissonSolveConfig(),
                      map_fn=map):
    """One Picard slab per (eps, slab_T) pair, halving disabled.

    The data is a Taylor-Green vortex of amplitude eps with the director
    tilted by ``tilt_ratio * eps``, so both nonlinearities scale with eps.
    The step inside the slab is ``slab_T / steps_per_slab``.  A row with a
    single iterate (data at a fixed point) reports ratios of 0.
    """
    def run(pair):
        eps, T = pair
        s0 = taylor_green(grid, eps, tilt_ratio * eps, poisson)
        cfg = replace(template, slab_T=T, dt=T / steps_per_slab)
        _, rep = picard_advance(s0, cfg, physics, poisson, allow_halving=False)
        return StudyRow(eps, T, cfg.dt, len(rep.iterates), rep.converged, rep.terminal_ratio,
                        rep.max_ratio, rep.iterates[-1], data_size(s0))

    return list(map_fn(run, itertools.product(eps_ladder, slab_ladder)))
