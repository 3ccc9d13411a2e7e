"""Coarse-versus-fine comparison through the relative energy.

A fine run stands in for the strong solution and each coarse run for a
weak surrogate.  At every sample time the fine state is restricted to the
coarse grid and the relative energy R, the Gronwall weight phi and the
fitted envelope are recorded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import (
    RelEnergyRecord,
    fit_gronwall_constant,
    gronwall_envelope,
    phi_sample,
    relative_energy,
    total_energy,
)
from .errors import GridMismatch
from .grid import DirectorField, GridSpec, MacVectorField, ScalarField, State
from .presets import build_preset
from .projection import PoissonSolveConfig
from .stepper import Physics, SlabConfig, advance_to


def _ratios(fine: GridSpec, coarse: GridSpec):
    if fine.ndim != coarse.ndim or fine.bc_mode != coarse.bc_mode:
        raise GridMismatch("restriction needs the same dimension and boundary mode")
    if any(abs(a - b) > 1e-12 * max(a, b) for a, b in zip(fine.lengths, coarse.lengths)):
        raise GridMismatch("restriction needs identical box lengths")
    if any(f % c for f, c in zip(fine.dims, coarse.dims)):
        raise GridMismatch(f"coarse dims {coarse.dims} do not divide fine dims {fine.dims}")
    return tuple(f // c for f, c in zip(fine.dims, coarse.dims))


def _block_mean(a, ratios, lead=0):
    shape = a.shape[:lead]
    for n, r in zip(a.shape[lead:], ratios):
        shape += (n // r, r)
    axes = tuple(lead + 2 * i + 1 for i in range(len(ratios)))
    return a.reshape(shape).mean(axis=axes)


def restrict(f, coarse):
    """Restrict a fine field to ``coarse``.

    Cell fields are block-averaged, the director is renormalised after
    averaging, and each face component is averaged over the fine faces
    covering the coarse face (which keeps discrete divergence-free fields
    divergence-free).  Restriction onto an identical grid is the identity.
    """
    r = _ratios(f.grid, coarse)
    if all(k == 1 for k in r) and isinstance(f, (ScalarField, DirectorField, MacVectorField, State)):
        return f.copy()
    if isinstance(f, ScalarField):
        return ScalarField.from_interior(coarse, _block_mean(f.interior, r))
    if isinstance(f, DirectorField):
        avg = _block_mean(f.interior, r, lead=1)
        norm = np.sqrt(np.sum(avg ** 2, axis=0))
        return DirectorField.from_interior(coarse, avg / np.where(norm > 0.0, norm, 1.0))
    if isinstance(f, MacVectorField):
        comps = []
        for a in range(coarse.ndim):
            v = f.interior(a)
            v = np.take(v, np.arange(0, v.shape[a], r[a]), axis=a)
            rr = tuple(1 if ax == a else r[ax] for ax in range(coarse.ndim))
            comps.append(_block_mean(v, rr))
        return MacVectorField.from_interior(coarse, comps)
    if isinstance(f, State):
        return State(restrict(f.u, coarse), restrict(f.d, coarse), restrict(f.p, coarse), f.t)
    raise TypeError(f"cannot restrict {type(f).__name__}")


def prolong(f, fine):
    """Prolong a coarse field to ``fine``: cell injection, linear along each face's own axis.

    ``restrict(prolong(f))`` returns ``f`` for scalar and velocity fields.
    """
    coarse = f.grid
    r = _ratios(fine, coarse)
    if isinstance(f, ScalarField):
        vals = f.interior
        for ax, rr in enumerate(r):
            vals = np.repeat(vals, rr, axis=ax)
        return ScalarField.from_interior(fine, vals)
    if isinstance(f, DirectorField):
        vals = f.interior
        for ax, rr in enumerate(r):
            vals = np.repeat(vals, rr, axis=ax + 1)
        return DirectorField.from_interior(fine, vals)
    if isinstance(f, MacVectorField):
        comps = []
        for a in range(fine.ndim):
            v = f.comps[a][tuple(slice(1, -1) if ax != a else slice(None) for ax in range(fine.ndim))]
            n_c = coarse.n_faces(a)
            # coarse faces plus one wrap or mirror neighbour to interpolate towards
            base = np.moveaxis(v, a, 0)[1:n_c + 2]
            frac = np.arange(fine.n_faces(a)) / r[a]
            lo = np.floor(frac).astype(int)
            w = (frac - lo).reshape((-1,) + (1,) * (fine.ndim - 1))
            vals = (1.0 - w) * base[lo] + w * base[np.minimum(lo + 1, base.shape[0] - 1)]
            vals = np.moveaxis(vals, 0, a)
            for ax, rr in enumerate(r):
                if ax != a:
                    vals = np.repeat(vals, rr, axis=ax)
            comps.append(vals)
        return MacVectorField.from_interior(fine, comps)
    if isinstance(f, State):
        return State(prolong(f.u, fine), prolong(f.d, fine), prolong(f.p, fine), f.t)
    raise TypeError(f"cannot prolong {type(f).__name__}")


@dataclass
class ComparisonConfig:
    fine: GridSpec
    coarse: list
    t_end: float = 0.1
    sample_dt: float = 0.01
    preset: str = "random_smooth"
    preset_params: dict = field(default_factory=dict)
    seed: int = 0
    initial: str = "sample"
    slab: SlabConfig = field(default_factory=SlabConfig)
    physics: Physics = field(default_factory=Physics)
    poisson: PoissonSolveConfig = field(default_factory=PoissonSolveConfig)

    def __post_init__(self):
        for g in self.coarse:
            _ratios(self.fine, g)
        if self.initial not in ("sample", "restrict"):
            raise ValueError("initial must be 'sample' or 'restrict'")
        if self.sample_dt <= 0.0 or self.t_end < 0.0:
            raise ValueError("sample_dt must be positive and t_end non-negative")


@dataclass
class LevelResult:
    grid: GridSpec
    records: list
    C_fit: float
    max_R: float
    under_envelope: bool


@dataclass
class ComparisonResult:
    levels: list
    E0: float

    def convergence_factors(self):
        """max_t R on each level divided by max_t R on the next coarser level."""
        out = []
        for prev, cur in zip(self.levels, self.levels[1:]):
            out.append(cur.max_R / prev.max_R if prev.max_R > 0.0 else math.nan)
        return out

    def summary(self):
        lines = [f"E0 = {self.E0:.17g}"]
        for lvl in self.levels:
            dims = "x".join(str(n) for n in lvl.grid.dims)
            lines.append(f"coarse {dims}: max R = {lvl.max_R:.6e}, C_fit = {lvl.C_fit:.6g}, "
                         f"under envelope = {lvl.under_envelope}")
        for k, f in enumerate(self.convergence_factors()):
            lines.append(f"convergence factor level {k + 1}/{k}: {f:.6g}")
        return "\n".join(lines) + "\n"


def _sample_times(t_end, sample_dt):
    n = max(1, int(math.ceil(t_end / sample_dt - 1e-9)))
    return [min(t_end, k * sample_dt) for k in range(n + 1)] if t_end > 0 else [0.0]


def compare_runs(cfg):
    """Run the fine reference and every coarse level; return a :class:`ComparisonResult`."""
    fine0 = build_preset(cfg.fine, cfg.preset, cfg.preset_params, cfg.seed, cfg.poisson)
    E0 = total_energy(fine0, cfg.physics)
    floor = max(cfg.poisson.tol ** 2 * E0, np.finfo(float).tiny)
    times = _sample_times(cfg.t_end, cfg.sample_dt)

    fine_states = [fine0]
    s = fine0
    for t in times[1:]:
        s, _ = advance_to(s, t, cfg.slab, cfg.physics, cfg.poisson)
        fine_states.append(s)

    levels = []
    for grid in cfg.coarse:
        if cfg.initial == "restrict":
            s = restrict(fine0, grid)
        else:
            s = build_preset(grid, cfg.preset, cfg.preset_params, cfg.seed, cfg.poisson)
        records = []
        for k, t in enumerate(times):
            if k > 0:
                s, _ = advance_to(s, t, cfg.slab, cfg.physics, cfg.poisson)
            ref = restrict(fine_states[k], grid)
            records.append(RelEnergyRecord(t, relative_energy(ref, s), phi_sample(ref, s)))
        C = fit_gronwall_constant(records, floor)
        env = gronwall_envelope(records, C, floor)
        for rec, e in zip(records, env):
            rec.envelope = float(e)
        # the fit is tight at its active sample; allow rounding there
        under = all(rec.R <= rec.envelope * (1.0 + 1e-12) for rec in records)
        levels.append(LevelResult(grid, records, C, max(r.R for r in records), under))
    return ComparisonResult(levels, E0)
