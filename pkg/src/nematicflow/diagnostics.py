"""Energy, dissipation, unit-norm drift, data size and relative-energy diagnostics.

Quadrature conventions
----------------------
Velocity integrals sum over faces, each face owning one cell volume (the
MAC kinetic energy).  Director gradients in energies use the edge
differences that pair with the 5/7-point Laplacian, so that
``sum |grad d|^2 = -<d, lap d>`` holds exactly; sup norms use the centred
cell gradient.  The energy-law residual evaluates the dissipation at the
new state, matching backward Euler.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import check_same_grid
from .operators import (
    cell_velocity,
    director_dirichlet,
    grad_tensor,
    harmonic_residual,
    inner,
    laplacian,
    velocity_dirichlet,
)

ENERGY_COLUMNS = ("t", "E", "D", "residual", "drift", "U0_proxy")
REL_ENERGY_COLUMNS = ("t", "R", "phi", "envelope")


@dataclass
class EnergyRecord:
    t: float
    E: float
    D: float
    residual: float
    drift: float
    U0_proxy: float

    def row(self):
        return [self.t, self.E, self.D, self.residual, self.drift, self.U0_proxy]


@dataclass
class RelEnergyRecord:
    t: float
    R: float
    phi: float
    envelope: float = math.nan

    def row(self):
        return [self.t, self.R, self.phi, self.envelope]


def _coef(physics, name):
    return 1.0 if physics is None else getattr(physics, name)


def kinetic_energy(u):
    return 0.5 * inner(u, u)


def total_energy(s, physics=None):
    """1/2 int |u|^2 + lam/2 int |grad d|^2."""
    return kinetic_energy(s.u) + 0.5 * _coef(physics, "lam") * director_dirichlet(s.d)


def dissipation(s, physics=None):
    """mu int |grad u|^2 + lam gamma int |lap d + |grad d|^2 d|^2."""
    grid = s.grid
    hm = harmonic_residual(s.d)
    director_part = float(np.sum(hm ** 2)) * grid.cell_volume
    return (_coef(physics, "mu") * velocity_dirichlet(s.u)
            + _coef(physics, "lam") * _coef(physics, "gamma") * director_part)


def energy_law_residual(prev, nxt, dt, physics=None):
    """|E(next) - E(prev) + dt D(next)|."""
    return abs(total_energy(nxt, physics) - total_energy(prev, physics) + dt * dissipation(nxt, physics))


def unit_norm_drift(d):
    return float(np.max(np.abs(d.norm_sq() - 1.0)))


def data_size(s):
    """Discrete size proxy ||u||_{H^1} + ||grad d||_{H^1}.

    ||grad d||_{H^1} uses ||grad d|| and ||lap d|| (the latter standing in for
    the full Hessian).  The proxy is a seminorm, homogeneous of degree one.
    """
    u_part = math.sqrt(inner(s.u, s.u) + velocity_dirichlet(s.u))
    lap = laplacian(s.d)
    d_part = math.sqrt(director_dirichlet(s.d) + inner(lap, lap))
    return u_part + d_part


def energy_record(s, prev=None, dt=None, physics=None):
    E = total_energy(s, physics)
    D = dissipation(s, physics)
    residual = 0.0
    if prev is not None:
        residual = abs(E - total_energy(prev, physics) + dt * D)
    return EnergyRecord(s.t, E, D, residual, unit_norm_drift(s.d), data_size(s))


def relative_energy(a, b):
    """int |u - u~|^2 + |d - d~|^2 + |grad d - grad d~|^2."""
    check_same_grid(a.u, b.u)
    du = a.u - b.u
    dd = a.d - b.d
    return inner(du, du) + inner(dd, dd) + director_dirichlet(dd)


def sup_grad(d):
    """max over cells of |grad d| (Frobenius norm of the centred gradient)."""
    return float(np.sqrt(np.max(grad_tensor(d).norm_sq())))


def sup_velocity(u):
    U = cell_velocity(u)
    return float(np.sqrt(np.max(sum(c ** 2 for c in U))))


def phi_sample(s, s_tilde):
    """Gronwall weight 1 + |grad d|^4 + |grad d|^2 + |grad d~|^2 + |u|^2 + |lap d| (sup norms)."""
    check_same_grid(s.u, s_tilde.u)
    g = sup_grad(s.d)
    gt = sup_grad(s_tilde.d)
    lap = laplacian(s.d).interior
    lap_sup = float(np.sqrt(np.max(np.sum(lap ** 2, axis=0))))
    return 1.0 + g ** 4 + g ** 2 + gt ** 2 + sup_velocity(s.u) ** 2 + lap_sup


def _cumulative_trapezoid(t, y):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(t)
    if t.size > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def _envelope_base(records, floor):
    R0 = records[0].R
    return R0 if R0 > 0.0 else floor


def gronwall_envelope(records, C_fit, floor=1e-24):
    """(R(0) + offset) exp(C_fit int_0^t phi ds), trapezoid in time.

    The offset is zero unless R(0) == 0, in which case ``floor`` (the
    projection error level) stands in for R(0).
    """
    if not records:
        return np.zeros(0)
    t = [r.t for r in records]
    weight = _cumulative_trapezoid(t, [r.phi for r in records])
    return _envelope_base(records, floor) * np.exp(C_fit * weight)


def fit_gronwall_constant(records, floor=1e-24):
    """Smallest C >= 0 with R(t) <= envelope(t) at every sample."""
    t = [r.t for r in records]
    weight = _cumulative_trapezoid(t, [r.phi for r in records])
    base = _envelope_base(records, floor)
    C = 0.0
    for r, w in zip(records, weight):
        if w > 0.0 and r.R > base:
            C = max(C, math.log(r.R / base) / w)
    return C


def drift_envelope_rate(times, drifts, grad_sup_sq):
    """Smallest rate c with drift(t) <= (drift(0) + c t) exp(4 int_0^t |grad d|_inf^2).

    The exponential mirrors the continuum growth bound for | |d|^2 - 1 |; the
    linear term absorbs the per-step truncation error of the scheme.
    """
    times = np.asarray(times, dtype=float)
    drifts = np.asarray(drifts, dtype=float)
    growth = np.exp(4.0 * _cumulative_trapezoid(times, grad_sup_sq))
    rate = 0.0
    for t, dr, g in zip(times - times[0], drifts, growth):
        if t > 0.0:
            rate = max(rate, (dr / g - drifts[0]) / t)
    return rate


def drift_envelope(times, drifts, grad_sup_sq, rate):
    times = np.asarray(times, dtype=float)
    growth = np.exp(4.0 * _cumulative_trapezoid(times, grad_sup_sq))
    return (drifts[0] + rate * (times - times[0])) * growth
