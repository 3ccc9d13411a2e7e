"""Manufactured solutions on the 2D periodic box [0, 2 pi]^2.

The exact fields are

    u* = A e^{-2t} (sin x cos y, -cos x sin y)
    P* = (A^2 / 4) e^{-4t} (cos 2x + cos 2y)
    d* = (sin a, 0, cos a),   a = a0 + k x + B cos x cos y e^{-t}

With e = (cos a, 0, -sin a) one has grad d* = e (x) grad a, so
lap d* + |grad d*|^2 d* = e lap a and the forcings reduce to

    g_d = e (a_t + u*.grad a - gamma lap a)
    g_u = (2 mu - 2) u* + lam (lap a grad a + grad |grad a|^2 / 2),

because the Taylor-Green pair already balances u*.grad u* + grad P*.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridError
from .grid import DirectorField, MacVectorField, ScalarField, State, make_grid
from .operators import inner
from .projection import PoissonSolveConfig
from .stepper import Physics, SlabConfig, advance_to

MMS_COLUMNS = ("h", "dt", "err_u_L2", "err_d_L2", "order_u", "order_d")
TWO_PI = 2.0 * math.pi
ERROR_FLOOR = 1e-12


@dataclass(frozen=True)
class ManufacturedCase:
    name: str = "time_dependent"
    velocity_amp: float = 0.5
    angle_amp: float = 0.5
    twist_k: int = 0
    angle0: float = 0.0

    @classmethod
    def named(cls, name):
        if name == "time_dependent":
            return cls(name)
        if name == "steady_twist":
            return cls(name, velocity_amp=0.0, angle_amp=0.0, twist_k=1)
        if name == "constant":
            return cls(name, velocity_amp=0.0, angle_amp=0.0, angle0=0.3)
        raise ValueError(f"unknown manufactured case {name!r}")

    def velocity(self, x, y, t):
        amp = self.velocity_amp * math.exp(-2.0 * t)
        return amp * np.sin(x) * np.cos(y), -amp * np.cos(x) * np.sin(y)

    def pressure(self, x, y, t):
        return 0.25 * self.velocity_amp ** 2 * math.exp(-4.0 * t) * (np.cos(2 * x) + np.cos(2 * y))

    def angle(self, x, y, t):
        return self.angle0 + self.twist_k * x + self.angle_amp * math.exp(-t) * np.cos(x) * np.cos(y)

    def angle_derivatives(self, x, y, t):
        """(a_t, a_x, a_y, lap a)."""
        b = self.angle_amp * math.exp(-t)
        bump = b * np.cos(x) * np.cos(y)
        return -bump, self.twist_k - b * np.sin(x) * np.cos(y), -b * np.cos(x) * np.sin(y), -2.0 * bump

    def director(self, x, y, t):
        a = self.angle(x, y, t)
        return np.stack([np.sin(a), np.zeros_like(a), np.cos(a)])


def mms_grid(n):
    return make_grid((n, n), (TWO_PI, TWO_PI), "periodic")


def _check_grid(grid):
    if grid.ndim != 2 or not grid.periodic or any(abs(L - TWO_PI) > 1e-12 for L in grid.lengths):
        raise GridError("manufactured cases live on the 2D periodic box [0, 2 pi]^2")


def _force_u(case, x, y, t, physics, axis):
    ux, uy = case.velocity(x, y, t)
    _, ax, ay, lap = case.angle_derivatives(x, y, t)
    b = case.angle_amp * math.exp(-t)
    # grad |grad a|^2 / 2 = Hess(a) grad a
    axx = ayy = -b * np.cos(x) * np.cos(y)
    axy = b * np.sin(x) * np.sin(y)
    if axis == 0:
        vel, stress = ux, lap * ax + axx * ax + axy * ay
    else:
        vel, stress = uy, lap * ay + axy * ax + ayy * ay
    return (2.0 * physics.mu - 2.0) * vel + physics.lam * stress


def manufactured_forcings(case, grid, t, physics=Physics()):
    """Forcings (g_u on faces, g_d at cells) that make the case an exact solution."""
    _check_grid(grid)
    comps = [_force_u(case, *grid.face_coords(a), t, physics, a) for a in range(2)]
    x, y = grid.cell_coords()
    a = case.angle(x, y, t)
    at, ax, ay, lap = case.angle_derivatives(x, y, t)
    ux, uy = case.velocity(x, y, t)
    scale = at + ux * ax + uy * ay - physics.gamma * lap
    g_d = np.stack([np.cos(a) * scale, np.zeros_like(a), -np.sin(a) * scale])
    return MacVectorField.from_interior(grid, comps), DirectorField.from_interior(grid, g_d)


def exact_state(case, grid, t):
    _check_grid(grid)
    u = MacVectorField.from_interior(grid, [case.velocity(*grid.face_coords(a), t)[a] for a in range(2)])
    d = DirectorField.from_interior(grid, case.director(*grid.cell_coords(), t))
    p = case.pressure(*grid.cell_coords(), t)
    return State(u, d, ScalarField.from_interior(grid, p - p.mean()), t)


@dataclass(frozen=True)
class MmsConfig:
    t_end: float = 0.2
    dt0: float = 0.02
    steps_per_slab: int = 10
    physics: Physics = field(default_factory=Physics)
    poisson: PoissonSolveConfig = field(default_factory=PoissonSolveConfig)
    picard_tol: float = 1e-11


@dataclass
class MmsRow:
    n: int
    h: float
    dt: float
    err_u: float
    err_d: float
    order_u: float = math.nan
    order_d: float = math.nan

    def row(self):
        return [self.h, self.dt, self.err_u, self.err_d, self.order_u, self.order_d]


@dataclass
class MmsTable:
    case: str
    rows: list

    def fitted_order(self):
        """Least-squares slope of log error against log h, for u and d."""
        logh = np.log([r.h for r in self.rows])
        out = []
        for errs in ([r.err_u for r in self.rows], [r.err_d for r in self.rows]):
            errs = np.asarray(errs)
            if np.any(errs <= ERROR_FLOOR):
                out.append(math.nan)
            else:
                out.append(float(np.polyfit(logh, np.log(errs), 1)[0]))
        return tuple(out)

    def at_floor(self, floor=ERROR_FLOOR):
        return all(r.err_u <= floor and r.err_d <= floor for r in self.rows)


def _l2_error(num, exact):
    diff = num - exact
    return math.sqrt(max(inner(diff, diff), 0.0))


def run_single(case, n, steps, cfg=MmsConfig()):
    """Advance one resolution with ``steps`` uniform steps; return (h, dt, err_u, err_d)."""
    grid = mms_grid(n)
    dt = cfg.t_end / steps
    s0 = exact_state(case, grid, 0.0)
    slab = SlabConfig(dt=dt, slab_T=dt * cfg.steps_per_slab, picard_tol=cfg.picard_tol)

    def forcing(t):
        return manufactured_forcings(case, grid, t, cfg.physics)

    s, _ = advance_to(s0, cfg.t_end, slab, cfg.physics, cfg.poisson, forcing=forcing)
    ref = exact_state(case, grid, cfg.t_end)
    return grid.spacing[0], dt, _l2_error(s.u, ref.u), _l2_error(s.d, ref.d)


def run_mms(case, resolutions, cfg=MmsConfig(), map_fn=map):
    """Convergence study with dt proportional to h^2.

    The coarsest resolution takes ``round(t_end / dt0)`` steps; resolution n
    takes that number times (n / n0)^2, so dt / h^2 is identical on every
    level.  ``map_fn`` may run the resolutions concurrently.
    """
    resolutions = [int(n) for n in resolutions]
    if len(resolutions) < 3:
        raise ValueError("a convergence fit needs at least 3 resolutions")
    if sorted(set(resolutions)) != resolutions:
        raise ValueError("resolutions must be strictly increasing")
    n0 = resolutions[0]
    base_steps = max(1, round(cfg.t_end / cfg.dt0))
    for n in resolutions:
        if (n * n * base_steps) % (n0 * n0):
            raise ValueError(f"resolution {n} does not give an integer step count for dt ~ h^2")

    def level(n):
        h, dt, eu, ed = run_single(case, n, n * n * base_steps // (n0 * n0), cfg)
        return MmsRow(n, h, dt, eu, ed)

    rows = list(map_fn(level, resolutions))
    for prev, cur in zip(rows, rows[1:]):
        r = math.log(prev.h / cur.h)
        # errors at rounding level carry no order information
        if min(prev.err_u, cur.err_u) > ERROR_FLOOR:
            cur.order_u = math.log(prev.err_u / cur.err_u) / r
        if min(prev.err_d, cur.err_d) > ERROR_FLOOR:
            cur.order_d = math.log(prev.err_d / cur.err_d) / r
    return MmsTable(case.name, rows)
