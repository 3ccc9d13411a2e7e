"""Finite-difference solver and verification harness for a simplified
Ericksen-Leslie model of nematic liquid crystal flow.

Incompressible Navier-Stokes on a MAC grid is coupled to the harmonic map
heat flow of a unit director field; time stepping is by slab-wise Picard
iteration of backward-Euler Stokes and heat solves.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    GridError,
    GridMismatch,
    IncompatibleRhs,
    MaxHalvingsExceeded,
    NematicFlowError,
    NonConvergence,
)
from .grid import (
    BCMode,
    DirectorField,
    GridSpec,
    MacVectorField,
    ScalarField,
    State,
    apply_director_bc,
    apply_velocity_bc,
    make_grid,
)
from .projection import PoissonSolveConfig, project, solve_helmholtz, solve_poisson
from .stepper import Physics, PicardReport, SlabConfig, advance_to, picard_advance

__all__ = [
    "BCMode",
    "ConfigError",
    "DirectorField",
    "GridError",
    "GridMismatch",
    "GridSpec",
    "IncompatibleRhs",
    "MacVectorField",
    "MaxHalvingsExceeded",
    "NematicFlowError",
    "NonConvergence",
    "Physics",
    "PicardReport",
    "PoissonSolveConfig",
    "ScalarField",
    "SlabConfig",
    "State",
    "advance_to",
    "apply_director_bc",
    "apply_velocity_bc",
    "make_grid",
    "picard_advance",
    "project",
    "solve_helmholtz",
    "solve_poisson",
]
