from .spec import (
    BOUND_MARGIN,
    SchemeKind,
    SolverKind,
    ImplicitSolver,
    SchemeSpec,
    default_upper_step_bound,
    make_scheme,
)
from .projection import project_to_ball, project_with_flag
from .implicit import SolverStats, implicit_solve, implicit_solve_with_stats, residual
from .one_step import StepMeta, step, diffusion_sum, milstein_sum
from .integrate import COMMUTATIVITY_TOL, StepGrid, TrajectoryRecord, integrate, write_trajectory_csv

__all__ = [
    # Scheme settings
    "BOUND_MARGIN",
    "SchemeKind",
    "SolverKind",
    "ImplicitSolver",
    "SchemeSpec",
    "default_upper_step_bound",
    "make_scheme",
    # Building blocks
    "project_to_ball",
    "project_with_flag",
    "SolverStats",
    "implicit_solve",
    "implicit_solve_with_stats",
    "residual",
    "StepMeta",
    "step",
    "diffusion_sum",
    "milstein_sum",
    # Integration
    "COMMUTATIVITY_TOL",
    "StepGrid",
    "TrajectoryRecord",
    "integrate",
    "write_trajectory_csv",
]
