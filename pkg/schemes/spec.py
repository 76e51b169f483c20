from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from models import ParameterError
from sde_model import SodeProblem

# Split-step bounds are kept strictly below their limit by this relative margin.
BOUND_MARGIN = 1e-6


class SchemeKind(str, Enum):
    EULER_MARUYAMA = "em"
    MILSTEIN = "milstein"
    PROJECTED_EM = "pem"
    PROJECTED_MILSTEIN = "pmil"
    SPLIT_STEP_BACKWARD_EULER = "ssbe"
    SPLIT_STEP_BACKWARD_MILSTEIN = "ssbm"

    @property
    def is_projected(self) -> bool:
        return self in (SchemeKind.PROJECTED_EM, SchemeKind.PROJECTED_MILSTEIN)

    @property
    def is_split_step(self) -> bool:
        return self in (SchemeKind.SPLIT_STEP_BACKWARD_EULER, SchemeKind.SPLIT_STEP_BACKWARD_MILSTEIN)

    @property
    def has_milstein_terms(self) -> bool:
        return self in (
            SchemeKind.MILSTEIN,
            SchemeKind.PROJECTED_MILSTEIN,
            SchemeKind.SPLIT_STEP_BACKWARD_MILSTEIN,
        )


class SolverKind(str, Enum):
    NEWTON_FULL = "newton_full"
    NEWTON_FIXED = "newton_fixed"
    CARDANO = "cardano"


class ImplicitSolver(BaseModel):
    """Settings for y - delta f(t, y) = x.

    `iterations` is only read by NEWTON_FIXED, which runs exactly that many
    undamped Newton steps.
    """
    model_config = ConfigDict(frozen=True)

    kind: SolverKind = SolverKind.NEWTON_FULL
    iterations: int = Field(default=3, ge=1)
    tolerance: float = Field(default=1e-12, gt=0.0)
    max_iters: int = Field(default=50, ge=1)


class SchemeSpec(BaseModel):
    """Scheme identifier with its projection exponent, step bound and implicit solver."""
    model_config = ConfigDict(frozen=True)

    kind: SchemeKind
    alpha: Optional[float] = Field(default=None, gt=0.0)
    upper_step_bound: float = Field(gt=0.0)
    solver: ImplicitSolver = ImplicitSolver()

    @model_validator(mode="after")
    def _projected_settings(self):
        if self.kind.is_projected:
            if self.alpha is None:
                raise ValueError(f"{self.kind.value} needs a projection exponent alpha > 0")
            if self.upper_step_bound > 1.0:
                raise ValueError(
                    f"{self.kind.value} needs upper_step_bound <= 1, got {self.upper_step_bound}"
                )
        return self

    @property
    def name(self) -> str:
        return self.kind.value


def default_upper_step_bound(kind: SchemeKind, problem: SodeProblem) -> float:
    L = problem.monotonicity_L
    if kind.is_projected:
        return 1.0
    if kind == SchemeKind.SPLIT_STEP_BACKWARD_MILSTEIN and problem.eta1 and problem.eta2:
        return min(1.0 / L, 2.0 * problem.eta2 / problem.eta1) * (1.0 - BOUND_MARGIN)
    if kind.is_split_step:
        return (1.0 / L) * (1.0 - BOUND_MARGIN)
    return problem.horizon_T


def make_scheme(
    kind: SchemeKind,
    problem: SodeProblem,
    alpha: Optional[float] = None,
    upper_step_bound: Optional[float] = None,
    solver: Optional[ImplicitSolver] = None,
) -> SchemeSpec:
    """SchemeSpec with problem-derived defaults: alpha = 1/(2(q-1)), bounds per scheme family."""
    kind = SchemeKind(kind)
    if kind.is_projected and alpha is None:
        alpha = problem.default_alpha
    bound = upper_step_bound if upper_step_bound is not None else default_upper_step_bound(kind, problem)
    if kind.is_split_step and bound >= 1.0 / problem.monotonicity_L:
        raise ParameterError(
            f"{kind.value} needs upper_step_bound < 1/L = {1.0 / problem.monotonicity_L:.6g}, got {bound}"
        )
    return SchemeSpec(
        kind=kind,
        alpha=alpha if kind.is_projected else None,
        upper_step_bound=bound,
        solver=solver or ImplicitSolver(),
    )
