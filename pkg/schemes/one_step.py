"""One-step maps of the six schemes.

Explicit schemes evaluate the coefficients at the left endpoint t of the
step; the split-step schemes evaluate them at t + delta, after the implicit
drift step.
"""
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from models import ApplicabilityError, ParameterError, StepOverflowError
from noise import StepIncrements
from sde_model import NoiseStructure, SodeProblem
from .implicit import SolverStats, implicit_solve_with_stats
from .projection import project_with_flag
from .spec import SchemeKind, SchemeSpec

# Relative slack when comparing a step length with the upper step bound.
BOUND_SLACK = 1e-12

_COMPATIBLE = {
    NoiseStructure.ADDITIVE: {NoiseStructure.ADDITIVE},
    NoiseStructure.SCALAR: {NoiseStructure.SCALAR, NoiseStructure.COMMUTATIVE},
    NoiseStructure.DIAGONAL: {NoiseStructure.DIAGONAL, NoiseStructure.COMMUTATIVE},
    NoiseStructure.COMMUTATIVE: {NoiseStructure.COMMUTATIVE},
    NoiseStructure.GENERAL: set(),
}


@dataclass
class StepMeta:
    projected: np.ndarray
    solver: SolverStats = field(default_factory=SolverStats)


def diffusion_sum(problem: SodeProblem, t, y: np.ndarray, inc: StepIncrements) -> np.ndarray:
    total = np.zeros_like(y)
    for r in range(problem.num_drivers):
        total = total + problem.diffusion(t, y, r) * inc.dw[..., r, None]
    return total


def milstein_sum(problem: SodeProblem, t, y: np.ndarray, inc: StepIncrements) -> np.ndarray:
    """sum_{r1,r2} g^{r1,r2}(t, y) I_{(r2,r1)}.

    The pairing g^{r1,r2} with I_{(r2,r1)} matters only for general noise;
    with the symmetric commutative split the order is immaterial.
    """
    total = np.zeros_like(y)
    diagonal_only = inc.structure in (NoiseStructure.SCALAR, NoiseStructure.DIAGONAL)
    for r1 in range(problem.num_drivers):
        for r2 in range(problem.num_drivers):
            if diagonal_only and r1 != r2:
                continue
            total = total + problem.diffusion_deriv_product(t, y, r1, r2) * inc.iterated[..., r2, r1, None]
    return total


def _explicit_update(problem, t, y, inc, delta, milstein: bool) -> np.ndarray:
    nxt = y + delta * problem.drift(t, y) + diffusion_sum(problem, t, y, inc)
    if milstein and inc.structure != NoiseStructure.ADDITIVE:
        nxt = nxt + milstein_sum(problem, t, y, inc)
    return nxt


def _check_step(problem: SodeProblem, scheme: SchemeSpec, inc: StepIncrements) -> None:
    if inc.delta > scheme.upper_step_bound * (1.0 + BOUND_SLACK):
        raise ParameterError(
            f"step {inc.delta} exceeds the upper step bound {scheme.upper_step_bound} of {scheme.name}"
        )
    if inc.structure not in _COMPATIBLE[problem.noise_structure]:
        raise ApplicabilityError(
            f"increments for {inc.structure.value} noise do not fit a problem with "
            f"{problem.noise_structure.value} noise"
        )


def step(
    problem: SodeProblem,
    scheme: SchemeSpec,
    x: np.ndarray,
    t: float,
    inc: StepIncrements,
    step_index: Optional[int] = None,
    check_finite: bool = True,
) -> Tuple[np.ndarray, StepMeta]:
    """Advance x from t to t + inc.delta; x may carry leading batch axes."""
    _check_step(problem, scheme, inc)
    x = np.asarray(x, dtype=float)
    delta = inc.delta
    kind = scheme.kind
    meta = StepMeta(projected=np.zeros(x.shape[:-1], dtype=bool))

    if kind.is_projected:
        y, meta.projected = project_with_flag(x, delta, scheme.alpha)
        nxt = _explicit_update(problem, t, y, inc, delta, kind.has_milstein_terms)
    elif kind.is_split_step:
        t_right = t + delta
        y, meta.solver = implicit_solve_with_stats(problem, t_right, delta, x, scheme.solver)
        nxt = y + diffusion_sum(problem, t_right, y, inc)
        if kind == SchemeKind.SPLIT_STEP_BACKWARD_MILSTEIN and inc.structure != NoiseStructure.ADDITIVE:
            nxt = nxt + milstein_sum(problem, t_right, y, inc)
    else:
        nxt = _explicit_update(problem, t, x, inc, delta, kind.has_milstein_terms)

    if check_finite and not np.all(np.isfinite(nxt)):
        where = "" if step_index is None else f" at step {step_index}"
        raise StepOverflowError(
            f"{scheme.name} produced a non-finite state{where} (t={t})",
            step_index=-1 if step_index is None else step_index,
        )
    return nxt, meta
