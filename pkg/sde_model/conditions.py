"""Sampled verifiers for the structural conditions on f and g.

The conditions quantify over all of R^d, so a sampled check can only find
violations. A passing report means "no violation found".
"""
import logging
from typing import Optional

import numpy as np

from models import (
    CONDITION_SLACK,
    ApplicabilityError,
    ConditionId,
    ConditionReport,
    ParameterError,
)
from .problem import NoiseStructure, SodeProblem
from .sampling import block_sizes, run_blocks, sample_pairs_block

logger = logging.getLogger(__name__)

# Pairs closer than this are skipped: the ratio is 0/0 there.
DEGENERATE_PAIR = 1e-12


def _squared_sum_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum((a - b) ** 2, axis=-1)


def _monotonicity_lhs(
    problem: SodeProblem,
    t,
    x1: np.ndarray,
    x2: np.ndarray,
    eta: float,
    eta2: Optional[float] = None,
) -> np.ndarray:
    dx = x1 - x2
    lhs = np.sum((problem.drift(t, x1) - problem.drift(t, x2)) * dx, axis=-1)
    for r in range(problem.num_drivers):
        lhs = lhs + eta * _squared_sum_diff(problem.diffusion(t, x1, r), problem.diffusion(t, x2, r))
    if eta2 is not None and problem.noise_structure != NoiseStructure.ADDITIVE:
        for r1 in range(problem.num_drivers):
            for r2 in range(problem.num_drivers):
                lhs = lhs + eta2 * _squared_sum_diff(
                    problem.diffusion_deriv_product(t, x1, r1, r2),
                    problem.diffusion_deriv_product(t, x2, r1, r2),
                )
    return lhs


def monotonicity_ratios(problem, t, x1, x2, eta, eta2=None) -> np.ndarray:
    """LHS / (L |x1 - x2|^2) per pair; degenerate pairs give NaN."""
    dist2 = np.sum((x1 - x2) ** 2, axis=-1)
    keep = dist2 >= DEGENERATE_PAIR ** 2
    lhs = _monotonicity_lhs(problem, t, x1, x2, eta, eta2)
    rhs = problem.monotonicity_L * dist2
    return np.where(keep, lhs / np.where(keep, rhs, 1.0), np.nan)


def coercivity_ratios(problem: SodeProblem, t, x: np.ndarray, p: float) -> np.ndarray:
    lhs = np.sum(problem.drift(t, x) * x, axis=-1)
    for r in range(problem.num_drivers):
        lhs = lhs + 0.5 * (p - 1.0) * np.sum(problem.diffusion(t, x, r) ** 2, axis=-1)
    return lhs / (problem.coercivity_constant * (1.0 + np.sum(x ** 2, axis=-1)))


def _worst(ratios: np.ndarray) -> float:
    finite = ratios[~np.isnan(ratios)]
    return float(np.max(finite)) if finite.size else 0.0


def _check_region(region_radius: float, num_samples: int) -> None:
    if region_radius <= 0:
        raise ParameterError(f"region radius must be > 0, got {region_radius}")
    if num_samples < 1:
        raise ParameterError(f"num_samples must be >= 1, got {num_samples}")


def _sampled_worst(problem, num_samples, region_radius, seed, workers, ratio_fn) -> float:
    sizes = block_sizes(num_samples)

    def block_worst(b: int) -> float:
        x1, x2, t = sample_pairs_block(
            seed, b, sizes[b], problem.dim, region_radius, problem.horizon_T
        )
        return _worst(ratio_fn(t, x1, x2))

    results = run_blocks(block_worst, len(sizes), workers)
    return max(results) if results else 0.0


def _report(condition_id, worst, num_samples, radius, **parameters) -> ConditionReport:
    report = ConditionReport(
        condition_id=condition_id,
        worst_ratio=worst,
        num_samples=num_samples,
        sample_region_radius=radius,
        passed=worst <= 1.0 + CONDITION_SLACK,
        parameters=parameters,
    )
    if not report.passed:
        logger.warning("%s violated: worst ratio %.6g", condition_id.value, worst)
    return report


def verify_monotonicity(
    problem: SodeProblem,
    eta: float,
    region_radius: float,
    num_samples: int,
    seed: int,
    workers: int = 1,
) -> ConditionReport:
    """Sampled check of the global monotonicity condition with constant L."""
    if eta <= 0.5:
        raise ParameterError(f"eta must be > 1/2, got {eta}")
    _check_region(region_radius, num_samples)
    worst = _sampled_worst(
        problem, num_samples, region_radius, seed, workers,
        lambda t, x1, x2: monotonicity_ratios(problem, t, x1, x2, eta),
    )
    return _report(ConditionId.GLOBAL_MONOTONICITY, worst, num_samples, region_radius, eta=eta)


def verify_ssbm_monotonicity(
    problem: SodeProblem,
    eta1: float,
    eta2: float,
    region_radius: float,
    num_samples: int,
    seed: int,
    workers: int = 1,
) -> ConditionReport:
    """Monotonicity with the extra eta2 * sum |g^{r1,r2}(x1) - g^{r1,r2}(x2)|^2 term."""
    if eta1 <= 1:
        raise ParameterError(f"eta1 must be > 1, got {eta1}")
    if eta2 <= 0:
        raise ParameterError(f"eta2 must be > 0, got {eta2}")
    _check_region(region_radius, num_samples)
    worst = _sampled_worst(
        problem, num_samples, region_radius, seed, workers,
        lambda t, x1, x2: monotonicity_ratios(problem, t, x1, x2, eta1, eta2),
    )
    return _report(
        ConditionId.SSBM_MONOTONICITY, worst, num_samples, region_radius, eta1=eta1, eta2=eta2
    )


def verify_coercivity(
    problem: SodeProblem,
    p: float,
    region_radius: float,
    num_samples: int,
    seed: int,
    workers: int = 1,
) -> ConditionReport:
    """Sampled check of <f, x> + (p-1)/2 sum |g^r|^2 <= C (1 + |x|^2); C defaults to L."""
    if p < 2:
        raise ParameterError(f"p must be >= 2, got {p}")
    _check_region(region_radius, num_samples)
    worst = _sampled_worst(
        problem, num_samples, region_radius, seed, workers,
        lambda t, x1, x2: coercivity_ratios(problem, t, x1, p),
    )
    return _report(
        ConditionId.COERCIVITY, worst, num_samples, region_radius,
        p=p, C=problem.coercivity_constant,
    )


def _fd_diffusion_jacobian(problem, t, x, r, step=1e-6):
    cols = []
    for k in range(problem.dim):
        e = np.zeros(problem.dim)
        e[k] = step
        cols.append((problem.diffusion(t, x + e, r) - problem.diffusion(t, x - e, r)) / (2.0 * step))
    return np.stack(cols, axis=-1)


def verify_jacobian_lipschitz(
    problem: SodeProblem,
    coefficient: str,
    region_radius: float,
    num_samples: int,
    seed: int,
    constant: Optional[float] = None,
    workers: int = 1,
) -> ConditionReport:
    """Local Lipschitz bounds on df/dx (weight exponent q-2) or dg^r/dx (exponent (q-3)/2).

    `constant` defaults to L; the bounds usually need a larger constant than
    the monotonicity condition.
    """
    if coefficient not in ("drift", "diffusion"):
        raise ParameterError(f"coefficient must be 'drift' or 'diffusion', got {coefficient!r}")
    _check_region(region_radius, num_samples)
    const = problem.monotonicity_L if constant is None else constant
    q = problem.growth_rate_q

    def ratios(t, x1, x2):
        dist = np.linalg.norm(x1 - x2, axis=-1)
        weight = 1.0 + np.linalg.norm(x1, axis=-1) + np.linalg.norm(x2, axis=-1)
        if coefficient == "drift":
            gap = np.linalg.norm(problem.drift_jac(t, x1) - problem.drift_jac(t, x2), ord=2, axis=(-2, -1))
            bound = const * weight ** (q - 2.0) * dist
        else:
            gap = np.zeros_like(dist)
            for r in range(problem.num_drivers):
                diff = _fd_diffusion_jacobian(problem, t, x1, r) - _fd_diffusion_jacobian(problem, t, x2, r)
                gap = np.maximum(gap, np.linalg.norm(diff, ord=2, axis=(-2, -1)))
            bound = const * weight ** ((q - 3.0) / 2.0) * dist
        keep = dist >= DEGENERATE_PAIR
        return np.where(keep, gap / np.where(keep, bound, 1.0), np.nan)

    worst = _sampled_worst(problem, num_samples, region_radius, seed, workers, ratios)
    condition = (ConditionId.LOCAL_LIPSCHITZ_DRIFT_JACOBIAN if coefficient == "drift"
                 else ConditionId.LOCAL_LIPSCHITZ_DIFFUSION_JACOBIAN)
    return _report(condition, worst, num_samples, region_radius, constant=const)


def scan_condition(
    problem: SodeProblem,
    condition_id: ConditionId,
    region_radius: float,
    points_per_axis: int = 401,
    t: float = 0.0,
    **params: float,
) -> ConditionReport:
    """Dense grid scan over [-R, R]^2 of (x1, x2) pairs for scalar problems.

    Accepts ``eta`` for global monotonicity, ``eta1``/``eta2`` for the SSBM
    condition and ``p`` for coercivity (which scans x1 only).
    """
    if problem.dim != 1:
        raise ApplicabilityError("grid scans are implemented for scalar problems only")
    _check_region(region_radius, points_per_axis)
    axis = np.linspace(-region_radius, region_radius, points_per_axis)
    if condition_id == ConditionId.COERCIVITY:
        ratios = coercivity_ratios(problem, t, axis[:, None], params["p"])
        num = axis.size
    else:
        a, b = np.meshgrid(axis, axis, indexing="ij")
        x1, x2 = a.reshape(-1, 1), b.reshape(-1, 1)
        if condition_id == ConditionId.GLOBAL_MONOTONICITY:
            ratios = monotonicity_ratios(problem, t, x1, x2, params["eta"])
        elif condition_id == ConditionId.SSBM_MONOTONICITY:
            ratios = monotonicity_ratios(problem, t, x1, x2, params["eta1"], params["eta2"])
        else:
            raise ApplicabilityError(f"no grid scan for {condition_id.value}")
        num = x1.shape[0]
    return _report(condition_id, _worst(ratios), num, region_radius, **params)
