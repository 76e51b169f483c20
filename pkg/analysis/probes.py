"""Empirical probes of local accuracy and of the stability estimates.

All probes sample points with the block-keyed generators of
`sde_model.sampling`, so a probe is reproducible from its seed.
"""
import logging
from typing import List, Optional, Sequence

import numpy as np

from models import CONDITION_SLACK, LocalErrorProbeReport, ParameterError, ProbeResult
from noise import generate_paths, iterated_integrals
from sde_model import SodeProblem, block_rng, run_blocks, sample_ball
from sde_model.sampling import block_sizes, sample_pairs_block
from schemes import (
    ImplicitSolver,
    SchemeKind,
    SchemeSpec,
    implicit_solve,
    make_scheme,
    project_to_ball,
    step,
)

logger = logging.getLogger(__name__)

DEFAULT_PROBE_CHUNK = 1024
# Slack on the projection Lipschitz bound, absolute.
PROJECTION_SLACK = 1e-12


def loglog_slope(deltas: Sequence[float], values: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log(values) against log(deltas); None if any value is 0."""
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        return None
    return float(np.polyfit(np.log(deltas), np.log(values), 1)[0])


def _fold(problem: SodeProblem, scheme: SchemeSpec, x: np.ndarray, t: float, bundle, stride: int):
    """Apply the one-step map over consecutive windows of `stride` fine steps."""
    for k, start in enumerate(range(0, bundle.num_fine_steps, stride)):
        inc = iterated_integrals(bundle, start, start + stride, problem.noise_structure)
        x, _ = step(problem, scheme, x, t + k * inc.delta, inc)
    return x


def local_error_probe(
    problem: SodeProblem,
    scheme: SchemeSpec,
    x0: np.ndarray,
    t: float,
    deltas: Sequence[float],
    M: int,
    seed: int,
    fine_exponent: int = 16,
    reference: Optional[SchemeSpec] = None,
    workers: int = 1,
    chunk_size: int = DEFAULT_PROBE_CHUNK,
) -> LocalErrorProbeReport:
    """Slopes of the mean and fluctuation parts of one-step errors from a deterministic x0.

    D = X_ref(t + delta) - Psi(x0, t, delta) on M coupled samples, where the
    reference runs `reference` (PMil by default) at step 2^-fine_exponent on
    the same path. Expected slopes for order gamma are gamma + 1 and gamma + 1/2.
    """
    deltas = [float(d) for d in deltas]
    if len(deltas) < 2 or any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ParameterError("deltas must be strictly decreasing with at least two entries")
    if deltas[0] > scheme.upper_step_bound:
        raise ParameterError(f"delta={deltas[0]} exceeds the bound {scheme.upper_step_bound} of {scheme.name}")
    if M < 2:
        raise ParameterError(f"need at least 2 samples, got {M}")
    fine_dt = 2.0 ** -fine_exponent
    reference = reference or make_scheme(SchemeKind.PROJECTED_MILSTEIN, problem)
    x0 = np.asarray(x0, dtype=float).reshape(problem.dim)
    starts = list(range(0, M, chunk_size))

    mean_parts, fluct_parts, inconclusive = [], [], False
    for i, delta in enumerate(deltas):
        stride = int(round(delta / fine_dt))
        if stride < 1 or abs(stride * fine_dt - delta) > 1e-12 * delta:
            raise ParameterError(f"fine step {fine_dt} does not divide delta={delta}")

        def run_chunk(c: int) -> np.ndarray:
            indices = range(starts[c], min(starts[c] + chunk_size, M))
            bundle = generate_paths(seed, indices, delta, fine_dt, problem.num_drivers)
            x = np.broadcast_to(x0, (len(indices), problem.dim)).copy()
            exact = _fold(problem, reference, x, t, bundle, 1)
            approx = _fold(problem, scheme, x, t, bundle, stride)
            return exact - approx

        d = np.concatenate(run_blocks(run_chunk, len(starts), workers))
        mean = d.mean(axis=0)
        fluct = float(np.sqrt(np.mean(np.sum((d - mean) ** 2, axis=-1))))
        mean_parts.append(float(np.linalg.norm(mean)))
        fluct_parts.append(fluct)
        if i == 0 and 0.0 < mean_parts[0] < 3.0 * fluct / np.sqrt(M):
            inconclusive = True
            logger.warning(
                "%s local error probe: mean part %.3g below 3 standard errors at delta=%g; increase M",
                scheme.name, mean_parts[0], delta,
            )

    report = LocalErrorProbeReport(
        scheme=scheme.name,
        deltas=deltas,
        mean_parts=mean_parts,
        fluct_parts=fluct_parts,
        mean_slope=loglog_slope(deltas, mean_parts),
        fluct_slope=loglog_slope(deltas, fluct_parts),
        num_samples=M,
        inconclusive=inconclusive,
    )
    logger.info("%s local error slopes: mean %s, fluct %s", scheme.name, report.mean_slope, report.fluct_slope)
    return report


def _pairs(problem: SodeProblem, num_samples: int, radius: float, seed: int):
    sizes = block_sizes(num_samples)
    parts = [sample_pairs_block(seed, b, n, problem.dim, radius, problem.horizon_T) for b, n in enumerate(sizes)]
    return tuple(np.concatenate([p[k] for p in parts]) for k in range(3))


def _result(name: str, value: Optional[float], upper: float, lower: Optional[float] = None) -> ProbeResult:
    value = float("nan") if value is None else value
    passed = value <= upper and (lower is None or value >= lower)
    if not passed:
        logger.warning("probe %s failed: value %.6g outside [%s, %s]", name, value, lower, upper)
    return ProbeResult(name=name, value=float(value), lower=lower, upper=upper, passed=bool(passed))


def projection_probe(
    deltas: Sequence[float],
    alphas: Sequence[float],
    num_samples: int,
    seed: int,
    dim: int = 2,
    radius: float = 10.0,
) -> ProbeResult:
    """Largest |x1° - x2°| - |x1 - x2| over sampled pairs and a (delta, alpha) grid."""
    worst = -np.inf
    for b, n in enumerate(block_sizes(num_samples)):
        rng = block_rng(seed, b)
        x1 = sample_ball(rng, n, dim, radius)
        x2 = sample_ball(rng, n, dim, radius)
        base = np.linalg.norm(x1 - x2, axis=-1)
        for delta in deltas:
            for alpha in alphas:
                gap = np.linalg.norm(project_to_ball(x1, delta, alpha) - project_to_ball(x2, delta, alpha), axis=-1)
                worst = max(worst, float(np.max(gap - base)))
    return _result("projection_nonexpansive", worst, PROJECTION_SLACK)


def implicit_lipschitz_probe(
    problem: SodeProblem, delta: float, num_samples: int, seed: int, radius: float = 5.0,
    solver: ImplicitSolver = ImplicitSolver(),
) -> ProbeResult:
    """max |F^-1(x1) - F^-1(x2)| (1 - L delta) / |x1 - x2|."""
    x1, x2, t = _pairs(problem, num_samples, radius, seed)
    y1 = implicit_solve(problem, t, delta, x1, solver)
    y2 = implicit_solve(problem, t, delta, x2, solver)
    ratio = (np.linalg.norm(y1 - y2, axis=-1) * (1.0 - problem.monotonicity_L * delta)
             / np.linalg.norm(x1 - x2, axis=-1))
    return _result("implicit_lipschitz", float(np.max(ratio)), 1.0 + CONDITION_SLACK)


def implicit_growth_probe(
    problem: SodeProblem, delta: float, num_samples: int, seed: int, radius: float = 5.0,
    solver: ImplicitSolver = ImplicitSolver(),
) -> ProbeResult:
    """max |F^-1(x)| (1 - L delta) / (L delta + |x|)."""
    x, _, t = _pairs(problem, num_samples, radius, seed)
    y = implicit_solve(problem, t, delta, x, solver)
    L = problem.monotonicity_L
    ratio = np.linalg.norm(y, axis=-1) * (1.0 - L * delta) / (L * delta + np.linalg.norm(x, axis=-1))
    return _result("implicit_growth", float(np.max(ratio)), 1.0 + CONDITION_SLACK)


def split_step_stability_constant(L: float, upper_step_bound: float) -> float:
    """C1 = L (2 - L h) / (1 - L h)^2, so that (1 - L delta)^-2 <= 1 + C1 delta for delta <= h."""
    return L * (2.0 - L * upper_step_bound) / (1.0 - L * upper_step_bound) ** 2


def split_step_stability_probe(
    problem: SodeProblem,
    delta: float,
    num_samples: int,
    seed: int,
    upper_step_bound: Optional[float] = None,
    radius: float = 5.0,
    solver: ImplicitSolver = ImplicitSolver(),
) -> ProbeResult:
    """Largest ratio of the implicit-step stability sum to (1 + C1 delta)|x1 - x2|^2.

    Needs eta1 and eta2 from the SSBM monotonicity condition.
    """
    if problem.eta1 is None or problem.eta2 is None:
        raise ParameterError(f"{problem.name} declares no eta1/eta2")
    bound = delta if upper_step_bound is None else upper_step_bound
    if delta > bound:
        raise ParameterError(f"delta={delta} exceeds the upper step bound {bound}")
    c1 = split_step_stability_constant(problem.monotonicity_L, bound)
    x1, x2, t = _pairs(problem, num_samples, radius, seed)
    y1 = implicit_solve(problem, t, delta, x1, solver)
    y2 = implicit_solve(problem, t, delta, x2, solver)
    lhs = np.sum((y1 - y2) ** 2, axis=-1)
    for r in range(problem.num_drivers):
        lhs = lhs + problem.eta1 * delta * np.sum(
            (problem.diffusion(t, y1, r) - problem.diffusion(t, y2, r)) ** 2, axis=-1)
    for r1 in range(problem.num_drivers):
        for r2 in range(problem.num_drivers):
            lhs = lhs + problem.eta2 * delta * np.sum(
                (problem.diffusion_deriv_product(t, y1, r1, r2)
                 - problem.diffusion_deriv_product(t, y2, r1, r2)) ** 2, axis=-1)
    ratio = lhs / ((1.0 + c1 * delta) * np.sum((x1 - x2) ** 2, axis=-1))
    return _result("split_step_stability", float(np.max(ratio)), 1.0 + CONDITION_SLACK)


def implicit_order_probe(
    problem: SodeProblem,
    deltas: Sequence[float],
    num_samples: int,
    seed: int,
    radius: float = 1.0,
    solver: ImplicitSolver = ImplicitSolver(),
) -> List[ProbeResult]:
    """Slopes of max|F^-1(x) - x| (expected 1) and max|F^-1(x) - x - delta f(x)| (expected 2).

    Keep the radius moderate: far from the origin delta |f'| is not small
    for the coarser deltas and the fitted slopes bend.
    """
    x, _, t = _pairs(problem, num_samples, radius, seed)
    first, second = [], []
    for delta in deltas:
        y = implicit_solve(problem, t, delta, x, solver)
        first.append(float(np.max(np.linalg.norm(y - x, axis=-1))))
        second.append(float(np.max(np.linalg.norm(y - x - delta * problem.drift(t, x), axis=-1))))
    return [
        _result("implicit_first_order_slope", loglog_slope(deltas, first), 1.1, 0.9),
        _result("implicit_second_order_slope", loglog_slope(deltas, second), 2.1, 1.9),
    ]


def pmil_stability_ratios(
    problem: SodeProblem, x1: np.ndarray, x2: np.ndarray, t, delta: float, alpha: float
) -> np.ndarray:
    """(|x1° - x2° + delta(f(x1°) - f(x2°))|^2 + 2 eta delta sum|g(x1°) - g(x2°)|^2) / |x1 - x2|^2."""
    p1, p2 = project_to_ball(x1, delta, alpha), project_to_ball(x2, delta, alpha)
    lhs = np.sum((p1 - p2 + delta * (problem.drift(t, p1) - problem.drift(t, p2))) ** 2, axis=-1)
    for r in range(problem.num_drivers):
        lhs = lhs + 2.0 * problem.eta * delta * np.sum(
            (problem.diffusion(t, p1, r) - problem.diffusion(t, p2, r)) ** 2, axis=-1)
    return lhs / np.sum((x1 - x2) ** 2, axis=-1)


def pmil_stability_probe(
    problem: SodeProblem,
    deltas: Sequence[float],
    num_samples: int,
    seed: int,
    alpha: Optional[float] = None,
    radius: float = 10.0,
) -> ProbeResult:
    """Calibrate C at the coarsest delta, then check ratio <= 1 + C delta at the finer ones.

    The value reported is the largest ratio / (1 + C delta) over the finer deltas.
    """
    deltas = sorted((float(d) for d in deltas), reverse=True)
    if len(deltas) < 2 or deltas[0] > 1.0:
        raise ParameterError("need at least two deltas in (0, 1]")
    alpha = problem.default_alpha if alpha is None else alpha
    x1, x2, t = _pairs(problem, num_samples, radius, seed)
    coarse = pmil_stability_ratios(problem, x1, x2, t, deltas[0], alpha)
    c_hat = max(float(np.max((coarse - 1.0) / deltas[0])), 0.0)
    worst = 0.0
    for delta in deltas[1:]:
        ratio = pmil_stability_ratios(problem, x1, x2, t, delta, alpha)
        worst = max(worst, float(np.max(ratio / (1.0 + c_hat * delta))))
    logger.info("PMil stability: calibrated C = %.4g at delta = %g", c_hat, deltas[0])
    return _result("pmil_stability", worst, 1.0 + CONDITION_SLACK)
