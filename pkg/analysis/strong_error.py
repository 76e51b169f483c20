"""Monte Carlo strong errors at the endpoint T against a coupled reference.

Sample j always uses the Brownian path keyed by (seed, j). Samples are
processed in fixed chunks of consecutive indices and the per-sample squared
errors are concatenated in index order before any reduction, so results do
not depend on how many worker threads ran the chunks.
"""
import logging
import time
from dataclasses import dataclass, replace
from typing import Dict, List, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import norm

from models import (
    ApplicabilityError,
    ErrorReport,
    ErrorRow,
    GridError,
    ParameterError,
    ProjectionRate,
    TimingRow,
    UndefinedEOCError,
)
from noise import ALIGN_TOL, PathBundle, generate_paths
from sde_model import SodeProblem, run_blocks
from schemes import SchemeKind, SchemeSpec, StepGrid, integrate, make_scheme

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 512
# Reports with a larger share of diverged samples are flagged invalid.
EXCLUSION_THRESHOLD = 1e-3
CI_LEVEL = 0.95
CI_METHOD = "normal 95% CI on the mean squared error, delta method to the RMS scale"


class ReferenceSpec(BaseModel):
    """Where X(T) comes from: the problem's exact solution or a scheme on the fine grid.

    The fine grid step is 2^-fine_exponent; with an exact reference it is the
    resolution of the Brownian path (and of any Riemann sum in the solution).
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["exact", "scheme"] = "scheme"
    scheme: SchemeKind = SchemeKind.PROJECTED_MILSTEIN
    fine_exponent: int = Field(default=12, ge=1, le=24)

    @property
    def fine_dt(self) -> float:
        return 2.0 ** -self.fine_exponent

    def describe(self) -> Dict[str, object]:
        out: Dict[str, object] = {"kind": self.kind, "fine_dt": self.fine_dt}
        if self.kind == "scheme":
            out["scheme"] = self.scheme.value
        return out


def eoc(errors: Sequence[float], hs: Sequence[float]) -> List[float]:
    """(ln e_i - ln e_{i-1}) / (ln h_i - ln h_{i-1}) for consecutive pairs."""
    if len(errors) != len(hs) or len(errors) < 2:
        raise ParameterError("eoc needs two equally long lists with at least two entries")
    if any(h <= 0 for h in hs):
        raise ParameterError("step sizes must be positive")
    out = []
    for i in range(1, len(errors)):
        if errors[i - 1] <= 0 or errors[i] <= 0:
            raise UndefinedEOCError(
                f"EOC undefined for errors ({errors[i - 1]}, {errors[i]})", pair_index=i
            )
        if hs[i] == hs[i - 1]:
            raise UndefinedEOCError(f"EOC undefined for equal step sizes {hs[i]}", pair_index=i)
        out.append(float((np.log(errors[i]) - np.log(errors[i - 1])) / (np.log(hs[i]) - np.log(hs[i - 1]))))
    return out


def _row_eocs(errors: List[float], hs: List[float]) -> List[Optional[float]]:
    out: List[Optional[float]] = [None]
    for i in range(1, len(errors)):
        try:
            out.append(eoc(errors[i - 1:i + 1], hs[i - 1:i + 1])[0])
        except UndefinedEOCError:
            out.append(None)
    return out


def rms_with_ci(squared: np.ndarray):
    """(rms, ci half-width) of per-sample squared errors."""
    mse = float(np.mean(squared))
    rms = float(np.sqrt(mse))
    if squared.size < 2 or rms == 0.0:
        return rms, 0.0
    z = float(norm.ppf(0.5 + 0.5 * CI_LEVEL))
    half = z * float(np.std(squared, ddof=1)) / np.sqrt(squared.size)
    return rms, half / (2.0 * rms)


@dataclass
class _ChunkResult:
    squared: Dict[int, np.ndarray]
    diverged: Dict[int, np.ndarray]
    projected: Dict[int, np.ndarray]
    seconds: Dict[int, float]
    cpu_seconds: Dict[int, float]


def _validate(problem, schemes, h_list, M, reference, T):
    if M < 2:
        raise ParameterError(f"need at least 2 samples, got {M}")
    if not h_list:
        raise ParameterError("h_list is empty")
    fine_dt = reference.fine_dt
    for h in h_list:
        ratio = h / fine_dt
        if abs(ratio - round(ratio)) > ALIGN_TOL * ratio or round(ratio) < 1:
            raise GridError(f"reference fine_dt={fine_dt} does not divide h={h}")
        StepGrid.uniform(h, T)
    for scheme in schemes:
        if max(h_list) > scheme.upper_step_bound:
            raise ParameterError(
                f"h={max(h_list)} exceeds the bound {scheme.upper_step_bound} required by {scheme.name}"
            )
    if reference.kind == "exact" and problem.exact_solution is None:
        raise ParameterError(f"{problem.name} has no exact solution; use a scheme reference")


def _reference_endpoint(problem, reference: ReferenceSpec, ref_scheme, bundle: PathBundle, T: float):
    if reference.kind == "exact":
        x_ref = np.asarray(problem.exact_solution(bundle, T), dtype=float)
        return x_ref, ~np.all(np.isfinite(x_ref), axis=-1)
    record = integrate(
        problem, ref_scheme, StepGrid.uniform(reference.fine_dt, T), bundle,
        on_overflow="mask", keep_states=False,
    )
    return record.final, record.diverged


def strong_errors(
    problem: SodeProblem,
    schemes: Sequence[SchemeSpec],
    h_list: Sequence[float],
    M: int,
    seed: int,
    reference: Optional[ReferenceSpec] = None,
    T: Optional[float] = None,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> List[ErrorReport]:
    """Strong errors of several schemes, all measured on the same samples and reference.

    A sample that diverges for the reference or for any step size of a
    scheme is excluded from that scheme's report.
    """
    reference = reference or ReferenceSpec()
    T = problem.horizon_T if T is None else T
    if T != problem.horizon_T:
        problem = replace(problem, horizon_T=T)
    h_list = [float(h) for h in h_list]
    _validate(problem, schemes, h_list, M, reference, T)
    ref_scheme = make_scheme(reference.scheme, problem) if reference.kind == "scheme" else None
    grids = [StepGrid.uniform(h, T) for h in h_list]
    starts = list(range(0, M, chunk_size))
    logger.info(
        "strong errors for %s: schemes=%s M=%d seed=%d chunks=%d reference=%s",
        problem.name, [s.name for s in schemes], M, seed, len(starts), reference.describe(),
    )

    def run_chunk(c: int) -> List[_ChunkResult]:
        indices = range(starts[c], min(starts[c] + chunk_size, M))
        bundle = generate_paths(seed, indices, T, reference.fine_dt, problem.num_drivers)
        x_ref, ref_bad = _reference_endpoint(problem, reference, ref_scheme, bundle, T)
        results = []
        for scheme in schemes:
            res = _ChunkResult({}, {}, {}, {}, {})
            for k, grid in enumerate(grids):
                began, cpu_began = time.perf_counter(), time.thread_time()
                record = integrate(problem, scheme, grid, bundle, on_overflow="mask", keep_states=False)
                res.seconds[k] = time.perf_counter() - began
                res.cpu_seconds[k] = time.thread_time() - cpu_began
                res.squared[k] = np.sum((record.final - x_ref) ** 2, axis=-1)
                res.diverged[k] = record.diverged | ref_bad
                res.projected[k] = np.asarray(record.projection_events) > 0
            results.append(res)
        logger.debug("chunk %d/%d done", c + 1, len(starts))
        return results

    chunks = run_blocks(run_chunk, len(starts), workers)
    reports = []
    for s, scheme in enumerate(schemes):
        reports.append(_assemble(scheme, problem, [ch[s] for ch in chunks], h_list, M, seed, reference))
    return reports


def _assemble(scheme, problem, parts: List[_ChunkResult], h_list, M, seed, reference) -> ErrorReport:
    n_rows = len(h_list)
    bad = np.zeros(M, dtype=bool)
    for k in range(n_rows):
        bad |= np.concatenate([p.diverged[k] for p in parts])
    keep = ~bad
    excluded = int(bad.sum())
    valid = bool(excluded <= EXCLUSION_THRESHOLD * M and keep.sum() >= 2)
    if excluded:
        logger.warning("%s: excluded %d of %d diverged samples", scheme.name, excluded, M)
    if not valid:
        logger.warning("%s: report flagged invalid (excluded share %.3g%%)", scheme.name, 100.0 * excluded / M)

    rows, errors = [], []
    for k, h in enumerate(h_list):
        squared = np.concatenate([p.squared[k] for p in parts])[keep]
        rms, ci = rms_with_ci(squared) if squared.size else (float("nan"), 0.0)
        errors.append(rms)
        rows.append(dict(
            h=h,
            rms_error=rms if np.isfinite(rms) else 0.0,
            ci_half_width=ci,
            projection_count=int(np.concatenate([p.projected[k] for p in parts])[keep].sum()),
            wall_time_s=float(sum(p.seconds[k] for p in parts)),
            cpu_time_s=float(sum(p.cpu_seconds[k] for p in parts)),
        ))
    for row, value in zip(rows, _row_eocs(errors, h_list)):
        row["eoc"] = value

    echo = {
        "scheme": scheme.name,
        "alpha": scheme.alpha,
        "upper_step_bound": scheme.upper_step_bound,
        "solver": scheme.solver.model_dump(mode="json"),
        "problem": problem.name,
        "T": problem.horizon_T,
        "num_samples": M,
        "seed": seed,
        "reference": reference.describe(),
        "ci_method": CI_METHOD,
    }
    report = ErrorReport(
        scheme=scheme.name,
        rows=[ErrorRow(**row) for row in rows],
        num_samples=M,
        excluded_samples=excluded,
        valid=valid,
        config_echo=echo,
    )
    logger.info("%s: errors %s", scheme.name, ", ".join(f"{e:.4g}" for e in report.errors))
    return report


def strong_error(
    problem: SodeProblem,
    scheme: SchemeSpec,
    h_list: Sequence[float],
    M: int,
    seed: int,
    reference: Optional[ReferenceSpec] = None,
    T: Optional[float] = None,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> ErrorReport:
    return strong_errors(problem, [scheme], h_list, M, seed, reference, T, workers, chunk_size)[0]


def projection_rate(
    problem: SodeProblem,
    scheme: SchemeSpec,
    h: float,
    M: int,
    seed: int,
    fine_dt: Optional[float] = None,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> ProjectionRate:
    """Number and share of trajectories with at least one projection event."""
    if not scheme.kind.is_projected:
        raise ApplicabilityError(f"{scheme.name} does not project; projection rates need PEM or PMil")
    if M < 1:
        raise ParameterError(f"need at least 1 sample, got {M}")
    T = problem.horizon_T
    grid = StepGrid.uniform(h, T)
    fine_dt = h if fine_dt is None else fine_dt
    starts = list(range(0, M, chunk_size))

    def run_chunk(c: int) -> int:
        indices = range(starts[c], min(starts[c] + chunk_size, M))
        bundle = generate_paths(seed, indices, T, fine_dt, problem.num_drivers)
        record = integrate(problem, scheme, grid, bundle, on_overflow="mask", keep_states=False)
        return int(np.sum(np.asarray(record.projection_events) > 0))

    count = sum(run_blocks(run_chunk, len(starts), workers))
    return ProjectionRate(scheme=scheme.name, h=h, count=count, fraction=count / M)


def timing_sweep(
    problem: SodeProblem,
    schemes: Sequence[SchemeSpec],
    h_list: Sequence[float],
    M: int,
    seed: int,
    reference: Optional[ReferenceSpec] = None,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> List[TimingRow]:
    """Work-precision rows: CPU time of the scheme's integrations summed over chunks.

    Each chunk is timed with the CPU clock of the thread that ran it, so the
    total does not count other workers and excludes the reference computation.
    """
    rows = []
    for scheme in schemes:
        report = strong_error(problem, scheme, h_list, M, seed, reference, workers=workers, chunk_size=chunk_size)
        for row in report.rows:
            rows.append(TimingRow(
                scheme=scheme.name, h=row.h, rms_error=row.rms_error,
                cpu_seconds=row.cpu_time_s,
            ))
    return rows
