import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from models import ApplicabilityError, GridError, ParameterError
from noise import ALIGN_TOL, AnyPath, BrownianPath, auxiliary_rng, fine_index, iterated_integrals
from sde_model import NoiseStructure, SodeProblem, check_commutativity, commutativity_gap
from .implicit import SolverStats
from .one_step import BOUND_SLACK, step
from .spec import SchemeSpec

logger = logging.getLogger(__name__)

# Relative asymmetry of g^{r1,r2} tolerated before commutative increments are used.
COMMUTATIVITY_TOL = 1e-12
COMMUTATIVITY_POINTS = 64


@dataclass(frozen=True)
class StepGrid:
    """Step sizes h_1..h_N; grid points are t0 + partial sums."""
    steps: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        steps = np.asarray(self.steps, dtype=float).reshape(-1)
        if steps.size == 0 or np.any(steps <= 0):
            raise GridError("a step grid needs at least one step and all steps positive")
        steps.setflags(write=False)
        object.__setattr__(self, "steps", steps)

    @classmethod
    def uniform(cls, h: float, T: float, t0: float = 0.0) -> "StepGrid":
        n = int(round(T / h))
        if n < 1 or abs(n * h - T) > ALIGN_TOL * T:
            raise GridError(f"step {h} does not divide the horizon {T}")
        return cls(np.full(n, h), t0)

    @property
    def num_steps(self) -> int:
        return self.steps.size

    @property
    def horizon(self) -> float:
        return float(self.steps.sum())

    @property
    def max_step(self) -> float:
        return float(self.steps.max())

    @property
    def grid_points(self) -> np.ndarray:
        return self.t0 + np.concatenate([[0.0], np.cumsum(self.steps)])


@dataclass
class TrajectoryRecord:
    """States of one path (N+1, d) or a bundle (N+1, n, d).

    With ``keep_states=False`` only the final state is stored (leading axis 1).
    `projection_events` counts steps whose pre-projection state left the ball.
    """
    states: np.ndarray
    projection_events: Union[int, np.ndarray]
    solver_stats: SolverStats
    diverged: Union[bool, np.ndarray]
    projected_steps: Optional[np.ndarray] = None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def projected_trajectories(self) -> Union[bool, np.ndarray]:
        return np.asarray(self.projection_events) > 0


def _initial_state(problem: SodeProblem, path: AnyPath) -> np.ndarray:
    if problem.initial_sampler is None:
        if isinstance(path, BrownianPath):
            return np.array(problem.initial_value)
        return problem.initial_states(path.num_samples)
    if isinstance(path, BrownianPath):
        rng = auxiliary_rng(path.seed, path.sample_index, path.num_drivers)
        return problem.initial_states(1, rng)[0]
    return np.concatenate([
        problem.initial_states(1, auxiliary_rng(path.seed, idx, path.num_drivers))
        for idx in path.sample_indices
    ])


def _assert_commutative(problem: SodeProblem, x: np.ndarray, t: float) -> None:
    """Symmetry of g^{r1,r2} at the initial states and on points sampled around them."""
    radius = max(1.0, float(np.max(np.linalg.norm(x, axis=-1))))
    gap = max(
        commutativity_gap(problem, t, x),
        check_commutativity(problem, COMMUTATIVITY_POINTS, seed=0, radius=2.0 * radius),
    )
    if gap > COMMUTATIVITY_TOL:
        raise ApplicabilityError(
            f"g^(r1,r2) != g^(r2,r1) (relative gap {gap:.3e}): noise is not commutative"
        )


def fine_indices(grid: StepGrid, path: AnyPath) -> np.ndarray:
    return np.array([fine_index(path, t) for t in grid.grid_points])


def integrate(
    problem: SodeProblem,
    scheme: SchemeSpec,
    grid: StepGrid,
    path: AnyPath,
    x0: Optional[np.ndarray] = None,
    on_overflow: str = "raise",
    keep_states: bool = True,
) -> TrajectoryRecord:
    """Fold the scheme's one-step map over the grid, feeding increments coarsened from `path`.

    With ``on_overflow="mask"`` samples that turn non-finite are flagged in
    `diverged`, reset to 0 and carried along instead of raising.
    """
    if on_overflow not in ("raise", "mask"):
        raise ParameterError(f"on_overflow must be 'raise' or 'mask', got {on_overflow!r}")
    if grid.max_step > scheme.upper_step_bound * (1.0 + BOUND_SLACK):
        raise ParameterError(
            f"grid step {grid.max_step} exceeds the bound {scheme.upper_step_bound} required by {scheme.name}"
        )
    end = grid.t0 + grid.horizon
    if abs(end - problem.horizon_T) > ALIGN_TOL * problem.horizon_T:
        raise GridError(f"grid ends at {end}, problem horizon is {problem.horizon_T}")
    if path.num_drivers != problem.num_drivers:
        raise ParameterError(f"path has {path.num_drivers} drivers, problem needs {problem.num_drivers}")
    indices = fine_indices(grid, path)
    structure = problem.noise_structure

    x = np.array(_initial_state(problem, path) if x0 is None else x0, dtype=float)
    batch_shape = x.shape[:-1]
    if structure == NoiseStructure.COMMUTATIVE:
        _assert_commutative(problem, x, grid.t0)

    events = np.zeros(batch_shape, dtype=int)
    diverged = np.zeros(batch_shape, dtype=bool)
    stats = SolverStats()
    states = [x.copy()] if keep_states else None
    flags = [np.zeros(batch_shape, dtype=bool)] if keep_states else None
    times = grid.grid_points

    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(grid.num_steps):
            inc = iterated_integrals(path, indices[n], indices[n + 1], structure)
            x, meta = step(problem, scheme, x, times[n], inc,
                           step_index=n + 1, check_finite=on_overflow == "raise")
            events = events + meta.projected
            stats.merge(meta.solver)
            if on_overflow == "mask":
                bad = ~np.all(np.isfinite(x), axis=-1)
                if np.any(bad):
                    diverged = diverged | bad
                    x = np.where(bad[..., None], 0.0, x)
            if keep_states:
                states.append(x.copy())
                flags.append(np.asarray(meta.projected, dtype=bool))

    if np.any(diverged):
        logger.debug("%s: %d samples diverged", scheme.name, int(np.sum(diverged)))
    scalar = batch_shape == ()
    return TrajectoryRecord(
        states=np.stack(states) if keep_states else x[None, ...],
        projection_events=int(events) if scalar else events,
        solver_stats=stats,
        diverged=bool(diverged) if scalar else diverged,
        projected_steps=np.stack(flags) if keep_states else None,
    )


def write_trajectory_csv(
    record: TrajectoryRecord, grid: StepGrid, target: Union[str, Path], sample: Optional[int] = None
) -> None:
    """Debug export with columns t, x_1..x_d, projected_flag."""
    if record.projected_steps is None:
        raise ParameterError("trajectory export needs a record integrated with keep_states=True")
    states, flags = record.states, record.projected_steps
    if states.ndim == 3:
        if sample is None:
            raise ParameterError("pick a sample to export from a bundle record")
        states, flags = states[:, sample], flags[:, sample]
    frame = pd.DataFrame({"t": grid.grid_points})
    for k in range(states.shape[-1]):
        frame[f"x_{k + 1}"] = states[:, k]
    frame["projected_flag"] = flags.astype(int)
    frame.to_csv(target, index=False, float_format="%.17g")
