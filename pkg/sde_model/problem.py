"""SODE problem abstraction.

Coefficient functions are vectorized: `x` has shape ``(..., d)`` and `t` is a
float or an array broadcastable to ``x.shape[:-1]``. Drivers are indexed from
0 in code (the r-th Wiener process is ``r - 1``).
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Tuple

import numpy as np

from models import ParameterError

from .sampling import sample_ball

logger = logging.getLogger(__name__)

Drift = Callable[[object, np.ndarray], np.ndarray]
Diffusion = Callable[[object, np.ndarray, int], np.ndarray]
DerivProduct = Callable[[object, np.ndarray, int, int], np.ndarray]
Jacobian = Callable[[object, np.ndarray], np.ndarray]


class NoiseStructure(str, Enum):
    ADDITIVE = "additive"
    SCALAR = "scalar"
    DIAGONAL = "diagonal"
    COMMUTATIVE = "commutative"
    GENERAL = "general"


@dataclass(frozen=True)
class SodeProblem:
    """dX = f(t, X) dt + sum_r g^r(t, X) dW^r on [0, T] with regularity metadata.

    `diffusion_deriv_product(t, x, r1, r2)` is the closed form of
    ``(dg^{r1}/dx)(t, x) g^{r2}(t, x)``. `cubic_drift` holds ``(a3, a2, a1, a0)``
    when f(t, y) = a3 y^3 + a2 y^2 + a1 y + a0 for scalar problems, which
    enables the closed-form implicit solver.
    """
    dim: int
    num_drivers: int
    drift: Drift
    diffusion: Diffusion
    diffusion_deriv_product: DerivProduct
    noise_structure: NoiseStructure
    growth_rate_q: float
    monotonicity_L: float
    eta: float
    horizon_T: float
    initial_value: np.ndarray
    eta1: Optional[float] = None
    eta2: Optional[float] = None
    coercivity_C: Optional[float] = None
    drift_jacobian: Optional[Jacobian] = None
    cubic_drift: Optional[Tuple[float, float, float, float]] = None
    exact_solution: Optional[Callable] = None
    initial_sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None
    name: str = "custom"

    def __post_init__(self):
        if self.dim < 1 or self.num_drivers < 1:
            raise ParameterError("dim and num_drivers must be positive")
        if self.growth_rate_q < 2:
            raise ParameterError(f"growth rate q must be >= 2, got {self.growth_rate_q}")
        if self.monotonicity_L <= 0:
            raise ParameterError(f"monotonicity constant L must be > 0, got {self.monotonicity_L}")
        if self.eta <= 0.5:
            raise ParameterError(f"eta must be > 1/2, got {self.eta}")
        if self.eta1 is not None and self.eta1 <= 1:
            raise ParameterError(f"eta1 must be > 1, got {self.eta1}")
        if self.eta2 is not None and self.eta2 <= 0:
            raise ParameterError(f"eta2 must be > 0, got {self.eta2}")
        if self.horizon_T <= 0:
            raise ParameterError(f"horizon T must be > 0, got {self.horizon_T}")
        x0 = np.array(self.initial_value, dtype=float).reshape(self.dim)
        x0.setflags(write=False)
        object.__setattr__(self, "initial_value", x0)

    @property
    def coercivity_constant(self) -> float:
        return self.coercivity_C if self.coercivity_C is not None else self.monotonicity_L

    @property
    def default_alpha(self) -> float:
        return 1.0 / (2.0 * (self.growth_rate_q - 1.0))

    def diffusion_columns(self, t, x: np.ndarray) -> np.ndarray:
        """All g^r stacked on the last axis, shape ``(..., d, m)``."""
        return np.stack([self.diffusion(t, x, r) for r in range(self.num_drivers)], axis=-1)

    def drift_jac(self, t, x: np.ndarray, step: float = 1e-7) -> np.ndarray:
        """Drift Jacobian, shape ``(..., d, d)``; central differences when no closed form."""
        if self.drift_jacobian is not None:
            return self.drift_jacobian(t, x)
        cols = []
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = step
            cols.append((self.drift(t, x + e) - self.drift(t, x - e)) / (2.0 * step))
        return np.stack(cols, axis=-1)

    def initial_states(self, n: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        """X_0 for n samples, shape ``(n, d)``."""
        if self.initial_sampler is not None:
            if rng is None:
                raise ParameterError("a random initial value needs a generator")
            return np.asarray(self.initial_sampler(rng, n), dtype=float).reshape(n, self.dim)
        return np.broadcast_to(self.initial_value, (n, self.dim)).copy()


def check_deriv_product(
    problem: SodeProblem,
    num_points: int = 1000,
    seed: int = 0,
    radius: float = 5.0,
    fd_step: float = 1e-5,
) -> float:
    """Largest relative gap between g^{r1,r2} and a central difference of g^{r1} along g^{r2}.

    The gap is measured as ``|fd - exact| / max(1, |exact|)``.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    x = sample_ball(rng, num_points, problem.dim, radius)
    t = rng.uniform(0.0, problem.horizon_T, size=num_points)
    worst = 0.0
    for r1 in range(problem.num_drivers):
        for r2 in range(problem.num_drivers):
            v = problem.diffusion(t, x, r2)
            norm_v = np.linalg.norm(v, axis=-1, keepdims=True)
            direction = np.divide(v, norm_v, out=np.zeros_like(v), where=norm_v > 0)
            fd = (problem.diffusion(t, x + fd_step * direction, r1)
                  - problem.diffusion(t, x - fd_step * direction, r1)) / (2.0 * fd_step) * norm_v
            exact = problem.diffusion_deriv_product(t, x, r1, r2)
            gap = np.linalg.norm(fd - exact, axis=-1) / np.maximum(1.0, np.linalg.norm(exact, axis=-1))
            worst = max(worst, float(np.max(gap)))
    logger.debug("deriv product check for %s: worst relative gap %.3e", problem.name, worst)
    return worst


def commutativity_gap(problem: SodeProblem, t, x: np.ndarray) -> float:
    """Largest relative asymmetry ``|g^{r1,r2} - g^{r2,r1}| / max(1, |g^{r1,r2}|)`` at the given points."""
    worst = 0.0
    for r1 in range(problem.num_drivers):
        for r2 in range(r1 + 1, problem.num_drivers):
            a = problem.diffusion_deriv_product(t, x, r1, r2)
            b = problem.diffusion_deriv_product(t, x, r2, r1)
            gap = np.linalg.norm(a - b, axis=-1) / np.maximum(1.0, np.linalg.norm(a, axis=-1))
            worst = max(worst, float(np.max(gap)))
    return worst


def check_commutativity(
    problem: SodeProblem,
    num_points: int = 1000,
    seed: int = 0,
    radius: float = 5.0,
) -> float:
    """commutativity_gap over points sampled in the ball of the given radius."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    x = sample_ball(rng, num_points, problem.dim, radius)
    t = rng.uniform(0.0, problem.horizon_T, size=num_points)
    return commutativity_gap(problem, t, x)
