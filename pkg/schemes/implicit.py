"""Solvers for the implicit drift step y - delta f(t, y) = x.

For delta < 1/L the map y -> y - delta f(t, y) is a homeomorphism, so the
equation has exactly one solution for every x.
"""
import logging
from dataclasses import dataclass

import numpy as np

from models import ApplicabilityError, ConvergenceError, ParameterError
from sde_model import SodeProblem
from .spec import ImplicitSolver, SolverKind

logger = logging.getLogger(__name__)

MAX_HALVINGS = 30


@dataclass
class SolverStats:
    iterations: int = 0
    max_residual: float = 0.0

    def merge(self, other: "SolverStats") -> None:
        self.iterations += other.iterations
        self.max_residual = max(self.max_residual, other.max_residual)


def _rows(t, mask):
    return t[mask] if np.ndim(t) > 0 else t


def residual(problem: SodeProblem, t, delta: float, y: np.ndarray, x: np.ndarray) -> np.ndarray:
    return y - delta * problem.drift(t, y) - x


def _newton_direction(problem, t, delta, y, r):
    jac = np.eye(problem.dim) - delta * problem.drift_jac(t, y)
    return np.linalg.solve(jac, -r[..., None])[..., 0]


def _polish(problem, t, delta, x, y, res):
    """One more Newton correction, kept only where the residual does not grow.

    The stopping test bounds the residual; the error in y is that residual
    divided by 1 - delta f', which is small close to delta = 1/L.
    """
    if y.shape[0] == 0:
        return y, res
    trial = y + _newton_direction(problem, t, delta, y, residual(problem, t, delta, y, x))
    trial_res = np.linalg.norm(residual(problem, t, delta, trial, x), axis=-1)
    keep = trial_res <= res
    return np.where(keep[:, None], trial, y), np.where(keep, trial_res, res)


def _newton_full(problem, t, delta, x, solver, stats):
    y = x + delta * problem.drift(t, x)
    scale = solver.tolerance * (1.0 + np.linalg.norm(x, axis=-1))
    for it in range(solver.max_iters + 1):
        res = np.linalg.norm(residual(problem, t, delta, y, x), axis=-1)
        active = res > scale
        if not active.any():
            y, res = _polish(problem, t, delta, x, y, res)
            stats.iterations += y.shape[0]
            stats.max_residual = max(stats.max_residual, float(res.max(initial=0.0)))
            return y
        if it == solver.max_iters:
            worst = float(res.max())
            raise ConvergenceError(
                f"Newton did not reach tolerance after {solver.max_iters} iterations "
                f"(residual {worst:.3e})",
                last_iterate=y,
                residual=worst,
            )
        ta, ya, xa, ra = _rows(t, active), y[active], x[active], res[active]
        direction = _newton_direction(problem, ta, delta, ya, residual(problem, ta, delta, ya, xa))
        lam = np.ones(ya.shape[0])
        for _ in range(MAX_HALVINGS):
            trial = ya + lam[:, None] * direction
            worse = np.linalg.norm(residual(problem, ta, delta, trial, xa), axis=-1) >= ra
            if not worse.any():
                break
            lam = np.where(worse, 0.5 * lam, lam)
        y[active] = trial
        stats.iterations += int(active.sum())
    return y


def _newton_fixed(problem, t, delta, x, solver, stats):
    y = x + delta * problem.drift(t, x)
    for _ in range(solver.iterations):
        y = y + _newton_direction(problem, t, delta, y, residual(problem, t, delta, y, x))
    stats.iterations += solver.iterations * y.shape[0]
    res = np.linalg.norm(residual(problem, t, delta, y, x), axis=-1)
    stats.max_residual = max(stats.max_residual, float(res.max(initial=0.0)))
    return y


def _cardano(problem, delta, x, stats):
    if problem.dim != 1 or problem.cubic_drift is None:
        raise ApplicabilityError("Cardano's method needs a scalar problem with a cubic drift")
    a3, a2, a1, a0 = problem.cubic_drift
    lead = -delta * a3
    if lead == 0.0:
        raise ApplicabilityError("drift has no cubic term")
    # y^3 + b y^2 + c y + e = 0, then y = z - b/3 gives z^3 + p z + q = 0.
    b = -delta * a2 / lead
    c = (1.0 - delta * a1) / lead
    e = -(x[..., 0] + delta * a0) / lead
    p = c - b * b / 3.0
    q = 2.0 * b ** 3 / 27.0 - b * c / 3.0 + e
    half_q = 0.5 * q
    disc = half_q ** 2 + (p / 3.0) ** 3
    if np.any(disc < -1e-12 * (half_q ** 2 + abs(p / 3.0) ** 3)):
        raise ApplicabilityError("cubic has three real roots; delta must be below 1/L")
    sqrt_disc = np.sqrt(np.maximum(disc, 0.0))
    # Larger-magnitude cube root first; for p >= 0 the root z = u + v is
    # rewritten as -q / (u^2 - uv + v^2), which has no cancellation.
    u = -np.where(half_q >= 0.0, 1.0, -1.0) * np.cbrt(np.abs(half_q) + sqrt_disc)
    safe_u = np.where(u != 0.0, u, 1.0)
    v = -p / (3.0 * safe_u)
    denom = u * u - u * v + v * v
    z = np.where(p >= 0.0, -q / np.where(denom != 0.0, denom, 1.0), u + v)
    z = np.where(u != 0.0, z, 0.0)
    y = (z - b / 3.0)[..., None]
    res = np.abs(residual(problem, 0.0, delta, y, x)[..., 0])
    stats.max_residual = max(stats.max_residual, float(res.max(initial=0.0)))
    return y


def implicit_solve_with_stats(
    problem: SodeProblem, t, delta: float, x: np.ndarray, solver: ImplicitSolver
):
    """Solve y - delta f(t, y) = x for each row of x; returns (y, SolverStats)."""
    if delta * problem.monotonicity_L >= 1.0:
        raise ParameterError(
            f"implicit step needs delta < 1/L = {1.0 / problem.monotonicity_L:.6g}, got {delta}"
        )
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, problem.dim)
    if np.ndim(t) > 0:
        t = np.broadcast_to(t, x.shape[:-1]).reshape(-1)
    stats = SolverStats()
    if solver.kind == SolverKind.CARDANO:
        y = _cardano(problem, delta, flat, stats)
    elif solver.kind == SolverKind.NEWTON_FIXED:
        y = _newton_fixed(problem, t, delta, flat, solver, stats)
    else:
        y = _newton_full(problem, t, delta, flat, solver, stats)
    return y.reshape(x.shape), stats


def implicit_solve(
    problem: SodeProblem, t, delta: float, x: np.ndarray, solver: ImplicitSolver = ImplicitSolver()
) -> np.ndarray:
    """y = F_delta^{-1}(t, x) where F_delta(t, y) = y - delta f(t, y)."""
    return implicit_solve_with_stats(problem, t, delta, x, solver)[0]
