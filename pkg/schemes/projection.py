from typing import Tuple

import numpy as np


def project_with_flag(x: np.ndarray, delta: float, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    """Projection onto the ball of radius delta^-alpha plus a per-sample 'was outside' flag."""
    x = np.asarray(x, dtype=float)
    radius = delta ** (-alpha)
    norm = np.linalg.norm(x, axis=-1, keepdims=True)
    outside = norm > radius
    scale = np.divide(radius, norm, out=np.ones_like(norm), where=outside)
    # Points inside the ball are returned bit-for-bit.
    return np.where(outside, x * scale, x), outside[..., 0]


def project_to_ball(x: np.ndarray, delta: float, alpha: float) -> np.ndarray:
    """min(1, delta^-alpha |x|^-1) x, with 0 mapped to 0."""
    return project_with_flag(x, delta, alpha)[0]
