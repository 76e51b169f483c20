"""Reproducible sampling keyed by block index.

Samples live in fixed blocks of BLOCK_SIZE; block b draws from its own
substream ``SeedSequence(seed, spawn_key=(b,))``. Asking for more samples
only appends blocks, so every prefix is reproduced exactly, and sharding the
blocks over threads cannot change any value.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Tuple, TypeVar

import numpy as np

BLOCK_SIZE = 1024

T = TypeVar("T")


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def sample_ball(rng: np.random.Generator, n: int, dim: int, radius: float) -> np.ndarray:
    """n points uniform in the d-ball of the given radius."""
    direction = rng.standard_normal((n, dim))
    direction /= np.linalg.norm(direction, axis=-1, keepdims=True)
    radii = radius * rng.uniform(0.0, 1.0, size=(n, 1)) ** (1.0 / dim)
    return direction * radii


def block_sizes(num_samples: int, block_size: int = BLOCK_SIZE) -> List[int]:
    full, rest = divmod(num_samples, block_size)
    return [block_size] * full + ([rest] if rest else [])


def run_blocks(fn: Callable[[int], T], num_blocks: int, workers: int = 1) -> List[T]:
    """Apply fn to every block index, results in block order."""
    if workers <= 1 or num_blocks <= 1:
        return [fn(b) for b in range(num_blocks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(num_blocks)))


def sample_pairs_block(
    seed: int, block: int, size: int, dim: int, radius: float, horizon: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Point pairs and times for one block; the draws of a block do not depend on `size`."""
    rng = block_rng(seed, block)
    x1 = sample_ball(rng, BLOCK_SIZE, dim, radius)[:size]
    x2 = sample_ball(rng, BLOCK_SIZE, dim, radius)[:size]
    t = rng.uniform(0.0, horizon, size=BLOCK_SIZE)[:size]
    return x1, x2, t
