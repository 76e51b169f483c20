"""Wiener paths stored as fine-grid increments.

Every (seed, sample_index, driver) triple owns an independent PCG64 substream,
``SeedSequence(seed, spawn_key=(sample_index, driver))``, and normal variates
come from numpy's ziggurat sampler. A path is therefore a pure function of its
key, whichever worker generates it.
"""
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np

from models import GridError, IndexRangeError, ParameterError

logger = logging.getLogger(__name__)

RNG_ALGORITHM = "numpy.PCG64/SeedSequence(seed, spawn_key=(sample_index, driver))/ziggurat"

# Relative tolerance for grid alignment checks.
ALIGN_TOL = 1e-12

_HEADER = struct.Struct("<QqqdQ")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BrownianPath:
    """One sample of m Wiener processes; `increments` has shape (num_fine_steps, m)."""
    seed: int
    sample_index: int
    fine_dt: float
    increments: np.ndarray

    @property
    def num_drivers(self) -> int:
        return self.increments.shape[-1]

    @property
    def num_fine_steps(self) -> int:
        return self.increments.shape[-2]

    @property
    def horizon_T(self) -> float:
        return self.fine_dt * self.num_fine_steps


@dataclass(frozen=True)
class PathBundle:
    """Paths of several samples on one fine grid; `increments` has shape (n, num_fine_steps, m)."""
    seed: int
    sample_indices: Tuple[int, ...]
    fine_dt: float
    increments: np.ndarray

    @property
    def num_drivers(self) -> int:
        return self.increments.shape[-1]

    @property
    def num_fine_steps(self) -> int:
        return self.increments.shape[-2]

    @property
    def num_samples(self) -> int:
        return self.increments.shape[0]

    @property
    def horizon_T(self) -> float:
        return self.fine_dt * self.num_fine_steps

    def path(self, i: int) -> BrownianPath:
        return BrownianPath(self.seed, self.sample_indices[i], self.fine_dt, self.increments[i])


AnyPath = Union[BrownianPath, PathBundle]


def num_fine_steps_for(T: float, fine_dt: float) -> int:
    if fine_dt <= 0:
        raise ParameterError(f"fine_dt must be > 0, got {fine_dt}")
    if T <= 0:
        raise ParameterError(f"T must be > 0, got {T}")
    n = int(round(T / fine_dt))
    if n < 1 or abs(n * fine_dt - T) > ALIGN_TOL * T:
        raise ParameterError(f"fine_dt={fine_dt} does not divide T={T}")
    return n


def driver_rng(seed: int, sample_index: int, driver: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(sample_index, driver)))


def auxiliary_rng(seed: int, sample_index: int, num_drivers: int) -> np.random.Generator:
    """Substream after the driver streams, used for random initial values."""
    return driver_rng(seed, sample_index, num_drivers)


def _draw(seed: int, sample_index: int, n: int, m: int, fine_dt: float) -> np.ndarray:
    scale = np.sqrt(fine_dt)
    out = np.empty((n, m))
    for r in range(m):
        out[:, r] = driver_rng(seed, sample_index, r).standard_normal(n) * scale
    return out


def generate_path(seed: int, sample_index: int, T: float, fine_dt: float, m: int) -> BrownianPath:
    """Wiener increments N(0, fine_dt) on the grid k * fine_dt, k < T / fine_dt."""
    if m < 1:
        raise ParameterError(f"number of drivers must be >= 1, got {m}")
    n = num_fine_steps_for(T, fine_dt)
    return BrownianPath(seed, sample_index, fine_dt, _readonly(_draw(seed, sample_index, n, m, fine_dt)))


def generate_paths(
    seed: int, sample_indices: Sequence[int], T: float, fine_dt: float, m: int
) -> PathBundle:
    """Bundle whose i-th path equals ``generate_path(seed, sample_indices[i], ...)``."""
    if m < 1:
        raise ParameterError(f"number of drivers must be >= 1, got {m}")
    n = num_fine_steps_for(T, fine_dt)
    indices = tuple(int(i) for i in sample_indices)
    out = np.empty((len(indices), n, m))
    for k, idx in enumerate(indices):
        out[k] = _draw(seed, idx, n, m, fine_dt)
    return PathBundle(seed, indices, fine_dt, _readonly(out))


def coarsen(path: AnyPath, from_index: int, to_index: int) -> np.ndarray:
    """Per-driver sum of the fine increments in [from_index, to_index)."""
    if not 0 <= from_index < to_index <= path.num_fine_steps:
        raise IndexRangeError(
            f"window [{from_index}, {to_index}) outside [0, {path.num_fine_steps}]"
        )
    return path.increments[..., from_index:to_index, :].sum(axis=-2)


def fine_index(path: AnyPath, t: float) -> int:
    """Fine-grid index of time t; raises GridError when t is not a grid point."""
    k = int(round(t / path.fine_dt))
    if abs(k * path.fine_dt - t) > ALIGN_TOL * max(1.0, path.horizon_T) or not 0 <= k <= path.num_fine_steps:
        raise GridError(f"time {t} is not on the fine grid of step {path.fine_dt}")
    return k


def wiener_values(path: AnyPath) -> np.ndarray:
    """W at all fine grid points, shape (..., num_fine_steps + 1, m), W(0) = 0."""
    cumulative = np.cumsum(path.increments, axis=-2)
    zeros = np.zeros(cumulative.shape[:-2] + (1, cumulative.shape[-1]))
    return np.concatenate([zeros, cumulative], axis=-2)


def dump_path(path: BrownianPath, target: Union[str, Path]) -> None:
    """Binary replay dump: header (seed, sample_index, m, fine_dt, count), then little-endian float64."""
    header = _HEADER.pack(path.seed, path.sample_index, path.num_drivers, path.fine_dt, path.num_fine_steps)
    body = np.ascontiguousarray(path.increments, dtype="<f8").tobytes()
    Path(target).write_bytes(header + body)
    logger.debug("dumped path (seed=%d, sample=%d) to %s", path.seed, path.sample_index, target)


def load_path(source: Union[str, Path]) -> BrownianPath:
    raw = Path(source).read_bytes()
    seed, sample_index, m, fine_dt, count = _HEADER.unpack_from(raw)
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).astype(float)
    if data.size != count * m:
        raise ParameterError(f"dump holds {data.size} values, header announces {count * m}")
    return BrownianPath(seed, sample_index, fine_dt, _readonly(data.reshape(count, m)))
