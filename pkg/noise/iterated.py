"""Iterated Ito integrals for noise structures where the Wiener increments suffice.

``iterated[..., r1, r2]`` holds the value used for I_{(r1, r2)} over the step.
For commutative noise only the sum I_{(r1,r2)} + I_{(r2,r1)} = dW^{r1} dW^{r2}
enters the schemes, so the off-diagonal entries use the symmetric split
dW^{r1} dW^{r2} / 2.
"""
from dataclasses import dataclass

import numpy as np

from models import UnsupportedNoiseError
from sde_model import NoiseStructure
from .brownian import AnyPath, coarsen


@dataclass(frozen=True)
class StepIncrements:
    """Stochastic increments of one step; `dw` is (..., m), `iterated` is (..., m, m)."""
    delta: float
    dw: np.ndarray
    iterated: np.ndarray
    structure: NoiseStructure


def step_increments(dw: np.ndarray, delta: float, structure: NoiseStructure) -> StepIncrements:
    dw = np.asarray(dw, dtype=float)
    m = dw.shape[-1]
    if structure == NoiseStructure.GENERAL:
        raise UnsupportedNoiseError(
            "iterated integrals for general non-commutative noise need a Levy-area "
            "approximation, which is not implemented"
        )
    iterated = np.zeros(dw.shape + (m,))
    if structure == NoiseStructure.ADDITIVE:
        return StepIncrements(delta, dw, iterated, structure)
    if structure == NoiseStructure.COMMUTATIVE:
        iterated = 0.5 * (dw[..., :, None] * dw[..., None, :])
    diag = np.arange(m)
    iterated[..., diag, diag] = 0.5 * (dw ** 2 - delta)
    return StepIncrements(delta, dw, iterated, structure)


def iterated_integrals(
    path: AnyPath, from_index: int, to_index: int, structure: NoiseStructure
) -> StepIncrements:
    """Increments of the window [from_index, to_index) of the fine grid."""
    dw = coarsen(path, from_index, to_index)
    return step_increments(dw, (to_index - from_index) * path.fine_dt, structure)
