from typing import Optional

import numpy as np


class MilsteinError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(MilsteinError, ValueError):
    """An argument is outside its admissible range."""


class IndexRangeError(MilsteinError, IndexError):
    """A fine-grid index window is out of range."""


class UnsupportedNoiseError(MilsteinError):
    """Iterated integrals were requested for a noise structure we cannot simulate."""


class ApplicabilityError(MilsteinError):
    """An operation was applied to a problem or scheme it does not support."""


class GridError(MilsteinError):
    """A step grid or evaluation time does not line up with the Brownian fine grid."""


class ConvergenceError(MilsteinError):
    """The implicit solver hit its iteration limit above tolerance."""

    def __init__(self, message: str, last_iterate: np.ndarray, residual: float):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class StepOverflowError(MilsteinError):
    """A scheme produced NaN or Inf."""

    def __init__(self, message: str, step_index: int):
        super().__init__(message)
        self.step_index = step_index


class UndefinedEOCError(MilsteinError, ValueError):
    """An EOC pair contains a zero or negative error."""

    def __init__(self, message: str, pair_index: int):
        super().__init__(message)
        self.pair_index = pair_index


class ConfigError(MilsteinError):
    """An experiment config is inconsistent beyond what its schema checks."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field
