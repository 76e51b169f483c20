from .errors import (
    MilsteinError,
    ParameterError,
    IndexRangeError,
    UnsupportedNoiseError,
    ApplicabilityError,
    GridError,
    ConvergenceError,
    StepOverflowError,
    UndefinedEOCError,
    ConfigError,
)
from .schemas import (
    CONDITION_SLACK,
    ConditionId,
    ConditionReport,
    ErrorRow,
    ErrorReport,
    LocalErrorProbeReport,
    ProjectionRate,
    TimingRow,
    ProbeResult,
)

__all__ = [
    # Errors
    "MilsteinError",
    "ParameterError",
    "IndexRangeError",
    "UnsupportedNoiseError",
    "ApplicabilityError",
    "GridError",
    "ConvergenceError",
    "StepOverflowError",
    "UndefinedEOCError",
    "ConfigError",
    # Reports
    "CONDITION_SLACK",
    "ConditionId",
    "ConditionReport",
    "ErrorRow",
    "ErrorReport",
    "LocalErrorProbeReport",
    "ProjectionRate",
    "TimingRow",
    "ProbeResult",
]
