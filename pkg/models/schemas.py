from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
from pydantic import BaseModel, Field


class ConditionId(str, Enum):
    GLOBAL_MONOTONICITY = "global_monotonicity"
    SSBM_MONOTONICITY = "ssbm_monotonicity"
    COERCIVITY = "coercivity"
    LOCAL_LIPSCHITZ_DRIFT_JACOBIAN = "local_lipschitz_drift_jacobian"
    LOCAL_LIPSCHITZ_DIFFUSION_JACOBIAN = "local_lipschitz_diffusion_jacobian"


# Ratio slack below which a sampled inequality counts as satisfied.
CONDITION_SLACK = 1e-9


class ConditionReport(BaseModel):
    """Outcome of a sampled check of one structural inequality.

    `passed` means no violation was found among the samples, never that the
    inequality was proved.
    """
    condition_id: ConditionId
    worst_ratio: float
    num_samples: int
    sample_region_radius: float
    passed: bool
    parameters: Dict[str, float] = Field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "no violation found" if self.passed else "violated"


class ErrorRow(BaseModel):
    """One step size of a strong-error table."""
    h: float
    rms_error: float = Field(ge=0.0, description="sqrt of the sample mean of |X_h(T) - X(T)|^2")
    ci_half_width: float = Field(ge=0.0, description="Half width of the 95% interval on rms_error")
    eoc: Optional[float] = Field(default=None, description="Rate against the previous row; None for the first")
    projection_count: int = Field(default=0, description="Trajectories projected at least once")
    wall_time_s: float = Field(default=0.0, description="Wall-clock seconds of the integrations, summed over chunks")
    cpu_time_s: float = Field(default=0.0, description="CPU seconds of the threads that ran those integrations")


class ErrorReport(BaseModel):
    """Strong errors of one scheme over a list of step sizes."""
    scheme: str
    rows: List[ErrorRow]
    num_samples: int
    excluded_samples: int = 0
    valid: bool = True
    config_echo: Dict[str, Any] = Field(default_factory=dict)

    @property
    def errors(self) -> List[float]:
        return [row.rms_error for row in self.rows]

    @property
    def eocs(self) -> List[Optional[float]]:
        return [row.eoc for row in self.rows]

    def to_frame(self, include_seconds: bool = True) -> pd.DataFrame:
        """Table in the column order h, error, eoc, projections, ci, seconds."""
        frame = pd.DataFrame({
            "h": [row.h for row in self.rows],
            "error": [row.rms_error for row in self.rows],
            "eoc": [row.eoc for row in self.rows],
            "projections": [row.projection_count for row in self.rows],
            "ci": [row.ci_half_width for row in self.rows],
        })
        if include_seconds:
            frame["seconds"] = [row.wall_time_s for row in self.rows]
        return frame

    def write_csv(self, path: Path, include_seconds: bool = True) -> None:
        self.to_frame(include_seconds).to_csv(path, index=False, float_format="%.10g")

    def write_json(self, path: Path) -> None:
        Path(path).write_text(self.model_dump_json(indent=2), encoding="utf-8")


class LocalErrorProbeReport(BaseModel):
    """Log-log slopes of the mean and fluctuation parts of the local error."""
    scheme: str
    deltas: List[float]
    mean_parts: List[float]
    fluct_parts: List[float]
    mean_slope: Optional[float]
    fluct_slope: Optional[float]
    num_samples: int
    inconclusive: bool = False


class ProjectionRate(BaseModel):
    """Share of trajectories that hit the projection at least once."""
    scheme: str
    h: float
    count: int = Field(description="Trajectories with at least one projected step")
    fraction: float


class TimingRow(BaseModel):
    """One point of a work-precision diagram."""
    scheme: str
    h: float
    rms_error: float
    cpu_seconds: float = Field(ge=0.0)


class ProbeResult(BaseModel):
    """Generic named probe outcome used by the probes preset."""
    name: str
    value: float
    lower: Optional[float] = None
    upper: Optional[float] = None
    passed: bool
