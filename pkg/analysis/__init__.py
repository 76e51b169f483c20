from .strong_error import (
    CI_METHOD,
    DEFAULT_CHUNK_SIZE,
    EXCLUSION_THRESHOLD,
    ReferenceSpec,
    eoc,
    rms_with_ci,
    strong_error,
    strong_errors,
    projection_rate,
    timing_sweep,
)
from .probes import (
    loglog_slope,
    local_error_probe,
    projection_probe,
    implicit_lipschitz_probe,
    implicit_growth_probe,
    split_step_stability_constant,
    split_step_stability_probe,
    implicit_order_probe,
    pmil_stability_ratios,
    pmil_stability_probe,
)

__all__ = [
    # Strong errors
    "CI_METHOD",
    "DEFAULT_CHUNK_SIZE",
    "EXCLUSION_THRESHOLD",
    "ReferenceSpec",
    "eoc",
    "rms_with_ci",
    "strong_error",
    "strong_errors",
    "projection_rate",
    "timing_sweep",
    # Probes
    "loglog_slope",
    "local_error_probe",
    "projection_probe",
    "implicit_lipschitz_probe",
    "implicit_growth_probe",
    "split_step_stability_constant",
    "split_step_stability_probe",
    "implicit_order_probe",
    "pmil_stability_ratios",
    "pmil_stability_probe",
]
