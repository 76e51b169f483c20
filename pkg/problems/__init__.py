from .double_well import make_double_well, double_well_eta
from .oscillator import (
    OscillatorParams,
    make_oscillator,
    exact_oscillator,
    oscillator_constants,
    polar_angle,
)
from .linear import GbmParams, make_gbm, exact_gbm, make_additive_linear
from .descriptors import (
    ParametricProblem,
    DoubleWellDescriptor,
    OscillatorDescriptor,
    GbmDescriptor,
    AdditiveLinearDescriptor,
    problem_from_dict,
    problem_from_json,
)

__all__ = [
    # Experiment problems
    "make_double_well",
    "double_well_eta",
    "OscillatorParams",
    "make_oscillator",
    "exact_oscillator",
    "oscillator_constants",
    "polar_angle",
    # Oracle problems
    "GbmParams",
    "make_gbm",
    "exact_gbm",
    "make_additive_linear",
    # Descriptors
    "ParametricProblem",
    "DoubleWellDescriptor",
    "OscillatorDescriptor",
    "GbmDescriptor",
    "AdditiveLinearDescriptor",
    "problem_from_dict",
    "problem_from_json",
]
