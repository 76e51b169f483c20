from .brownian import (
    RNG_ALGORITHM,
    ALIGN_TOL,
    BrownianPath,
    PathBundle,
    AnyPath,
    generate_path,
    generate_paths,
    coarsen,
    fine_index,
    wiener_values,
    auxiliary_rng,
    num_fine_steps_for,
    dump_path,
    load_path,
)
from .iterated import StepIncrements, step_increments, iterated_integrals

__all__ = [
    # Paths
    "RNG_ALGORITHM",
    "ALIGN_TOL",
    "BrownianPath",
    "PathBundle",
    "AnyPath",
    "generate_path",
    "generate_paths",
    "coarsen",
    "fine_index",
    "wiener_values",
    "auxiliary_rng",
    "num_fine_steps_for",
    "dump_path",
    "load_path",
    # Increments
    "StepIncrements",
    "step_increments",
    "iterated_integrals",
]
