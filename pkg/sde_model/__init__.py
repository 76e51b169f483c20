from .problem import (
    NoiseStructure,
    SodeProblem,
    check_deriv_product,
    check_commutativity,
    commutativity_gap,
)
from .sampling import (
    BLOCK_SIZE,
    block_rng,
    sample_ball,
    run_blocks,
)
from .conditions import (
    verify_monotonicity,
    verify_ssbm_monotonicity,
    verify_coercivity,
    verify_jacobian_lipschitz,
    scan_condition,
    monotonicity_ratios,
    coercivity_ratios,
)

__all__ = [
    # Problem
    "NoiseStructure",
    "SodeProblem",
    "check_deriv_product",
    "check_commutativity",
    "commutativity_gap",
    # Sampling
    "BLOCK_SIZE",
    "block_rng",
    "sample_ball",
    "run_blocks",
    # Conditions
    "verify_monotonicity",
    "verify_ssbm_monotonicity",
    "verify_coercivity",
    "verify_jacobian_lipschitz",
    "scan_condition",
    "monotonicity_ratios",
    "coercivity_ratios",
]
