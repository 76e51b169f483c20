"""Gradient flow of the double-well potential with multiplicative noise."""
import numpy as np

from models import ParameterError
from sde_model import NoiseStructure, SodeProblem


def double_well_eta(sigma: float) -> float:
    """Largest eta with 2 eta sigma^2 <= 1.

    Falls back to 1 for sigma >= 1, where no eta > 1/2 qualifies, and for
    sigma = 0, where every eta does.
    """
    return 1.0 / (2.0 * sigma ** 2) if 0.0 < sigma ** 2 < 1.0 else 1.0


def make_double_well(sigma: float, x0: float = 2.0, T: float = 1.0) -> SodeProblem:
    """dX = X(1 - X^2) dt + sigma (1 - X^2) dW.

    f'(x) = 1 - 3x^2 <= 1 gives L = 1. The global monotonicity condition
    holds with eta = 1/(2 sigma^2), which exceeds 1/2 only for sigma < 1.
    """
    if sigma < 0:
        raise ParameterError(f"sigma must be >= 0, got {sigma}")

    def drift(t, x):
        return x * (1.0 - x ** 2)

    def diffusion(t, x, r):
        return sigma * (1.0 - x ** 2)

    def deriv_product(t, x, r1, r2):
        return -2.0 * sigma ** 2 * x * (1.0 - x ** 2)

    def jacobian(t, x):
        return (1.0 - 3.0 * x ** 2)[..., None]

    return SodeProblem(
        dim=1,
        num_drivers=1,
        drift=drift,
        diffusion=diffusion,
        diffusion_deriv_product=deriv_product,
        noise_structure=NoiseStructure.SCALAR,
        growth_rate_q=3.0,
        monotonicity_L=1.0,
        eta=double_well_eta(sigma),
        horizon_T=T,
        initial_value=np.array([x0]),
        drift_jacobian=jacobian,
        cubic_drift=(-1.0, 0.0, 1.0, 0.0),
        name=f"double_well(sigma={sigma:g})",
    )
