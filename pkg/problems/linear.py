"""Linear problems with closed-form solutions, used as oracles for the schemes."""
import numpy as np
from pydantic import BaseModel, ConfigDict

from noise import AnyPath, fine_index, wiener_values
from sde_model import NoiseStructure, SodeProblem

GBM_ETA1 = 2.0
GBM_ETA2 = 1.0
MIN_L = 1e-3


class GbmParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    mu: float = 1.0
    sigma: float = 0.5
    x0: float = 1.0


def exact_gbm(path: AnyPath, t: float, params: GbmParams) -> np.ndarray:
    """X0 exp((mu - sigma^2/2) t + sigma W(t)), shape (..., 1)."""
    w = wiener_values(path)[..., fine_index(path, t), 0]
    value = params.x0 * np.exp((params.mu - 0.5 * params.sigma ** 2) * t + params.sigma * w)
    return value[..., None]


def make_gbm(mu: float = 1.0, sigma: float = 0.5, x0: float = 1.0, T: float = 1.0) -> SodeProblem:
    """dX = mu X dt + sigma X dW with globally Lipschitz coefficients, so q = 2."""
    params = GbmParams(mu=mu, sigma=sigma, x0=x0)
    L = max(mu + GBM_ETA1 * sigma ** 2 + GBM_ETA2 * sigma ** 4, MIN_L)

    return SodeProblem(
        dim=1,
        num_drivers=1,
        drift=lambda t, x: mu * x,
        diffusion=lambda t, x, r: sigma * x,
        diffusion_deriv_product=lambda t, x, r1, r2: sigma ** 2 * x,
        noise_structure=NoiseStructure.SCALAR,
        growth_rate_q=2.0,
        monotonicity_L=L,
        eta=1.0,
        eta1=GBM_ETA1,
        eta2=GBM_ETA2,
        horizon_T=T,
        initial_value=np.array([x0]),
        drift_jacobian=lambda t, x: np.full(x.shape + (1,), mu),
        cubic_drift=None,
        exact_solution=lambda path, t: exact_gbm(path, t, params),
        name=f"gbm(mu={mu:g}, sigma={sigma:g})",
    )


def make_additive_linear(lam: float = 1.0, sigma: float = 0.5, x0: float = 1.0, T: float = 1.0) -> SodeProblem:
    """Ornstein-Uhlenbeck type dX = -lam X dt + sigma dW; all Milstein corrections vanish."""
    return SodeProblem(
        dim=1,
        num_drivers=1,
        drift=lambda t, x: -lam * x,
        diffusion=lambda t, x, r: np.full_like(x, sigma),
        diffusion_deriv_product=lambda t, x, r1, r2: np.zeros_like(x),
        noise_structure=NoiseStructure.ADDITIVE,
        growth_rate_q=2.0,
        monotonicity_L=max(-lam, 1.0),
        eta=1.0,
        horizon_T=T,
        initial_value=np.array([x0]),
        drift_jacobian=lambda t, x: np.full(x.shape + (1,), -lam),
        name=f"additive_linear(lam={lam:g}, sigma={sigma:g})",
    )
