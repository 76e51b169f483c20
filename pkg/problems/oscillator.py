"""Stochastic oscillator with commutative noise in Cartesian coordinates.

Polar form: dr = r(mu - r^2) dt + sigma1 r dW^1 and dphi = theta dt + sigma2 dW^2.
Ito's formula adds the correction -sigma2^2 x / 2 to the Cartesian drift.
"""
import math

import numpy as np
from pydantic import BaseModel, ConfigDict

from noise import AnyPath, fine_index, wiener_values
from models import GridError
from sde_model import NoiseStructure, SodeProblem

# Weights in the SSBM monotonicity condition; L is derived from them.
OSCILLATOR_ETA1 = 2.0
OSCILLATOR_ETA2 = 1.0


class OscillatorParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    mu: float = 0.4
    theta: float = 1.0
    sigma1: float = 0.5
    sigma2: float = 0.6
    r0: float = 1.97
    phi0: float = math.pi / 4

    @property
    def initial_value(self) -> np.ndarray:
        return np.array([self.r0 * math.cos(self.phi0), self.r0 * math.sin(self.phi0)])


def _rotate(x: np.ndarray) -> np.ndarray:
    return np.stack([-x[..., 1], x[..., 0]], axis=-1)


def polar_angle(x: np.ndarray) -> np.ndarray:
    """arg(x1 + i x2) on the branch (-pi, pi]."""
    phi = np.arctan2(x[..., 1], x[..., 0])
    return np.where(phi == -np.pi, np.pi, phi)


def oscillator_constants(params: OscillatorParams):
    """(eta, eta1, eta2, L) such that both monotonicity conditions hold."""
    s = params.sigma1 ** 2 + params.sigma2 ** 2
    base = params.mu - 0.5 * params.sigma2 ** 2
    L = base + OSCILLATOR_ETA1 * s + OSCILLATOR_ETA2 * s ** 2
    return 1.0, OSCILLATOR_ETA1, OSCILLATOR_ETA2, max(L, 1e-12)


def make_oscillator(
    mu: float = 0.4,
    theta: float = 1.0,
    sigma1: float = 0.5,
    sigma2: float = 0.6,
    r0: float = 1.97,
    phi0: float = math.pi / 4,
    T: float = 1.0,
) -> SodeProblem:
    params = OscillatorParams(mu=mu, theta=theta, sigma1=sigma1, sigma2=sigma2, r0=r0, phi0=phi0)
    half_s2 = 0.5 * sigma2 ** 2
    eta, eta1, eta2, L = oscillator_constants(params)

    def drift(t, x):
        r2 = np.sum(x ** 2, axis=-1, keepdims=True)
        return (mu - r2 - half_s2) * x + theta * _rotate(x)

    def jacobian(t, x):
        r2 = np.sum(x ** 2, axis=-1)[..., None, None]
        rot = np.array([[0.0, -1.0], [1.0, 0.0]])
        return (mu - r2 - half_s2) * np.eye(2) + theta * rot - 2.0 * x[..., :, None] * x[..., None, :]

    def diffusion(t, x, r):
        return sigma1 * x if r == 0 else sigma2 * _rotate(x)

    def deriv_product(t, x, r1, r2):
        if r1 == r2 == 0:
            return sigma1 ** 2 * x
        if r1 == r2 == 1:
            return -(sigma2 ** 2) * x
        return sigma1 * sigma2 * _rotate(x)

    return SodeProblem(
        dim=2,
        num_drivers=2,
        drift=drift,
        diffusion=diffusion,
        diffusion_deriv_product=deriv_product,
        noise_structure=NoiseStructure.COMMUTATIVE,
        growth_rate_q=3.0,
        monotonicity_L=L,
        eta=eta,
        eta1=eta1,
        eta2=eta2,
        horizon_T=T,
        initial_value=params.initial_value,
        drift_jacobian=jacobian,
        exact_solution=lambda path, t: exact_oscillator(path, t, path.fine_dt, params),
        name=f"oscillator(mu={mu:g}, theta={theta:g}, sigma1={sigma1:g}, sigma2={sigma2:g})",
    )


def exact_oscillator(path: AnyPath, t: float, riemann_dt: float, params: OscillatorParams) -> np.ndarray:
    """Closed-form solution at time t on the given path.

    The time integral in the radial part is a left-endpoint Riemann sum with
    step riemann_dt, which must be a multiple of the path's fine step.
    """
    stride = int(round(riemann_dt / path.fine_dt))
    if stride < 1 or abs(stride * path.fine_dt - riemann_dt) > 1e-12 * riemann_dt:
        raise GridError(f"riemann_dt={riemann_dt} is not a multiple of fine_dt={path.fine_dt}")
    end = fine_index(path, t)
    if end % stride:
        raise GridError(f"time {t} is not on the Riemann grid of step {riemann_dt}")
    w = wiener_values(path)
    w1_t, w2_t = w[..., end, 0], w[..., end, 1]
    mu, s1 = params.mu, params.sigma1

    nodes = np.arange(0, end, stride)
    s = nodes * path.fine_dt
    integrand = np.exp((2.0 * mu - s1 ** 2) * s + 2.0 * s1 * w[..., nodes, 0])
    integral = riemann_dt * np.sum(integrand, axis=-1)

    radius = (params.r0 * np.exp((mu - 0.5 * s1 ** 2) * t + s1 * w1_t)
              / np.sqrt(1.0 + 2.0 * params.r0 ** 2 * integral))
    phi = params.phi0 + params.theta * t + params.sigma2 * w2_t
    return np.stack([radius * np.cos(phi), radius * np.sin(phi)], axis=-1)
