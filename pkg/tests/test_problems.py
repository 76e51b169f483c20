import math

import numpy as np
import pytest
from pydantic import ValidationError

from models import GridError, ParameterError
from noise import generate_path, wiener_values
from problems import (
    OscillatorParams,
    double_well_eta,
    GbmParams,
    exact_gbm,
    exact_oscillator,
    make_double_well,
    make_gbm,
    make_oscillator,
    polar_angle,
    problem_from_dict,
    problem_from_json,
)


def test_double_well_coefficients(double_well):
    x = np.array([2.0])
    assert double_well.drift(0.0, x)[0] == pytest.approx(-6.0)
    assert double_well.diffusion(0.0, x, 0)[0] == pytest.approx(-0.9)
    assert double_well.diffusion_deriv_product(0.0, x, 0, 0)[0] == pytest.approx(1.08)
    assert double_well.drift_jac(0.0, x)[0, 0] == pytest.approx(-11.0)
    assert double_well.monotonicity_L == 1.0
    assert double_well.growth_rate_q == 3.0


def test_double_well_eta():
    assert double_well_eta(0.3) == pytest.approx(1.0 / 0.18)
    assert double_well_eta(1.0) == 1.0
    assert double_well_eta(0.0) == 1.0
    with pytest.raises(ParameterError):
        make_double_well(-0.1)


def test_oscillator_coefficients(oscillator):
    x = np.array([1.0, 0.0])
    np.testing.assert_allclose(oscillator.drift(0.0, x), [-0.78, 1.0])
    np.testing.assert_allclose(oscillator.diffusion(0.0, x, 0), [0.5, 0.0])
    np.testing.assert_allclose(oscillator.diffusion(0.0, x, 1), [0.0, 0.6])
    np.testing.assert_allclose(oscillator.diffusion_deriv_product(0.0, x, 1, 1), [-0.36, 0.0])
    assert oscillator.monotonicity_L == pytest.approx(1.8121)
    assert (oscillator.eta, oscillator.eta1, oscillator.eta2) == (1.0, 2.0, 1.0)
    np.testing.assert_allclose(oscillator.initial_value, 1.97 * np.array([1.0, 1.0]) / math.sqrt(2.0))


def test_polar_angle_branch():
    assert polar_angle(np.array([-1.0, 0.0])) == pytest.approx(math.pi)
    assert polar_angle(np.array([-1.0, -0.0])) == pytest.approx(math.pi)
    assert polar_angle(np.array([0.0, -1.0])) == pytest.approx(-math.pi / 2)


def test_exact_oscillator_at_time_zero(oscillator):
    path = generate_path(0, 0, 1.0, 2.0 ** -6, 2)
    np.testing.assert_allclose(oscillator.exact_solution(path, 0.0), oscillator.initial_value)


def test_exact_oscillator_radius_without_radial_noise():
    # mu = 0 and sigma1 = 0 give r(t) = r0 / sqrt(1 + 2 r0^2 t).
    problem = make_oscillator(mu=0.0, sigma1=0.0, r0=1.0, T=2.0)
    path = generate_path(3, 0, 2.0, 2.0 ** -6, 2)
    x = problem.exact_solution(path, 1.5)
    assert np.linalg.norm(x) == pytest.approx(0.5, rel=1e-12)


def test_exact_oscillator_radius_stays_positive(oscillator):
    for seed in range(5):
        path = generate_path(seed, 0, 1.0, 2.0 ** -6, 2)
        radii = [np.linalg.norm(oscillator.exact_solution(path, k * 2.0 ** -6)) for k in range(65)]
        assert min(radii) > 0.0


def test_exact_oscillator_riemann_sum_converges():
    mu, t = 0.3, 1.0
    problem = make_oscillator(mu=mu, sigma1=0.0, r0=1.0)
    path = generate_path(3, 0, 1.0, 2.0 ** -10, 2)
    integral = (math.exp(2.0 * mu * t) - 1.0) / (2.0 * mu)
    expected = math.exp(mu * t) / math.sqrt(1.0 + 2.0 * integral)
    assert np.linalg.norm(problem.exact_solution(path, t)) == pytest.approx(expected, rel=1e-3)


def test_exact_oscillator_rejects_misaligned_riemann_step():
    params = OscillatorParams()
    path = generate_path(0, 0, 1.0, 2.0 ** -6, 2)
    with pytest.raises(GridError):
        exact_oscillator(path, 1.0, 1.5 * 2.0 ** -6, params)
    with pytest.raises(GridError):
        exact_oscillator(path, 1.0, 3.0 * 2.0 ** -6, params)


def test_exact_gbm_without_noise():
    problem = make_gbm(mu=0.5, sigma=0.0, x0=2.0)
    path = generate_path(0, 0, 1.0, 2.0 ** -4, 1)
    assert problem.exact_solution(path, 1.0)[0] == pytest.approx(2.0 * math.exp(0.5))
    assert problem.exact_solution(path, 0.0)[0] == 2.0


def test_exact_gbm_follows_the_path():
    params = GbmParams(mu=0.5, sigma=0.8, x0=1.5)
    path = generate_path(3, 0, 1.0, 2.0 ** -6, 1)
    w = wiener_values(path)[32, 0]
    expected = 1.5 * math.exp((0.5 - 0.32) * 0.5 + 0.8 * w)
    assert exact_gbm(path, 0.5, params)[0] == pytest.approx(expected, rel=1e-14)


def test_gbm_constants(gbm):
    assert gbm.growth_rate_q == 2.0
    assert gbm.monotonicity_L == pytest.approx(0.5 + 2.0 * 0.64 + 0.8 ** 4)
    assert gbm.default_alpha == pytest.approx(0.5)


def test_descriptors_build_problems():
    descriptor = problem_from_dict({"family": "double_well", "sigma": 1.0, "x0": 2.0})
    problem = descriptor.build()
    assert problem.eta == 1.0
    assert problem.horizon_T == 1.0

    additive = problem_from_json('{"family": "additive_linear", "lambda": 2.0, "T": 0.5}')
    assert additive.lam == 2.0
    assert additive.build().horizon_T == 0.5

    oscillator = problem_from_dict({"family": "stochastic_oscillator"}).build()
    assert oscillator.monotonicity_L == pytest.approx(1.8121)


def test_descriptors_reject_bad_input():
    with pytest.raises(ValidationError):
        problem_from_dict({"family": "lorenz"})
    with pytest.raises(ValidationError):
        problem_from_dict({"family": "double_well", "sigma": 0.3, "gamma": 1.0})
    with pytest.raises(ValidationError):
        problem_from_dict({"family": "geometric_brownian", "T": 0.0})
    with pytest.raises(ValidationError):
        problem_from_dict({"family": "double_well", "sigma": -1.0})
