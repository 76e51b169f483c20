from dataclasses import replace

import numpy as np
import pandas as pd
import pytest
from scipy.optimize import bisect

from models import (
    ApplicabilityError,
    ConvergenceError,
    GridError,
    ParameterError,
    StepOverflowError,
    UnsupportedNoiseError,
)
from noise import generate_path, generate_paths, iterated_integrals, step_increments
from problems import make_double_well
from schemes import (
    ImplicitSolver,
    SchemeKind,
    SchemeSpec,
    SolverKind,
    StepGrid,
    implicit_solve,
    implicit_solve_with_stats,
    integrate,
    make_scheme,
    project_to_ball,
    project_with_flag,
    step,
    write_trajectory_csv,
)
from sde_model import NoiseStructure, SodeProblem, commutativity_gap

CARDANO = ImplicitSolver(kind=SolverKind.CARDANO)


def _bundle(problem, n=32, fine_dt=2.0 ** -6, seed=11):
    return generate_paths(seed, range(n), problem.horizon_T, fine_dt, problem.num_drivers)


# Projection

def test_projection_keeps_points_inside_the_ball():
    x = np.array([[1.0, 1.0], [0.0, 0.0]])
    y, flags = project_with_flag(x, 2.0 ** -4, 0.25)
    assert np.array_equal(y, x)
    assert not flags.any()


def test_projection_scales_outside_points():
    y, flags = project_with_flag(np.array([[3.0, 4.0]]), 2.0 ** -4, 0.25)
    np.testing.assert_allclose(y, [[1.2, 1.6]])
    assert flags.tolist() == [True]
    np.testing.assert_allclose(np.linalg.norm(project_to_ball(np.array([[-30.0]]), 0.01, 0.5)), 10.0)


# Scheme settings

def test_make_scheme_defaults(double_well, oscillator):
    pmil = make_scheme("pmil", double_well)
    assert pmil.alpha == pytest.approx(0.25)
    assert pmil.upper_step_bound == 1.0
    ssbm = make_scheme(SchemeKind.SPLIT_STEP_BACKWARD_MILSTEIN, oscillator)
    assert ssbm.upper_step_bound < 1.0 / oscillator.monotonicity_L
    assert make_scheme("em", double_well).alpha is None


def test_scheme_settings_are_validated(double_well):
    with pytest.raises(ValueError):
        SchemeSpec(kind=SchemeKind.PROJECTED_EM, upper_step_bound=1.0)
    with pytest.raises(ValueError):
        SchemeSpec(kind=SchemeKind.PROJECTED_MILSTEIN, alpha=0.25, upper_step_bound=2.0)
    with pytest.raises(ParameterError):
        make_scheme("ssbm", double_well, upper_step_bound=1.0)


# Implicit solver

@pytest.mark.parametrize("solver", [ImplicitSolver(), CARDANO])
def test_implicit_solve_fixed_points(double_well, solver):
    assert implicit_solve(double_well, 0.0, 0.5, np.array([[0.0]]), solver)[0, 0] == 0.0
    assert implicit_solve(double_well, 0.0, 0.5, np.array([[1.0]]), solver)[0, 0] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("solver", [ImplicitSolver(), CARDANO])
def test_implicit_solve_matches_bracketing_root(double_well, solver):
    # y - 0.25 y (1 - y^2) = 0.3  <=>  0.75 y + 0.25 y^3 = 0.3
    root = bisect(lambda y: 0.75 * y + 0.25 * y ** 3 - 0.3, 0.0, 1.0, xtol=1e-15)
    y = implicit_solve(double_well, 0.0, 0.25, np.array([[0.3]]), solver)
    assert y[0, 0] == pytest.approx(root, abs=1e-12)


def test_newton_and_cardano_agree(double_well):
    rng = np.random.default_rng(5)
    x = rng.uniform(-10.0, 10.0, size=(10000, 1))
    for delta in (0.01, 0.1, 0.5, 0.75, 0.9):
        newton = implicit_solve(double_well, 0.0, delta, x)
        cardano = implicit_solve(double_well, 0.0, delta, x, CARDANO)
        assert np.all(np.abs(newton - cardano) <= 1e-12 * (1.0 + np.abs(x)))


def test_newton_residual_on_random_inputs(double_well):
    rng = np.random.default_rng(6)
    x = rng.uniform(-10.0, 10.0, size=(10000, 1))
    for delta in (0.05, 0.45, 0.9):
        _, stats = implicit_solve_with_stats(double_well, 0.0, delta, x, ImplicitSolver())
        assert stats.max_residual <= 1e-12 * 11.0


def test_fixed_newton_counts_iterations(oscillator):
    x = np.array([[1.0, 2.0], [-0.5, 0.1]])
    solver = ImplicitSolver(kind=SolverKind.NEWTON_FIXED, iterations=3)
    _, stats = implicit_solve_with_stats(oscillator, 0.0, 0.25, x, solver)
    assert stats.iterations == 6


def test_newton_reports_non_convergence(double_well):
    with pytest.raises(ConvergenceError) as info:
        implicit_solve(double_well, 0.0, 0.9, np.array([[10.0]]), ImplicitSolver(max_iters=1))
    assert info.value.last_iterate.shape == (1, 1)
    assert info.value.residual > 0.0


def test_implicit_step_needs_small_delta(double_well):
    with pytest.raises(ParameterError):
        implicit_solve(double_well, 0.0, 1.0, np.array([[0.5]]))


def test_cardano_needs_cubic_drift(oscillator):
    with pytest.raises(ApplicabilityError):
        implicit_solve(oscillator, 0.0, 0.25, np.array([[1.0, 0.0]]), CARDANO)


# One step

def test_pmil_step_by_hand(double_well):
    # f(2) = -6, g(2) = -0.9, g'g(2) = 1.08, I_(1,1) = (0.1^2 - 1/16) / 2
    scheme = make_scheme("pmil", double_well)
    inc = step_increments(np.array([0.1]), 2.0 ** -4, NoiseStructure.SCALAR)
    x, meta = step(double_well, scheme, np.array([2.0]), 0.0, inc)
    assert x[0] == pytest.approx(2.0 - 0.375 - 0.09 + 1.08 * -0.02625, rel=1e-12)
    assert x[0] == pytest.approx(1.50665, rel=1e-12)


def test_pmil_projects_before_stepping(double_well):
    scheme = make_scheme("pmil", double_well)
    inc = step_increments(np.array([0.1]), 2.0 ** -4, NoiseStructure.SCALAR)
    x, meta = step(double_well, scheme, np.array([3.0]), 0.0, inc)
    assert bool(meta.projected)
    assert x[0] == pytest.approx(1.50665, rel=1e-12)


def test_split_step_evaluates_at_right_endpoint():
    seen = []

    def drift(t, x):
        seen.append(t)
        return -x

    problem = SodeProblem(
        dim=1, num_drivers=1, drift=drift,
        diffusion=lambda t, x, r: np.full_like(x, 0.1),
        diffusion_deriv_product=lambda t, x, r1, r2: np.zeros_like(x),
        noise_structure=NoiseStructure.ADDITIVE, growth_rate_q=2.0, monotonicity_L=1.0,
        eta=1.0, horizon_T=1.0, initial_value=np.array([1.0]),
    )
    scheme = make_scheme("ssbe", problem)
    step(problem, scheme, np.array([1.0]), 0.25, step_increments(np.array([0.0]), 0.25, NoiseStructure.ADDITIVE))
    assert seen and all(t == 0.5 for t in seen)


# Integration

def test_step_grid_validation():
    with pytest.raises(GridError):
        StepGrid.uniform(0.3, 1.0)
    with pytest.raises(GridError):
        StepGrid(np.array([0.5, -0.5]))
    grid = StepGrid(np.array([0.25, 0.5, 0.25]))
    np.testing.assert_allclose(grid.grid_points, [0.0, 0.25, 0.75, 1.0])
    assert grid.max_step == 0.5


def test_single_step_grid_equals_one_step(double_well):
    scheme = make_scheme("pmil", double_well)
    path = generate_path(3, 0, 1.0, 2.0 ** -4, 1)
    record = integrate(double_well, scheme, StepGrid.uniform(1.0, 1.0), path)
    expected, _ = step(double_well, scheme, double_well.initial_value, 0.0,
                       iterated_integrals(path, 0, 16, NoiseStructure.SCALAR))
    assert np.array_equal(record.final, expected)
    assert record.states.shape == (2, 1)


def test_zero_noise_reduces_to_euler():
    problem = make_double_well(0.0, x0=0.1)
    h = 2.0 ** -5
    record = integrate(problem, make_scheme("pmil", problem), StepGrid.uniform(h, 1.0),
                       generate_path(0, 0, 1.0, h, 1))
    x = 0.1
    expected = [x]
    for _ in range(32):
        x = x + h * (x * (1.0 - x * x))
        expected.append(x)
    np.testing.assert_allclose(record.states[:, 0], expected, rtol=1e-14)
    assert record.projection_events == 0


@pytest.mark.parametrize("kind", ["pmil", "ssbm"])
@pytest.mark.parametrize("x0, limit", [(0.5, 1.0), (2.0, 1.0), (-0.5, -1.0), (0.0, 0.0)])
def test_noiseless_double_well_settles_at_equilibria(kind, x0, limit):
    T, h = 20.0, 2.0 ** -6
    problem = make_double_well(0.0, x0=x0, T=T)
    record = integrate(problem, make_scheme(kind, problem), StepGrid.uniform(h, T),
                       generate_path(0, 0, T, h, 1), keep_states=False)
    assert abs(record.final[0] - limit) <= 1e-3


def test_projected_schemes_equal_unprojected_without_projection():
    problem = make_double_well(0.3, x0=0.5)
    grid = StepGrid.uniform(2.0 ** -6, 1.0)
    bundle = _bundle(problem, n=64)
    pmil = integrate(problem, make_scheme("pmil", problem), grid, bundle)
    milstein = integrate(problem, make_scheme("milstein", problem), grid, bundle)
    clean = pmil.projection_events == 0
    assert clean.any()
    assert np.array_equal(pmil.states[:, clean], milstein.states[:, clean])


def test_additive_noise_milstein_terms_vanish(additive):
    grid = StepGrid.uniform(2.0 ** -3, 1.0)
    bundle = _bundle(additive)

    def final(kind):
        return integrate(additive, make_scheme(kind, additive), grid, bundle).final

    assert np.array_equal(final("pmil"), final("pem"))
    assert np.array_equal(final("ssbm"), final("ssbe"))
    assert np.array_equal(final("milstein"), final("em"))


def test_integrate_checks_step_bound_and_horizon(oscillator, double_well):
    path = generate_path(0, 0, 1.0, 2.0 ** -4, 2)
    with pytest.raises(ParameterError):
        integrate(oscillator, make_scheme("ssbm", oscillator), StepGrid.uniform(1.0, 1.0), path)
    with pytest.raises(GridError):
        integrate(double_well, make_scheme("pmil", double_well), StepGrid.uniform(0.25, 0.5),
                  generate_path(0, 0, 1.0, 2.0 ** -4, 1))
    with pytest.raises(ParameterError):
        integrate(double_well, make_scheme("pmil", double_well), StepGrid.uniform(0.25, 1.0), path)


def test_integrate_raises_on_overflow(double_well):
    path = generate_path(0, 0, 1.0, 2.0 ** -3, 1)
    with pytest.raises(StepOverflowError) as info:
        integrate(double_well, make_scheme("em", double_well), StepGrid.uniform(2.0 ** -3, 1.0),
                  path, x0=np.array([1e6]))
    assert info.value.step_index >= 1


def test_mask_mode_flags_diverged_samples(double_well):
    bundle = generate_paths(0, range(2), 1.0, 2.0 ** -3, 1)
    record = integrate(double_well, make_scheme("em", double_well), StepGrid.uniform(2.0 ** -3, 1.0),
                       bundle, x0=np.array([[0.5], [1e6]]), on_overflow="mask")
    assert record.diverged.tolist() == [False, True]
    assert np.all(np.isfinite(record.final))
    assert np.all(np.isfinite(record.states))


def test_pmil_survives_where_euler_diverges(double_well):
    bundle = generate_paths(0, range(2), 1.0, 2.0 ** -3, 1)
    record = integrate(double_well, make_scheme("pmil", double_well), StepGrid.uniform(2.0 ** -3, 1.0),
                       bundle, x0=np.array([[0.5], [1e6]]))
    assert not record.diverged.any()
    assert record.projection_events[1] >= 1


def _shear_problem(structure):
    # g^1 = (x_2, 0), g^2 = (0, 1): g^{1,2} = (1, 0) but g^{2,1} = 0.
    def diffusion(t, x, r):
        if r == 0:
            return np.stack([x[..., 1], np.zeros_like(x[..., 0])], axis=-1)
        return np.broadcast_to(np.array([0.0, 1.0]), x.shape).copy()

    def deriv_product(t, x, r1, r2):
        if (r1, r2) == (0, 1):
            return np.broadcast_to(np.array([1.0, 0.0]), x.shape).copy()
        return np.zeros_like(x)

    return SodeProblem(
        dim=2, num_drivers=2, drift=lambda t, x: -x, diffusion=diffusion,
        diffusion_deriv_product=deriv_product, noise_structure=structure,
        growth_rate_q=2.0, monotonicity_L=1.0, eta=1.0, horizon_T=1.0,
        initial_value=np.array([1.0, 1.0]),
    )


def test_mislabelled_commutative_noise_is_rejected():
    problem = _shear_problem(NoiseStructure.COMMUTATIVE)
    path = generate_path(0, 0, 1.0, 2.0 ** -4, 2)
    with pytest.raises(ApplicabilityError):
        integrate(problem, make_scheme("milstein", problem), StepGrid.uniform(2.0 ** -4, 1.0), path)


def test_commutativity_is_checked_away_from_the_initial_state():
    # g^{1,2} - g^{2,1} = (x_1 - 1, 0) vanishes only on the line x_1 = 1.
    def deriv_product(t, x, r1, r2):
        if (r1, r2) == (0, 1):
            return np.stack([x[..., 0] - 1.0, np.zeros_like(x[..., 0])], axis=-1)
        return np.zeros_like(x)

    problem = replace(
        _shear_problem(NoiseStructure.COMMUTATIVE), diffusion_deriv_product=deriv_product,
    )
    assert commutativity_gap(problem, 0.0, problem.initial_value) == 0.0
    path = generate_path(0, 0, 1.0, 2.0 ** -4, 2)
    with pytest.raises(ApplicabilityError):
        integrate(problem, make_scheme("milstein", problem), StepGrid.uniform(2.0 ** -4, 1.0), path)


def test_general_noise_is_rejected():
    problem = _shear_problem(NoiseStructure.GENERAL)
    path = generate_path(0, 0, 1.0, 2.0 ** -4, 2)
    with pytest.raises(UnsupportedNoiseError):
        integrate(problem, make_scheme("milstein", problem), StepGrid.uniform(2.0 ** -4, 1.0), path)


def test_oscillator_bundle_integration(oscillator):
    bundle = _bundle(oscillator, n=16, fine_dt=2.0 ** -6)
    solver = ImplicitSolver(kind=SolverKind.NEWTON_FIXED, iterations=3)
    for scheme in (make_scheme("pmil", oscillator), make_scheme("ssbm", oscillator, solver=solver)):
        record = integrate(oscillator, scheme, StepGrid.uniform(2.0 ** -4, 1.0), bundle, keep_states=False)
        assert record.final.shape == (16, 2)
        assert np.all(np.isfinite(record.final))
        assert record.states.shape == (1, 16, 2)


def test_trajectory_csv(double_well, tmp_path):
    grid = StepGrid.uniform(2.0 ** -3, 1.0)
    record = integrate(double_well, make_scheme("pmil", double_well), grid,
                       generate_path(4, 0, 1.0, 2.0 ** -3, 1))
    target = tmp_path / "trajectory.csv"
    write_trajectory_csv(record, grid, target)
    frame = pd.read_csv(target)
    assert list(frame.columns) == ["t", "x_1", "projected_flag"]
    assert len(frame) == 9
    assert frame["x_1"].iloc[0] == 2.0
