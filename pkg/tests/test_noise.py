import numpy as np
import pytest

from models import GridError, IndexRangeError, ParameterError, UnsupportedNoiseError
from noise import (
    coarsen,
    dump_path,
    fine_index,
    generate_path,
    generate_paths,
    iterated_integrals,
    load_path,
    num_fine_steps_for,
    step_increments,
    wiener_values,
)
from sde_model import NoiseStructure

FINE_DT = 2.0 ** -6


def test_path_is_a_function_of_its_key():
    a = generate_path(7, 3, 1.0, FINE_DT, 2)
    b = generate_path(7, 3, 1.0, FINE_DT, 2)
    c = generate_path(7, 4, 1.0, FINE_DT, 2)
    assert np.array_equal(a.increments, b.increments)
    assert not np.array_equal(a.increments, c.increments)
    assert a.increments.shape == (64, 2)


def test_bundle_rows_match_single_paths():
    bundle = generate_paths(7, [2, 3, 11], 1.0, FINE_DT, 2)
    for i, idx in enumerate([2, 3, 11]):
        assert np.array_equal(bundle.increments[i], generate_path(7, idx, 1.0, FINE_DT, 2).increments)
    assert bundle.path(1).sample_index == 3


def test_increments_are_read_only():
    path = generate_path(0, 0, 1.0, FINE_DT, 1)
    with pytest.raises(ValueError):
        path.increments[0, 0] = 1.0


def test_fine_step_must_divide_horizon():
    with pytest.raises(ParameterError):
        num_fine_steps_for(1.0, 0.3)
    assert num_fine_steps_for(1.0, 0.25) == 4


def test_coarsen_sums_windows():
    path = generate_path(1, 0, 1.0, FINE_DT, 2)
    np.testing.assert_allclose(coarsen(path, 0, 64), path.increments.sum(axis=0))
    np.testing.assert_allclose(coarsen(path, 4, 8), path.increments[4:8].sum(axis=0))
    with pytest.raises(IndexRangeError):
        coarsen(path, 3, 3)
    with pytest.raises(IndexRangeError):
        coarsen(path, 0, 65)


def test_fine_index_rejects_off_grid_times():
    path = generate_path(1, 0, 1.0, FINE_DT, 1)
    assert fine_index(path, 0.5) == 32
    assert fine_index(path, 1.0) == 64
    with pytest.raises(GridError):
        fine_index(path, 0.3)


def test_wiener_values_start_at_zero():
    path = generate_path(1, 0, 1.0, FINE_DT, 2)
    w = wiener_values(path)
    assert w.shape == (65, 2)
    assert np.all(w[0] == 0.0)
    np.testing.assert_allclose(w[-1], path.increments.sum(axis=0))


def test_dump_and_load_replay_a_path(tmp_path):
    path = generate_path(9, 5, 1.0, FINE_DT, 2)
    target = tmp_path / "path.bin"
    dump_path(path, target)
    loaded = load_path(target)
    assert loaded.seed == 9
    assert loaded.sample_index == 5
    assert loaded.fine_dt == FINE_DT
    assert np.array_equal(loaded.increments, path.increments)


def test_general_noise_is_unsupported():
    with pytest.raises(UnsupportedNoiseError):
        step_increments(np.array([0.1, 0.2]), 0.25, NoiseStructure.GENERAL)


def test_additive_iterated_integrals_vanish():
    inc = step_increments(np.array([0.1, 0.2]), 0.25, NoiseStructure.ADDITIVE)
    assert np.all(inc.iterated == 0.0)


def test_diagonal_iterated_integrals():
    inc = step_increments(np.array([0.1, -0.2]), 0.25, NoiseStructure.DIAGONAL)
    np.testing.assert_allclose(np.diag(inc.iterated), [-0.12, -0.105])
    assert inc.iterated[0, 1] == 0.0
    assert inc.iterated[1, 0] == 0.0


def test_commutative_pairs_sum_to_product_of_increments():
    dw = np.array([[0.3, -0.7], [1.1, 0.4]])
    inc = step_increments(dw, 0.5, NoiseStructure.COMMUTATIVE)
    assert np.array_equal(inc.iterated[..., 0, 1] + inc.iterated[..., 1, 0], dw[:, 0] * dw[:, 1])
    np.testing.assert_allclose(inc.iterated[..., 1, 1], 0.5 * (dw[:, 1] ** 2 - 0.5))


def test_iterated_integrals_use_window_length():
    path = generate_path(2, 0, 1.0, FINE_DT, 1)
    inc = iterated_integrals(path, 8, 24, NoiseStructure.SCALAR)
    assert inc.delta == pytest.approx(16 * FINE_DT)
    np.testing.assert_allclose(inc.dw, path.increments[8:24].sum(axis=0))


@pytest.mark.slow
def test_increment_moments():
    M = 100000
    bundle = generate_paths(123, range(M), 1.0, 2.0 ** -4, 1)
    w1 = bundle.increments.sum(axis=1)[:, 0]
    assert abs(w1.mean()) < 4.0 / np.sqrt(M)
    assert abs(w1.var(ddof=1) - 1.0) < 4.0 * np.sqrt(2.0 / M)
    i11 = 0.5 * (w1 ** 2 - 1.0)
    assert abs(i11.mean()) < 4.0 * np.sqrt(0.5 / M)


def test_commutative_step_moments():
    M, delta = 10 ** 6, 0.01
    path = generate_path(29, 0, M * delta, delta, 2)
    inc = step_increments(path.increments, delta, NoiseStructure.COMMUTATIVE)
    assert inc.dw.shape == (M, 2)
    for r in range(2):
        assert 0.99 <= np.mean(inc.dw[:, r] ** 2) / delta <= 1.01
        assert 0.99 <= np.mean(inc.iterated[:, r, r] ** 2) / (delta ** 2 / 2) <= 1.01
    corr = np.mean(inc.dw[:, 0] * inc.dw[:, 1]) / delta
    assert abs(corr) <= 4.0 / np.sqrt(M)
    assert np.array_equal(inc.iterated[:, 0, 1] + inc.iterated[:, 1, 0], inc.dw[:, 0] * inc.dw[:, 1])
