import math

import numpy as np
import pytest

from smog.exceptions import ArgumentError
from smog.gp import PosteriorGaussian
from smog.mobo.acquisition import (
    AcquisitionConfig,
    base_normals,
    ehvi_samples,
    log_ehvi,
    log_ehvi_batch,
    point_blocks,
)
from smog.mobo.pareto import ParetoState, hypervolume_improvement

SMALL = AcquisitionConfig(mc_samples=64, base_seed=3)


def _state() -> ParetoState:
    return ParetoState.from_observations([[1.0, 0.0], [0.0, 1.0]], [-1.0, -1.0])


def _single_point(mean, cov) -> PosteriorGaussian:
    O = len(mean)
    return PosteriorGaussian(
        np.asarray(mean, float), np.asarray(cov, float), np.zeros((O, 1)), np.arange(O)
    )


def test_defaults() -> None:
    config = AcquisitionConfig()
    assert (config.mc_samples, config.init_samples, config.continuous_restarts) == (128, 512, 2)
    assert (config.interleave_rounds, config.discrete_candidates) == (5, 2**14)
    assert config.log_floor == 1e-12


@pytest.mark.parametrize("field", ["mc_samples", "init_samples", "interleave_rounds", "log_floor"])
def test_config_rejects_non_positive_values(field) -> None:
    with pytest.raises(ArgumentError, match=field):
        AcquisitionConfig(**{field: 0})


def test_base_normals_are_common_random_numbers() -> None:
    a = base_normals(SMALL, 2)
    np.testing.assert_array_equal(a, base_normals(SMALL, 2))
    assert a.shape == (64, 2)
    assert not np.array_equal(a, base_normals(AcquisitionConfig(mc_samples=64, base_seed=4), 2))


def test_deterministic_improvement() -> None:
    # 2x2 box minus the area already dominated by the front
    post = _single_point([1.0, 1.0], np.zeros((2, 2)))
    assert log_ehvi(post, _state(), SMALL) == pytest.approx(math.log(1.0), abs=1e-12)


def test_no_improvement_hits_the_floor() -> None:
    post = _single_point([-2.0, -2.0], np.zeros((2, 2)))
    assert log_ehvi(post, _state(), SMALL) == pytest.approx(math.log(1e-12))


def test_higher_mean_never_lowers_the_acquisition() -> None:
    cov = np.array([[0.3, 0.1], [0.1, 0.2]])
    means = np.array([[0.2, 0.2], [0.5, 0.5], [0.8, 0.9]])
    values = log_ehvi_batch(means, np.stack([cov] * 3), _state(), SMALL)
    assert values[0] <= values[1] <= values[2]


def test_uncertainty_raises_the_acquisition_of_a_dominated_mean() -> None:
    state = _state()
    narrow = log_ehvi(_single_point([0.0, 0.0], 1e-4 * np.eye(2)), state, SMALL)
    wide = log_ehvi(_single_point([0.0, 0.0], np.eye(2)), state, SMALL)
    assert wide > narrow


def test_three_objective_samples_use_exact_improvement() -> None:
    state = ParetoState.from_observations([[1.0, 0.0, 0.0], [0.0, 1.0, 0.5]], np.full(3, -0.5))
    mean = np.array([[0.5, 0.5, 0.5]])
    samples = ehvi_samples(mean, np.zeros((1, 3, 3)), state, SMALL)
    expected = hypervolume_improvement(mean[0], state.points, state.reference)
    np.testing.assert_allclose(samples, expected)


def test_single_objective_improvement() -> None:
    state = ParetoState.from_observations([[1.0]], [0.0])
    samples = ehvi_samples(np.array([[1.5]]), np.zeros((1, 1, 1)), state, SMALL)
    np.testing.assert_allclose(samples, 0.5)


def test_point_blocks_reads_objective_major_layout() -> None:
    Q, O = 2, 2
    cov = np.arange(16, dtype=float).reshape(4, 4)
    cov = cov + cov.T + 100 * np.eye(4)
    post = PosteriorGaussian(
        np.array([1.0, 2.0, 3.0, 4.0]), cov, np.zeros((4, 1)), np.array([0, 0, 1, 1])
    )
    means, covs = point_blocks(post, O)
    assert means.tolist() == [[1.0, 3.0], [2.0, 4.0]]
    assert covs.shape == (Q, O, O)
    np.testing.assert_array_equal(covs[1], post.covariance[np.ix_([1, 3], [1, 3])])
    with pytest.raises(ArgumentError, match="multiple"):
        point_blocks(post, 3)


def test_objective_count_mismatch() -> None:
    with pytest.raises(ArgumentError, match="objectives"):
        ehvi_samples(np.zeros((1, 3)), np.zeros((1, 3, 3)), _state(), SMALL)
    post = PosteriorGaussian(np.zeros(4), np.eye(4), np.zeros((4, 1)), np.array([0, 0, 1, 1]))
    with pytest.raises(ArgumentError, match="one point"):
        log_ehvi(post, _state(), SMALL)
