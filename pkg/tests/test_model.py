import attrs
import numpy as np
import pytest

import smog.model
from smog.benchmarks import SinusoidalBenchmark
from smog.data import MultiOutputDataset
from smog.exceptions import ArgumentError, NumericalError
from smog.gp import Hyperparameters, posterior_blocks
from smog.kernels import (
    AugmentedInput,
    EquicorrelatedTaskParams,
    Matern52Params,
    augment,
    multi_output_gram,
)
from smog.model import (
    CACHE_EVICTION_STAT,
    CACHE_HIT_STAT,
    CACHE_MISS_STAT,
    META_FAILURE_STAT,
    META_POSTERIOR_STAT,
    SmogModel,
    TransferWeights,
    cache_at,
    condition_target,
    fit_meta_tasks,
    fit_target,
    refit_meta_task,
    smog_posterior,
    smog_predict,
    target_prior,
    target_spec,
    time_ratios,
    timing_probe,
)
from smog.stats import Stats
from tests.helpers import (
    assert_close,
    dense_posterior,
    meta_models,
    random_dataset,
    random_params,
)


def _prior_by_hand(smog_model: SmogModel, X: np.ndarray, o: np.ndarray):
    """Weighted meta posteriors plus the residual kernel, one term at a time."""
    residual = smog_model.residual
    mean = np.zeros(o.size)
    cov = multi_output_gram(X, o, X, o, residual.input, residual.task)
    for m, meta in enumerate(smog_model.meta):
        w = smog_model.weights.values[m, o]
        Xm, om = meta.gp.training_inputs()
        params = meta.gp.params
        m_hat, k_hat = dense_posterior(
            multi_output_gram(Xm, om, Xm, om, params.input, params.task),
            params.noise_for(om),
            meta.gp.jitter,
            meta.gp.data.stacked_outputs(),
            multi_output_gram(Xm, om, X, o, params.input, params.task),
            multi_output_gram(X, o, X, o, params.input, params.task),
        )
        mean += w * m_hat
        cov += np.outer(w, w) * k_hat
    return mean, cov


def _independent(lengthscales, sigma, noise) -> Hyperparameters:
    return Hyperparameters(
        Matern52Params(lengthscales), EquicorrelatedTaskParams(sigma, 0.0), noise
    )


def _instance(rng, M: int, O: int, D: int = 2, n_meta: int = 5):
    meta_params = [random_params(rng, D, O) for _ in range(M)]
    meta = meta_models(meta_params, [random_dataset(rng, n_meta, D, O) for _ in range(M)])
    weights = rng.uniform(-1.5, 1.5, size=(M, O))
    residual = random_params(rng, D, O)
    return meta, weights, residual


def test_target_prior_matches_formula(rng) -> None:
    meta, weights, residual = _instance(rng, M=3, O=2)
    model = SmogModel.create(meta, target_spec(2, 2), weights, residual)
    X = rng.uniform(size=(2, 2))
    o = np.array([0, 1])
    mean, cov = _prior_by_hand(model, X, o)
    a, b = AugmentedInput(X[0], 0), AugmentedInput(X[1], 1)
    m_a, k_ab = target_prior(model, a, b)
    assert m_a == pytest.approx(mean[0], rel=1e-10, abs=1e-12)
    assert k_ab == pytest.approx(cov[0, 1], rel=1e-10, abs=1e-12)


def test_target_prior_rejects_bad_points(rng) -> None:
    meta, weights, residual = _instance(rng, M=1, O=2)
    model = SmogModel.create(meta, target_spec(2, 2), weights, residual)
    with pytest.raises(ArgumentError, match="dimension"):
        target_prior(model, AugmentedInput([0.1], 0), AugmentedInput([0.1, 0.2], 0))
    with pytest.raises(ArgumentError, match="out of range"):
        target_prior(model, AugmentedInput([0.1, 0.2], 2), AugmentedInput([0.1, 0.2], 0))


def test_single_objective_reduces_to_scalar_transfer_model(rng) -> None:
    for _ in range(10):
        M = int(rng.integers(1, 4))
        meta, weights, residual = _instance(rng, M=M, O=1)
        target = random_dataset(rng, 4, 2, 1)
        model = condition_target(
            SmogModel.create(meta, target_spec(2, 1)),
            target,
            weights=weights,
            residual=residual,
            standardize_outputs=False,
        )
        Xt = target.inputs
        ot = np.zeros(Xt.shape[0], dtype=int)
        Xq = rng.uniform(size=(3, 2))
        oq = np.zeros(3, dtype=int)
        X_all = np.vstack([Xt, Xq])
        o_all = np.concatenate([ot, oq])
        mean_all, cov_all = _prior_by_hand(model, X_all, o_all)
        n = Xt.shape[0]
        mean, cov = dense_posterior(
            cov_all[:n, :n],
            residual.noise_for(ot),
            model.gp.jitter,
            target.stacked_outputs(),
            cov_all[:n, n:],
            cov_all[n:, n:],
            prior_mean_train=mean_all[:n],
            prior_mean_query=mean_all[n:],
        )
        post = smog_posterior(model, (Xq, oq))
        assert_close(post.mean, mean, 1e-10)
        assert_close(post.covariance, 0.5 * (cov + cov.T), 1e-10)


def test_diagonal_blocks_reduce_to_independent_objectives(rng) -> None:
    M, O, D = 2, 2, 2
    lengthscales = [rng.uniform(0.2, 1.0, D) for _ in range(M)]
    sigma = rng.uniform(0.5, 1.5, M)
    meta_data = [random_dataset(rng, 5, D, O) for _ in range(M)]
    joint_meta = meta_models(
        [
            _independent(lengthscales[m], [sigma[m]] * O, 0.08)
            for m in range(M)
        ],
        meta_data,
        task_mode="diagonal",
    )
    weights = np.repeat(rng.uniform(-1.0, 1.0, size=(M, 1)), O, axis=1)
    residual_ls = rng.uniform(0.2, 1.0, D)
    residual = _independent(residual_ls, [0.7] * O, [0.05] * O)
    target = random_dataset(rng, 4, D, O)
    joint = condition_target(
        SmogModel.create(joint_meta, target_spec(D, O, "diagonal", "per-objective")),
        target,
        weights=weights,
        residual=residual,
        standardize_outputs=False,
    )
    Xq = rng.uniform(size=(3, D))
    joint_post = smog_posterior(joint, augment(Xq, O))
    for o in range(O):
        single_meta = meta_models(
            [
                _independent(lengthscales[m], [sigma[m]], 0.08)
                for m in range(M)
            ],
            [MultiOutputDataset(d.inputs, d.outputs[:, [o]]) for d in meta_data],
            task_mode="diagonal",
        )
        single = condition_target(
            SmogModel.create(single_meta, target_spec(D, 1, "diagonal", "per-objective")),
            MultiOutputDataset(target.inputs, target.outputs[:, [o]]),
            weights=weights[:, [o]],
            residual=_independent(residual_ls, [0.7], [0.05]),
            standardize_outputs=False,
        )
        single_post = smog_posterior(single, (Xq, np.zeros(3, dtype=int)))
        rows = slice(o * 3, (o + 1) * 3)
        assert_close(joint_post.mean[rows], single_post.mean, 1e-10)
        assert_close(joint_post.covariance[rows, rows], single_post.covariance, 1e-10)


def test_cache_returns_stored_posterior(rng) -> None:
    stats = Stats()
    (meta,) = meta_models([random_params(rng, 2, 2)], [random_dataset(rng, 4, 2, 2)], stats=stats)
    X, o = augment(rng.uniform(size=(3, 2)), 2)
    first = cache_at(meta, X, o)
    second = cache_at(meta, X.copy(), o.copy())
    assert first[0] is second[0]
    assert (stats.get(CACHE_MISS_STAT), stats.get(CACHE_HIT_STAT)) == (1, 1)
    mean, cov = posterior_blocks(meta.gp, X, o)
    np.testing.assert_allclose(first[0], mean, rtol=0, atol=1e-12)
    np.testing.assert_allclose(first[1], cov, rtol=0, atol=1e-12)
    assert not first[0].flags.writeable
    assert meta.cache_size == 1
    meta.clear_cache()
    assert meta.cache_size == 0


def test_cache_drops_least_recently_used_query_set(rng) -> None:
    stats = Stats()
    (meta,) = meta_models([random_params(rng, 1, 2)], [random_dataset(rng, 4, 1, 2)], stats=stats)
    meta = attrs.evolve(meta, cache_capacity=2)
    queries = [augment(rng.uniform(size=(2, 1)), 2) for _ in range(3)]
    cache_at(meta, *queries[0])
    cache_at(meta, *queries[1])
    cache_at(meta, *queries[0])
    cache_at(meta, *queries[2])
    assert meta.cache_size == 2
    assert stats.get(CACHE_EVICTION_STAT) == 1
    assert meta.cached(*queries[0]) is not None
    assert meta.cached(*queries[1]) is None
    with pytest.raises(ValueError):
        attrs.evolve(meta, cache_capacity=0)


def test_cache_sub_block_consistency(rng) -> None:
    (meta,) = meta_models([random_params(rng, 1, 2)], [random_dataset(rng, 4, 1, 2)])
    X = rng.uniform(size=(4, 1))
    big = cache_at(meta, *augment(X, 2))
    small = cache_at(meta, *augment(X[:2], 2))
    rows = np.array([0, 1, 4, 5])
    np.testing.assert_allclose(small[0], big[0][rows], rtol=0, atol=1e-12)
    np.testing.assert_allclose(small[1], big[1][np.ix_(rows, rows)], rtol=0, atol=1e-12)


def test_fit_target_evaluates_each_meta_posterior_once(rng) -> None:
    stats = Stats()
    M = 3
    meta = meta_models(
        [random_params(rng, 1, 2) for _ in range(M)],
        [random_dataset(rng, 4, 1, 2) for _ in range(M)],
        stats=stats,
    )
    before = [m.gp for m in meta]
    target = random_dataset(rng, 4, 1, 2)
    model = fit_target(SmogModel.create(meta, target_spec(1, 2)), target, restarts=1)
    assert stats.get(META_POSTERIOR_STAT) == M
    assert stats.get(CACHE_HIT_STAT) > 0
    assert all(m.gp is gp for m, gp in zip(model.meta, before))
    assert model.weights.shape == (M, 2)


def test_fit_target_is_deterministic(rng) -> None:
    meta = meta_models([random_params(rng, 1, 2)], [random_dataset(rng, 4, 1, 2)])
    target = random_dataset(rng, 3, 1, 2)
    a = fit_target(SmogModel.create(meta, target_spec(1, 2)), target, restarts=2, seed=5)
    b = fit_target(SmogModel.create(meta, target_spec(1, 2)), target, restarts=2, seed=5)
    np.testing.assert_array_equal(a.weights.values, b.weights.values)
    np.testing.assert_array_equal(a.residual.noise, b.residual.noise)


def test_fit_target_without_data(rng) -> None:
    meta = meta_models([random_params(rng, 1, 2)], [random_dataset(rng, 4, 1, 2)])
    model = fit_target(SmogModel.create(meta, target_spec(1, 2)), MultiOutputDataset.empty(1, 2))
    assert model.target_data.n == 0
    post = smog_posterior(model, augment(np.array([[0.5]]), 2))
    np.testing.assert_allclose(post.mean, 0.0)


def test_fit_target_rejects_bad_arguments(rng) -> None:
    model = SmogModel.create([], target_spec(1, 2))
    with pytest.raises(ArgumentError, match="restarts"):
        fit_target(model, random_dataset(rng, 2, 1, 2), restarts=0)
    with pytest.raises(ArgumentError, match="dimensions"):
        fit_target(model, random_dataset(rng, 2, 2, 2))


def test_smog_without_meta_tasks_is_a_plain_gp(rng) -> None:
    target = random_dataset(rng, 4, 1, 2)
    model = fit_target(SmogModel.create([], target_spec(1, 2)), target, restarts=1)
    assert model.meta_count == 0
    assert model.weights.shape == (0, 2)


def test_smog_predict_is_on_original_scale(rng) -> None:
    meta = meta_models([random_params(rng, 1, 2)], [random_dataset(rng, 4, 1, 2)])
    X = rng.uniform(size=(5, 1))
    target = MultiOutputDataset(X, np.column_stack([100 + 10 * X[:, 0], -5 * X[:, 0]]))
    model = fit_target(SmogModel.create(meta, target_spec(1, 2)), target, restarts=1)
    mean, variance = smog_predict(model, X)
    post = smog_posterior(model, augment(X, 2))
    np.testing.assert_allclose(mean, model.transform.invert(post.mean_matrix(2)))
    np.testing.assert_allclose(variance, model.transform.invert_variance(post.variance_matrix(2)))
    np.testing.assert_allclose(model.target_data.outputs, target.outputs, rtol=1e-12)
    assert mean.shape == variance.shape == (5, 2)


def test_transfer_weights_shape_is_checked(rng) -> None:
    meta = meta_models([random_params(rng, 1, 2)], [random_dataset(rng, 3, 1, 2)])
    with pytest.raises(ArgumentError, match="shape"):
        SmogModel.create(meta, target_spec(1, 2), TransferWeights.zeros(2, 2))
    with pytest.raises(ArgumentError, match="objectives"):
        SmogModel.create(meta, target_spec(1, 3), TransferWeights.zeros(1, 3))
    with pytest.raises(ArgumentError, match="finite"):
        TransferWeights([[np.nan]])
    assert TransferWeights.constant(2, 3, 0.5).values.tolist() == [[0.5] * 3] * 2


def test_fit_meta_tasks_excludes_failures(rng, monkeypatch) -> None:
    real_fit = smog.model.fit

    def flaky_fit(spec, data, restarts, seed):
        if data.n == 3:
            raise NumericalError("no restart converged")
        return real_fit(spec, data, restarts=restarts, seed=seed)

    monkeypatch.setattr(smog.model, "fit", flaky_fit)
    stats = Stats()
    datasets = [random_dataset(rng, n, 1, 2) for n in (4, 3, 5)]
    models = fit_meta_tasks(datasets, restarts=1, threads=2, stats=stats)
    assert [m.index for m in models] == [0, 2]
    assert stats.get(META_FAILURE_STAT) == 1


def test_fit_meta_tasks_does_not_depend_on_threads(rng) -> None:
    datasets = [random_dataset(rng, 4, 1, 2) for _ in range(3)]
    serial = fit_meta_tasks(datasets, seed=2, restarts=1, threads=1)
    parallel = fit_meta_tasks(datasets, seed=2, restarts=1, threads=3)
    for a, b in zip(serial, parallel):
        np.testing.assert_array_equal(
            a.gp.params.input.lengthscales, b.gp.params.input.lengthscales
        )
        np.testing.assert_array_equal(a.gp.params.noise, b.gp.params.noise)
        np.testing.assert_allclose(a.transform.apply(datasets[a.index].outputs), a.gp.data.outputs)


def test_fit_meta_tasks_rejects_empty_task() -> None:
    with pytest.raises(ArgumentError, match="no observations"):
        fit_meta_tasks([MultiOutputDataset.empty(1, 2)])
    assert fit_meta_tasks([]) == []


def test_refit_meta_task_starts_with_empty_cache(rng) -> None:
    (meta,) = fit_meta_tasks([random_dataset(rng, 4, 1, 2)], restarts=1)
    cache_at(meta, *augment(np.array([[0.5]]), 2))
    refit = refit_meta_task(meta, random_dataset(rng, 5, 1, 2), restarts=1)
    assert refit.index == meta.index
    assert refit.cache_size == 0
    assert refit.gp.data.n == 5


def test_time_ratios() -> None:
    rows = [{"total_seconds": 1.0}, {"total_seconds": 2.5}, {"total_seconds": 5.0}]
    assert time_ratios(rows) == [2.5, 2.0]


def _rmse(model: SmogModel, bench: SinusoidalBenchmark, X: np.ndarray) -> float:
    mean, _ = smog_predict(model, X)
    return float(np.sqrt(np.mean((mean - bench.evaluate(X)) ** 2)))


@pytest.mark.slow
def test_meta_data_improves_sinusoidal_predictions() -> None:
    bench = SinusoidalBenchmark(meta_observations=64)
    wins = 0
    for seed in range(10):
        meta = fit_meta_tasks(bench.sample_meta_data(seed=seed), seed=seed, restarts=2)
        rng = np.random.default_rng(seed)
        X = rng.uniform(size=(4, 1))
        target = MultiOutputDataset(X, bench.evaluate(X))
        spec = target_spec(1, 2)
        with_meta = fit_target(SmogModel.create(meta, spec), target, restarts=2, seed=seed)
        without = fit_target(SmogModel.create([], spec), target, restarts=2, seed=seed)
        grid = np.linspace(0, 1, 256).reshape(-1, 1)
        wins += _rmse(with_meta, bench, grid) < _rmse(without, bench, grid)
    assert wins >= 8


@pytest.mark.slow
def test_target_fit_time_grows_linearly_with_meta_tasks() -> None:
    rows = timing_probe([2, 4, 8], meta_observations=16, target_observations=6, repeats=3)
    assert [r["meta_tasks"] for r in rows] == [2, 4, 8]
    assert all(ratio <= 3.0 for ratio in time_ratios(rows))
