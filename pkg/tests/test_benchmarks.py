import math

import numpy as np
import pytest

from smog.benchmarks import (
    ALPHA_RANGES,
    EPSILON_MAX,
    HARTMANN_ALPHA,
    SINUSOIDAL,
    HartmannBenchmark,
    HartmannInstance,
    SinusoidalBenchmark,
    hartmann_eval,
    make_hartmann,
    parse_benchmark,
    sample_meta_data,
    sinusoidal_eval,
)
from smog.exceptions import ArgumentError

HARTMANN_MINIMIZER = np.array([0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573])


def test_sinusoidal_target_is_weighted_sum() -> None:
    delta, phi = math.pi / 12, math.pi / 6
    assert float(sinusoidal_eval("t", 1, 0.0)) == pytest.approx(-0.35 * math.sin(delta))
    expected = 0.4 * math.sin(phi - delta) + 0.4 * math.sin(phi) + 0.2 * math.sin(phi + delta)
    assert float(sinusoidal_eval("t", 2, 0.0)) == pytest.approx(expected)


def test_sinusoidal_sources_are_shifted() -> None:
    x = np.linspace(0.0, 2 * math.pi, 7)
    np.testing.assert_allclose(sinusoidal_eval(1, 1, x), np.sin(x - math.pi / 12))
    np.testing.assert_allclose(sinusoidal_eval(3, 2, x), np.sin(x + math.pi / 12 + math.pi / 6))


@pytest.mark.parametrize(
    "task, objective, match",
    [
        (4, 1, "task must be"),
        (0, 1, "task must be"),
        ("target", 1, "task must be"),
        (1, 3, "Objective"),
    ],
)
def test_sinusoidal_rejects_bad_labels(task, objective, match) -> None:
    with pytest.raises(ArgumentError, match=match):
        sinusoidal_eval(task, objective, 0.0)


def _classical() -> HartmannInstance:
    return HartmannInstance(
        alpha=HARTMANN_ALPHA[None, :], epsilon=np.zeros((1, 6)), meta_tasks=0, objectives=1, seed=0
    )


def test_classical_hartmann_minimum() -> None:
    value = hartmann_eval(_classical(), "t", 1, HARTMANN_MINIMIZER)
    assert value == pytest.approx(-3.32237, abs=1e-4)
    X = np.random.default_rng(0).uniform(size=(4096, 6))
    assert hartmann_eval(_classical(), "t", 1, X).min() > value


@pytest.mark.parametrize("objectives", [2, 4])
def test_hartmann_objectives_vary_and_stay_correlated(objectives) -> None:
    instance = make_hartmann(8, objectives, seed=3)
    X = np.random.default_rng(1).uniform(size=(4096, 6))
    for task in (1, "t"):
        Y = np.column_stack(
            [hartmann_eval(instance, task, o, X) for o in range(1, objectives + 1)]
        )
        assert np.all(Y.std(axis=0) > 1e-3)
        assert Y.min() < -0.5
        corr = np.corrcoef(Y, rowvar=False)
        assert np.all(corr[np.triu_indices(objectives, 1)] > 0.0)


def test_hartmann_optimum_moves_with_objective_offset() -> None:
    instance = make_hartmann(2, 2, seed=7)
    unshifted = HartmannInstance(
        alpha=instance.alpha, epsilon=np.zeros((1, 6)), meta_tasks=2, objectives=1, seed=7
    )
    best = hartmann_eval(unshifted, "t", 1, HARTMANN_MINIMIZER)
    assert best < -2.0
    for o in (1, 2):
        x = HARTMANN_MINIMIZER + instance.epsilon[o - 1]
        assert np.all(x <= 1.0)
        assert hartmann_eval(instance, "t", o, x) == pytest.approx(best, rel=1e-12)


def test_hartmann_is_vectorized(rng) -> None:
    instance = make_hartmann(3, 2, seed=5)
    X = rng.uniform(size=(10, 6))
    batch = hartmann_eval(instance, 2, 2, X)
    np.testing.assert_allclose(batch, [hartmann_eval(instance, 2, 2, x) for x in X], rtol=1e-12)


def test_make_hartmann_ranges_and_determinism() -> None:
    instance = make_hartmann(4, 3, seed=11)
    assert instance.alpha.shape == (5, 4)
    assert instance.epsilon.shape == (3, 6)
    for column, (lo, hi) in enumerate(ALPHA_RANGES):
        assert np.all((instance.alpha[:, column] >= lo) & (instance.alpha[:, column] <= hi))
    assert np.all((instance.epsilon >= 0.0) & (instance.epsilon < EPSILON_MAX))
    again = make_hartmann(4, 3, seed=11)
    np.testing.assert_array_equal(instance.alpha, again.alpha)
    np.testing.assert_array_equal(instance.epsilon, again.epsilon)
    assert not np.array_equal(instance.alpha, make_hartmann(4, 3, seed=12).alpha)


def test_task_coefficients_do_not_depend_on_objective_count() -> None:
    a, b = make_hartmann(3, 1, seed=2), make_hartmann(3, 4, seed=2)
    np.testing.assert_array_equal(a.alpha, b.alpha)
    np.testing.assert_array_equal(a.epsilon, b.epsilon[:1])


def test_hartmann_validation() -> None:
    instance = make_hartmann(2, 2, seed=0)
    with pytest.raises(ArgumentError, match="6-dimensional"):
        hartmann_eval(instance, 1, 1, np.zeros(5))
    with pytest.raises(ArgumentError, match="Objective"):
        hartmann_eval(instance, 1, 3, np.zeros(6))
    with pytest.raises(ArgumentError, match="Task must be"):
        hartmann_eval(instance, 3, 1, np.zeros(6))
    with pytest.raises(ArgumentError, match="M >= 1"):
        make_hartmann(0, 2, seed=0)


def test_sinusoidal_meta_data() -> None:
    datasets = sample_meta_data(SINUSOIDAL, n_per_task=16, seed=3)
    assert len(datasets) == 3
    for task, data in enumerate(datasets, start=1):
        assert data.inputs.shape == (16, 1)
        x = SINUSOIDAL.to_domain(data.inputs[:, 0])
        np.testing.assert_allclose(data.outputs[:, 1], sinusoidal_eval(task, 2, x))
    again = sample_meta_data(SINUSOIDAL, n_per_task=16, seed=3)
    np.testing.assert_array_equal(datasets[0].inputs, again[0].inputs)


def test_meta_data_noise() -> None:
    clean = sample_meta_data(SINUSOIDAL, n_per_task=8, seed=1)
    noisy = sample_meta_data(SINUSOIDAL, n_per_task=8, noise_std=0.1, seed=1)
    np.testing.assert_array_equal(clean[1].inputs, noisy[1].inputs)
    assert not np.array_equal(clean[1].outputs, noisy[1].outputs)
    with pytest.raises(ArgumentError, match="noise_std"):
        sample_meta_data(SINUSOIDAL, n_per_task=8, noise_std=-1.0)
    with pytest.raises(ArgumentError, match="n_per_task"):
        sample_meta_data(SINUSOIDAL, n_per_task=0)


def test_hartmann_benchmark_is_maximization_form(rng) -> None:
    benchmark = HartmannBenchmark(meta_tasks=2, objectives=2, meta_observations=8, seed=4)
    X = rng.uniform(size=(5, 6))
    Y = benchmark.evaluate(X)
    assert Y.shape == (5, 2)
    assert np.all(Y > 0)
    np.testing.assert_allclose(Y[:, 1], -hartmann_eval(benchmark.instance, "t", 2, X))
    np.testing.assert_array_equal(benchmark.reference_point, [0.0, 0.0])
    np.testing.assert_array_equal(benchmark.bounds, np.tile([0.0, 1.0], (6, 1)))

    meta = benchmark.sample_meta_data(seed=1)
    raw = sample_meta_data(benchmark.instance, 8, seed=1)
    assert len(meta) == 2
    np.testing.assert_allclose(meta[0].outputs, -raw[0].outputs)


def test_sinusoidal_benchmark() -> None:
    benchmark = SinusoidalBenchmark(meta_observations=4)
    assert (benchmark.dim, benchmark.objective_count, benchmark.meta_task_count) == (1, 2, 3)
    np.testing.assert_array_equal(benchmark.reference_point, [-1.0, -1.0])
    Y = benchmark.evaluate([[0.0], [0.5]])
    np.testing.assert_allclose(Y[0], [sinusoidal_eval("t", 1, 0.0), sinusoidal_eval("t", 2, 0.0)])
    np.testing.assert_allclose(Y[1, 0], sinusoidal_eval("t", 1, math.pi))
    assert [d.inputs.shape for d in benchmark.sample_meta_data()] == [(4, 1)] * 3


def test_parse_benchmark() -> None:
    assert parse_benchmark("sinusoidal").id == "sinusoidal:n_meta=64"
    assert parse_benchmark("sinusoidal:n_meta=8").meta_observations == 8
    default = parse_benchmark("hartmann6")
    assert default.id == "hartmann6:M=8,O=2,n_meta=64"
    overridden = parse_benchmark("hartmann6:M=3", seed=2, objectives=3)
    assert overridden.id == "hartmann6:M=3,O=3,n_meta=64"
    assert overridden.seed == 2


@pytest.mark.parametrize(
    "benchmark_id, match",
    [
        ("Bad Id!", "Malformed"),
        ("branin", "Unknown benchmark 'branin'"),
        ("hartmann6:X=1", "Unknown benchmark parameter"),
        ("hartmann6:M=a", "must be an integer"),
        ("sinusoidal:M=2", "fixed"),
        ("hartmann6:O=0", "objectives must be >= 1"),
    ],
)
def test_parse_benchmark_errors(benchmark_id, match) -> None:
    with pytest.raises(ArgumentError, match=match):
        parse_benchmark(benchmark_id)
