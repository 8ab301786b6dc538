from typing import Optional, Sequence, Tuple

import numpy as np

from smog.data import MultiOutputDataset, StandardizationTransform
from smog.gp import FittedGP, GPSpec, Hyperparameters, condition
from smog.kernels import EquicorrelatedTaskParams, Matern52Params
from smog.model import MetaTaskModel, meta_spec
from smog.stats import Stats


def random_params(
    rng: np.random.Generator,
    dim: int,
    objective_count: int,
    rho: Optional[float] = None,
    noise: Optional[float] = None,
) -> Hyperparameters:
    return Hyperparameters(
        input=Matern52Params(rng.uniform(0.2, 1.0, dim), 1.0),
        task=EquicorrelatedTaskParams(
            rng.uniform(0.5, 1.5, objective_count),
            rng.uniform(0.05, 0.9) if rho is None else rho,
        ),
        noise=rng.uniform(0.05, 0.2) if noise is None else noise,
    )


def random_dataset(
    rng: np.random.Generator, n: int, dim: int, objective_count: int
) -> MultiOutputDataset:
    return MultiOutputDataset(
        rng.uniform(size=(n, dim)), rng.standard_normal((n, objective_count))
    )


def conditioned_gp(
    params: Hyperparameters, data: MultiOutputDataset, task_mode: str = "equicorrelated"
) -> FittedGP:
    spec = GPSpec(data.dim, data.objective_count, task_mode=task_mode)
    return condition(FittedGP.prior_only(spec, params), data)


def meta_models(
    params: Sequence[Hyperparameters],
    datasets: Sequence[MultiOutputDataset],
    task_mode: str = "equicorrelated",
    stats: Optional[Stats] = None,
) -> Tuple[MetaTaskModel, ...]:
    """Meta-task models with fixed hyperparameters, conditioned on data
    that is already on the standardized scale."""
    out = []
    for index, (p, data) in enumerate(zip(params, datasets)):
        spec = meta_spec(data.dim, data.objective_count, task_mode)
        gp = condition(FittedGP.prior_only(spec, p), data)
        out.append(
            MetaTaskModel(
                index=index,
                gp=gp,
                transform=StandardizationTransform.identity(data.objective_count),
                stats=stats or Stats(),
            )
        )
    return tuple(out)


def dense_posterior(
    K_train: np.ndarray,
    noise: np.ndarray,
    jitter: float,
    y: np.ndarray,
    K_cross: np.ndarray,
    K_query: np.ndarray,
    prior_mean_train: Optional[np.ndarray] = None,
    prior_mean_query: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Textbook GP conditioning with explicit solves."""
    n = K_train.shape[0]
    A = K_train + np.diag(noise) + jitter * np.eye(n)
    m_train = np.zeros(n) if prior_mean_train is None else prior_mean_train
    m_query = np.zeros(K_query.shape[0]) if prior_mean_query is None else prior_mean_query
    mean = m_query + K_cross.T @ np.linalg.solve(A, y - m_train)
    cov = K_query - K_cross.T @ np.linalg.solve(A, K_cross)
    return mean, cov


def assert_close(actual, expected, rel: float) -> None:
    """Entrywise agreement up to ``rel`` times the largest expected magnitude."""
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    scale = max(float(np.max(np.abs(expected))), 1e-12) if expected.size else 1.0
    np.testing.assert_allclose(actual, expected, rtol=rel, atol=rel * scale)
