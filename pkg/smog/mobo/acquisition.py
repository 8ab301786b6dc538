"""
Monte-Carlo log expected hypervolume improvement.

Samples are ``mean + L z`` with one fixed set of base normals ``z`` per
``base_seed``; reusing them for every candidate makes the acquisition a
deterministic function of the posterior, front and reference point.
"""

from typing import Tuple

import attrs
import numpy as np

from smog._base import psd_sqrt
from smog.exceptions import ArgumentError
from smog.gp import PosteriorGaussian
from smog.mobo.pareto import ParetoState, hypervolume_improvement, hypervolume_improvement_2d


def _positive(instance, attribute, value) -> None:
    if value <= 0:
        raise ArgumentError(f"{attribute.name} must be > 0, got {value}")


@attrs.define(frozen=True)
class AcquisitionConfig:
    """Sampling and optimizer settings of the acquisition step."""

    mc_samples: int = attrs.field(default=128, converter=int, validator=_positive)
    base_seed: int = attrs.field(default=0, converter=int)
    continuous_restarts: int = attrs.field(default=2, converter=int, validator=_positive)
    init_samples: int = attrs.field(default=512, converter=int, validator=_positive)
    interleave_rounds: int = attrs.field(default=5, converter=int, validator=_positive)
    discrete_candidates: int = attrs.field(default=2**14, converter=int, validator=_positive)
    log_floor: float = attrs.field(default=1e-12, converter=float, validator=_positive)
    #: Initial pattern-search step as a fraction of each dimension's range.
    pattern_step: float = attrs.field(default=0.1, converter=float, validator=_positive)
    pattern_halvings: int = attrs.field(default=8, converter=int, validator=_positive)


def base_normals(config: AcquisitionConfig, objective_count: int) -> np.ndarray:
    """The common random numbers shared by every candidate."""
    rng = np.random.default_rng(config.base_seed)
    return rng.standard_normal((config.mc_samples, objective_count))


def point_blocks(post: PosteriorGaussian, objective_count: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per-point means (Q×O) and O×O covariances (Q×O×O) of an
    objective-major posterior over Q points."""
    Q = post.mean.size // objective_count
    if Q * objective_count != post.mean.size:
        raise ArgumentError("Posterior size is not a multiple of the objective count")
    means = post.mean_matrix(objective_count)
    idx = np.arange(Q)[:, None] + Q * np.arange(objective_count)[None, :]
    covs = post.covariance[idx[:, :, None], idx[:, None, :]]
    return means, covs


def ehvi_samples(
    means: np.ndarray, covs: np.ndarray, state: ParetoState, config: AcquisitionConfig
) -> np.ndarray:
    """Hypervolume improvement of every MC sample, shape Q × mc_samples."""
    means = np.atleast_2d(np.asarray(means, dtype=float))
    Q, O = means.shape
    if O != state.objective_count:
        raise ArgumentError(
            f"Posterior covers {O} objectives, the front has {state.objective_count}"
        )
    z = base_normals(config, O)
    out = np.zeros((Q, config.mc_samples))
    for q in range(Q):
        samples = means[q] + z @ psd_sqrt(covs[q]).T
        if O == 2:
            out[q] = hypervolume_improvement_2d(samples, state.points, state.reference)
        elif O == 1:
            best = state.points.max() if state.points.size else state.reference[0]
            best = max(best, state.reference[0])
            out[q] = np.clip(samples[:, 0] - best, 0.0, None)
        else:
            out[q] = [
                hypervolume_improvement(y, state.points, state.reference) for y in samples
            ]
    return out


def log_ehvi_batch(
    means: np.ndarray, covs: np.ndarray, state: ParetoState, config: AcquisitionConfig
) -> np.ndarray:
    """:func:`log_ehvi` for Q candidates given their means and covariances."""
    improvement = ehvi_samples(means, covs, state, config).mean(axis=1)
    return np.log(np.maximum(improvement, config.log_floor))


def log_ehvi(post: PosteriorGaussian, state: ParetoState, config: AcquisitionConfig) -> float:
    """Log of the MC expected hypervolume improvement at one candidate.

    ``post`` must cover exactly one input across all objectives, in
    objective order.
    """
    O = state.objective_count
    if post.mean.size != O or not np.array_equal(post.objectives, np.arange(O)):
        raise ArgumentError("log_ehvi needs the posterior of one point across all objectives")
    value = log_ehvi_batch(post.mean.reshape(1, O), post.covariance.reshape(1, O, O), state, config)
    return float(value[0])

