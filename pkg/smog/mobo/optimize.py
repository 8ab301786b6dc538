"""
Gradient-free acquisition optimization.

Acquisition functions passed to these optimizers are vectorized: they map
an ``n × D`` array of points to ``n`` values. Wrap a scalar function with
:func:`pointwise`. Non-finite values count as ``-inf``.

The continuous optimizer scores uniform samples, then refines the best few
by coordinate pattern search. The mixed optimizer alternates between
picking discrete values for a fixed continuous part and optimizing the
continuous part for fixed discrete values.
"""

import itertools
import logging
import math
from typing import Callable, List, Optional, Tuple

import attrs
import numpy as np

from smog.exceptions import ArgumentError
from smog.mobo.acquisition import AcquisitionConfig
from smog.utils import derive_seed

logger = logging.getLogger(__name__)

BatchFunction = Callable[[np.ndarray], np.ndarray]


def pointwise(f: Callable[[np.ndarray], float]) -> BatchFunction:
    """Turn ``f(point) -> float`` into a vectorized acquisition function.

    >>> af = pointwise(lambda x: float(x.sum()))
    >>> af(np.array([[1.0, 2.0], [0.5, 0.5]])).tolist()
    [3.0, 1.0]
    """

    def batch(X: np.ndarray) -> np.ndarray:
        return np.array([f(x) for x in np.atleast_2d(X)], dtype=float)

    return batch


def _evaluate(af: BatchFunction, X: np.ndarray) -> np.ndarray:
    values = np.asarray(af(X), dtype=float).ravel()
    if values.size != X.shape[0]:
        raise ArgumentError(f"Acquisition returned {values.size} values for {X.shape[0]} points")
    return np.where(np.isfinite(values), values, -np.inf)


def _check_bounds(bounds) -> np.ndarray:
    bounds = np.atleast_2d(np.asarray(bounds, dtype=float))
    if bounds.ndim != 2 or bounds.shape[1] != 2 or bounds.shape[0] == 0:
        raise ArgumentError(f"Bounds must be a non-empty D×2 array, got shape {bounds.shape}")
    if np.any(bounds[:, 0] > bounds[:, 1]) or not np.all(np.isfinite(bounds)):
        raise ArgumentError("Every lower bound must be finite and <= its upper bound")
    return bounds


def _pattern_search(
    af: BatchFunction,
    x: np.ndarray,
    fx: float,
    bounds: np.ndarray,
    config: AcquisitionConfig,
) -> Tuple[np.ndarray, float]:
    lo, hi = bounds[:, 0], bounds[:, 1]
    D = x.size
    step = config.pattern_step * (hi - lo)
    # +e_0, -e_0, +e_1, -e_1, ...
    directions = np.stack([np.eye(D), -np.eye(D)], axis=1).reshape(2 * D, D)
    halvings = 0
    moves = 0
    max_moves = 100 * D
    while halvings < config.pattern_halvings and moves < max_moves:
        candidates = np.clip(x + directions * step, lo, hi)
        values = _evaluate(af, candidates)
        best = int(np.argmax(values))
        if values[best] > fx:
            x, fx = candidates[best], float(values[best])
            moves += 1
        else:
            step = step / 2.0
            halvings += 1
    return x, fx


def continuous_search(
    af: BatchFunction,
    bounds,
    config: AcquisitionConfig,
    seed: int,
    include: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, float]:
    """Like :func:`optimize_acquisition_continuous`, also returning the value.

    Rows of ``include`` are scored along with the uniform samples.
    """
    bounds = _check_bounds(bounds)
    lo, hi = bounds[:, 0], bounds[:, 1]
    rng = np.random.default_rng(seed)
    X0 = lo + (hi - lo) * rng.uniform(size=(config.init_samples, bounds.shape[0]))
    if include is not None:
        X0 = np.vstack([X0, np.atleast_2d(include)])
    values = _evaluate(af, X0)
    order = np.argsort(-values, kind="stable")
    best_x, best_value = X0[order[0]], float(values[order[0]])
    if not math.isfinite(best_value):
        logger.warning("Every initial acquisition value was non-finite")
        return best_x, best_value
    for i in order[: config.continuous_restarts]:
        if not math.isfinite(values[i]):
            continue
        x, fx = _pattern_search(af, X0[i], float(values[i]), bounds, config)
        if fx > best_value:
            best_x, best_value = x, fx
    return best_x, best_value


def optimize_acquisition_continuous(
    af: BatchFunction, bounds, config: AcquisitionConfig, seed: int
) -> np.ndarray:
    """Maximize ``af`` over the box ``bounds`` (a D×2 array).

    The result scores at least as high as every initial uniform sample.
    Deterministic for a fixed ``seed``.
    """
    return continuous_search(af, bounds, config, seed)[0]


@attrs.define(frozen=True)
class MixedSpace:
    """Discrete dimensions (each a sequence of allowed values) followed by a
    continuous box. Points are laid out discrete part first."""

    discrete: Tuple[Tuple[float, ...], ...] = attrs.field(
        converter=lambda d: tuple(tuple(float(v) for v in values) for values in d)
    )
    bounds: np.ndarray = attrs.field(
        converter=lambda b: np.asarray(b, dtype=float).reshape(-1, 2), eq=False
    )

    def __attrs_post_init__(self):
        if not self.discrete and self.bounds.shape[0] == 0:
            raise ArgumentError("A mixed space needs at least one dimension")
        if any(len(values) == 0 for values in self.discrete):
            raise ArgumentError("Every discrete dimension needs at least one value")
        if self.bounds.shape[0]:
            _check_bounds(self.bounds)

    @property
    def cardinality(self) -> int:
        return int(np.prod([len(values) for values in self.discrete]))

    def enumerate_or_sample(self, limit: int, rng: np.random.Generator) -> np.ndarray:
        """Every discrete combination, or ``limit`` uniform draws if there
        are more."""
        if self.cardinality <= limit:
            return np.array(list(itertools.product(*self.discrete)), dtype=float)
        columns = [
            np.asarray(values)[rng.integers(len(values), size=limit)] for values in self.discrete
        ]
        return np.column_stack(columns)


@attrs.define(frozen=True)
class MixedSearchResult:
    x: np.ndarray = attrs.field(eq=False)
    value: float
    #: Best value seen after each round.
    incumbents: Tuple[float, ...]


def mixed_search(
    af: BatchFunction, space: MixedSpace, config: AcquisitionConfig, seed: int
) -> MixedSearchResult:
    """Interleaved discrete/continuous maximization, keeping every round's
    incumbent."""
    if not space.discrete:
        x, value = continuous_search(af, space.bounds, config, derive_seed(seed, "continuous"))
        return MixedSearchResult(x=x, value=value, incumbents=(value,))
    rng = np.random.default_rng(derive_seed(seed, "mixed"))
    Dc = space.bounds.shape[0]
    lo, hi = space.bounds[:, 0], space.bounds[:, 1]
    xc = lo + (hi - lo) * rng.uniform(size=Dc)
    best_x: Optional[np.ndarray] = None
    best_value = -math.inf
    incumbents: List[float] = []
    for r in range(config.interleave_rounds):
        candidates = space.enumerate_or_sample(config.discrete_candidates, rng)
        points = np.hstack([candidates, np.tile(xc, (candidates.shape[0], 1))])
        values = _evaluate(af, points)
        i = int(np.argmax(values))
        xd, value = candidates[i], float(values[i])
        x = points[i]
        if Dc:

            def continuous_af(Xc: np.ndarray, xd=xd) -> np.ndarray:
                Xc = np.atleast_2d(Xc)
                return af(np.hstack([np.tile(xd, (Xc.shape[0], 1)), Xc]))

            xc, value_c = continuous_search(
                continuous_af,
                space.bounds,
                config,
                derive_seed(seed, "round", r),
                include=xc,
            )
            if value_c >= value:
                x, value = np.concatenate([xd, xc]), value_c
            else:
                xc = x[len(space.discrete) :]
        if best_x is None or value > best_value:
            best_x, best_value = x, value
        incumbents.append(best_value)
    assert best_x is not None
    return MixedSearchResult(x=best_x, value=best_value, incumbents=tuple(incumbents))


def optimize_acquisition_mixed(
    af: BatchFunction, space: MixedSpace, config: AcquisitionConfig, seed: int
) -> np.ndarray:
    """Maximize ``af`` over a mixed discrete/continuous space.

    Starts from a uniform continuous point and alternates a discrete step
    (the best of at most ``discrete_candidates`` combinations, all of them
    when there are few enough) with a continuous step, for
    ``interleave_rounds`` rounds. Without discrete dimensions this is
    :func:`optimize_acquisition_continuous` with a derived seed.
    """
    return mixed_search(af, space, config, seed).x


__all__ = [
    "MixedSearchResult",
    "MixedSpace",
    "continuous_search",
    "mixed_search",
    "optimize_acquisition_continuous",
    "optimize_acquisition_mixed",
    "pointwise",
]

