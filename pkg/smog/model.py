"""
Meta-learned target prior for multi-objective optimization.

Every meta task gets its own multi-output GP (:func:`fit_meta_tasks`). Their
posteriors, evaluated once at the target inputs and cached, are combined
with transfer weights ``w[m, o]`` and a residual kernel ``k_t`` into the
target-task prior

    mean(x, o)             = Σ_m w[m, o] m̂_m(x, o)
    cov((x, o), (x', o'))  = k_t((x, o), (x', o')) + Σ_m w[m, o] w[m, o'] k̂_m((x, o), (x', o'))

which :func:`fit_target` conditions on the target data while optimizing the
residual hyperparameters, the noise and the weights. Meta-task
hyperparameters are never touched after :func:`fit_meta_tasks`.
"""

import logging
import threading
import time
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple, Union

import attrs
import numpy as np

from smog.data import MultiOutputDataset, StandardizationTransform, standardize
from smog.exceptions import ArgumentError, MetaTaskFitError, NumericalError
from smog.fitting import ParameterBlock, ParameterCodec, multi_start_maximize
from smog.gp import (
    META_RESTARTS,
    TARGET_RESTARTS,
    FittedGP,
    GaussianPrior,
    GPSpec,
    Hyperparameters,
    PosteriorGaussian,
    condition,
    fit,
    log_posterior_objective,
    posterior,
    posterior_at,
    posterior_blocks,
    posterior_mean,
    restart_points,
)
from smog.kernels import AugmentedInput, augment, multi_output_gram
from smog.priors import RESIDUAL_LENGTHSCALE_PRIOR
from smog.stats import Stats, default_stats
from smog.utils import content_hash, derive_seed, make_rng, resolve_thread_count

logger = logging.getLogger(__name__)

CACHE_HIT_STAT = "smog/meta_cache_hit"
CACHE_MISS_STAT = "smog/meta_cache_miss"
#: Incremented once per posterior evaluation of a meta-task GP.
META_POSTERIOR_STAT = "smog/meta_posterior_evaluations"
META_FAILURE_STAT = "smog/meta_fit_failures"

#: Query sets kept per meta task; the least recently used one is dropped first.
CACHE_CAPACITY = 32
CACHE_EVICTION_STAT = "smog/meta_cache_evictions"

#: Transfer weights start at this value plus Uniform(-0.1, 0.1).
WEIGHT_INIT = 0.5
WEIGHT_INIT_SPREAD = 0.1


@attrs.define(frozen=True, eq=False)
class MetaTaskModel:
    """A GP fit on one meta task plus a cache of its posterior at query sets.

    ``transform`` is the standardization applied to the task's outputs
    before fitting; the cached posteriors stay on the standardized scale.
    At most ``cache_capacity`` query sets are kept.
    """

    index: int
    gp: FittedGP
    transform: StandardizationTransform
    stats: Stats = attrs.field(default=default_stats, repr=False)
    cache_capacity: int = attrs.field(
        default=CACHE_CAPACITY, validator=attrs.validators.ge(1), repr=False
    )
    _cache: "OrderedDict[str, Tuple[np.ndarray, np.ndarray]]" = attrs.field(
        factory=OrderedDict, init=False, repr=False
    )
    _lock: threading.Lock = attrs.field(factory=threading.Lock, init=False, repr=False)

    @property
    def objective_count(self) -> int:
        return self.gp.spec.objective_count

    @property
    def cache_size(self) -> int:
        with self._lock:
            return len(self._cache)

    def cached(
        self, X: np.ndarray, objectives: np.ndarray
    ) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        with self._lock:
            return self._lookup(_query_key(X, objectives))

    def clear_cache(self) -> None:
        with self._lock:
            self._cache.clear()

    def _lookup(self, key: str) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
        return hit

    def _store(self, key: str, entry: Tuple[np.ndarray, np.ndarray]) -> None:
        self._cache[key] = entry
        while len(self._cache) > self.cache_capacity:
            self._cache.popitem(last=False)
            self.stats.inc(CACHE_EVICTION_STAT)


def _query_key(X: np.ndarray, objectives: np.ndarray) -> str:
    return content_hash(np.asarray(X, dtype=float), np.asarray(objectives, dtype=np.int64))


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def cache_at(
    meta: MetaTaskModel, X: np.ndarray, objectives: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Posterior mean and covariance of ``meta`` at an augmented query set.

    The first call for a given ``(X, objectives)`` evaluates the posterior
    and stores it; later calls with identical content return the stored
    arrays until the entry is evicted as least recently used.
    """
    key = _query_key(X, objectives)
    with meta._lock:
        hit = meta._lookup(key)
        if hit is not None:
            meta.stats.inc(CACHE_HIT_STAT)
            return hit
        meta.stats.inc(CACHE_MISS_STAT)
        meta.stats.inc(META_POSTERIOR_STAT)
        mean, cov = posterior_blocks(meta.gp, X, objectives)
        entry = (_frozen(mean), _frozen(cov))
        meta._store(key, entry)
        return entry


def _meta_mean(meta: MetaTaskModel, X: np.ndarray, objectives: np.ndarray) -> np.ndarray:
    hit = meta.cached(X, objectives)
    if hit is not None:
        meta.stats.inc(CACHE_HIT_STAT)
        return hit[0]
    meta.stats.inc(META_POSTERIOR_STAT)
    return posterior_mean(meta.gp, X, objectives)


def _meta_covariance(
    meta: MetaTaskModel, XA: np.ndarray, oA: np.ndarray, XB: np.ndarray, oB: np.ndarray
) -> np.ndarray:
    if XA.shape == XB.shape and np.array_equal(XA, XB) and np.array_equal(oA, oB):
        hit = meta.cached(XA, oA)
        if hit is not None:
            meta.stats.inc(CACHE_HIT_STAT)
            return hit[1]
        meta.stats.inc(META_POSTERIOR_STAT)
        return posterior_blocks(meta.gp, XA, oA)[1]
    meta.stats.inc(META_POSTERIOR_STAT)
    return posterior_blocks(meta.gp, XA, oA, XB, oB)[1]


def meta_spec(dim: int, objective_count: int, task_mode: str = "equicorrelated") -> GPSpec:
    """Structure of a meta-task GP: global noise, default hyperpriors."""
    return GPSpec(dim, objective_count, task_mode=task_mode, noise_mode="global")


def _fit_one(
    index: int,
    data: MultiOutputDataset,
    task_mode: str,
    restarts: int,
    seed: int,
    stats: Stats,
) -> MetaTaskModel:
    Y, transform = standardize(data.outputs)
    spec = meta_spec(data.dim, data.objective_count, task_mode)
    try:
        gp = fit(
            spec, data.with_outputs(Y), restarts=restarts, seed=derive_seed(seed, "meta", index)
        )
    except NumericalError as ex:
        raise MetaTaskFitError(task_index=index) from ex
    return MetaTaskModel(index=index, gp=gp, transform=transform, stats=stats)


def fit_meta_tasks(
    meta_data: Sequence[MultiOutputDataset],
    seed: int = 0,
    restarts: int = META_RESTARTS,
    task_mode: str = "equicorrelated",
    threads: Optional[int] = None,
    stats: Optional[Stats] = None,
) -> List[MetaTaskModel]:
    """Fit one GP per meta task, concurrently and independently.

    Each task draws its restarts from a stream derived from ``(seed, index)``
    so results don't depend on scheduling. Tasks whose fit fails are logged,
    counted and left out of the returned list.
    """
    stats = stats or default_stats
    for i, data in enumerate(meta_data):
        if data.n == 0:
            raise ArgumentError(f"Meta task {i} has no observations")
    if not meta_data:
        return []
    start = time.perf_counter()
    logger.info(f"Fitting {len(meta_data)} meta-task models")
    workers = min(resolve_thread_count(threads), len(meta_data))
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [
            executor.submit(_fit_one, i, data, task_mode, restarts, seed, stats)
            for i, data in enumerate(meta_data)
        ]
        models: List[MetaTaskModel] = []
        for future in futures:
            try:
                models.append(future.result())
            except MetaTaskFitError as ex:
                stats.inc(META_FAILURE_STAT)
                logger.warning(f"Excluding meta task {ex.task_index}: {ex.__cause__}")
    logger.info(
        f"Fitted {len(models)}/{len(meta_data)} meta-task models "
        f"in {time.perf_counter() - start:.2f}s"
    )
    return models


def refit_meta_task(
    meta: MetaTaskModel,
    data: MultiOutputDataset,
    seed: int = 0,
    restarts: int = META_RESTARTS,
) -> MetaTaskModel:
    """Refit ``meta`` on ``data``; the returned model starts with an empty cache."""
    return _fit_one(meta.index, data, meta.gp.spec.task_mode, restarts, seed, meta.stats)


def _finite_matrix(value) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim != 2 or not np.all(np.isfinite(arr)):
        raise ArgumentError("Transfer weights must be a finite M×O matrix")
    arr.setflags(write=False)
    return arr


@attrs.define(frozen=True, eq=False)
class TransferWeights:
    """The M×O matrix of unconstrained weights ``w[m, o]``."""

    values: np.ndarray = attrs.field(converter=_finite_matrix)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]

    @classmethod
    def zeros(cls, meta_count: int, objective_count: int) -> "TransferWeights":
        return cls(np.zeros((meta_count, objective_count)))

    @classmethod
    def constant(cls, meta_count: int, objective_count: int, value: float) -> "TransferWeights":
        return cls(np.full((meta_count, objective_count), float(value)))


@attrs.define(frozen=True, eq=False)
class SmogPrior(GaussianPrior):
    """Weighted sum of meta-task posteriors plus the residual kernel."""

    meta: Tuple[MetaTaskModel, ...]
    weights: np.ndarray
    residual: Hyperparameters
    stats: Stats = attrs.field(default=default_stats, repr=False)

    def mean(self, X, objectives):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        objectives = np.asarray(objectives, dtype=int)
        out = np.zeros(objectives.size)
        for m, meta in enumerate(self.meta):
            out += self.weights[m, objectives] * _meta_mean(meta, X, objectives)
        return out

    def covariance(self, XA, oA, XB, oB):
        oA = np.asarray(oA, dtype=int)
        oB = np.asarray(oB, dtype=int)
        out = multi_output_gram(
            XA, oA, XB, oB, self.residual.input, self.residual.task, self.stats
        )
        for m, meta in enumerate(self.meta):
            scale = np.outer(self.weights[m, oA], self.weights[m, oB])
            out += scale * _meta_covariance(meta, XA, oA, XB, oB)
        return out


def target_spec(
    dim: int,
    objective_count: int,
    task_mode: str = "equicorrelated",
    noise_mode: str = "global",
) -> GPSpec:
    """Structure of the residual target kernel."""
    return GPSpec(
        dim,
        objective_count,
        task_mode=task_mode,
        noise_mode=noise_mode,
        lengthscale_prior=RESIDUAL_LENGTHSCALE_PRIOR,
    )


@attrs.define(frozen=True, eq=False)
class SmogModel:
    """Meta models, transfer weights and residual kernel, conditioned on the
    target data.

    ``gp`` holds the target GP whose prior is the :class:`SmogPrior`; target
    outputs are stored standardized with ``transform``.
    """

    meta: Tuple[MetaTaskModel, ...] = attrs.field(converter=tuple)
    weights: TransferWeights
    spec: GPSpec
    residual: Hyperparameters
    transform: StandardizationTransform
    gp: FittedGP

    def __attrs_post_init__(self):
        expected = (len(self.meta), self.spec.objective_count)
        if self.weights.shape != expected:
            raise ArgumentError(
                f"Transfer weights must have shape {expected}, got {self.weights.shape}"
            )
        for meta in self.meta:
            if meta.objective_count != self.spec.objective_count:
                raise ArgumentError(
                    f"Meta task {meta.index} has {meta.objective_count} objectives, "
                    f"expected {self.spec.objective_count}"
                )

    @property
    def meta_count(self) -> int:
        return len(self.meta)

    @property
    def target_data(self) -> MultiOutputDataset:
        """Target data on the original output scale."""
        data = self.gp.data
        return data.with_outputs(self.transform.invert(data.outputs)) if data.n else data

    def prior(self, stats: Optional[Stats] = None) -> SmogPrior:
        return _smog_prior(self.meta, self.weights.values, self.residual, stats)

    @classmethod
    def create(
        cls,
        meta: Sequence[MetaTaskModel],
        spec: GPSpec,
        weights: Optional[Union[TransferWeights, np.ndarray]] = None,
        residual: Optional[Hyperparameters] = None,
    ) -> "SmogModel":
        """A SMOG model with no target data yet (weights default to zero)."""
        if weights is None:
            weights = TransferWeights.zeros(len(meta), spec.objective_count)
        elif not isinstance(weights, TransferWeights):
            weights = TransferWeights(weights)
        residual = residual or Hyperparameters.defaults(spec)
        prior = _smog_prior(tuple(meta), weights.values, residual)
        gp = condition(
            FittedGP.prior_only(spec, residual, prior),
            MultiOutputDataset.empty(spec.input_dim, spec.objective_count),
        )
        return cls(
            meta=meta,
            weights=weights,
            spec=spec,
            residual=residual,
            transform=StandardizationTransform.identity(spec.objective_count),
            gp=gp,
        )


def _smog_prior(
    meta: Tuple[MetaTaskModel, ...],
    weights: np.ndarray,
    residual: Hyperparameters,
    stats: Optional[Stats] = None,
) -> SmogPrior:
    return SmogPrior(meta=meta, weights=weights, residual=residual, stats=stats or default_stats)


def target_prior(smog: SmogModel, a: AugmentedInput, b: AugmentedInput) -> Tuple[float, float]:
    """Prior mean at ``a`` and prior covariance between ``a`` and ``b``."""
    for point in (a, b):
        if point.x.size != smog.spec.input_dim:
            raise ArgumentError(f"Expected points of dimension {smog.spec.input_dim}")
        if point.objective >= smog.spec.objective_count:
            raise ArgumentError(
                f"Objective index {point.objective} out of range [0, {smog.spec.objective_count})"
            )
    prior = smog.prior()
    XA, oA = a.x.reshape(1, -1), np.array([a.objective])
    XB, oB = b.x.reshape(1, -1), np.array([b.objective])
    return float(prior.mean(XA, oA)[0]), float(prior.covariance(XA, oA, XB, oB)[0, 0])


def condition_target(
    smog: SmogModel,
    data: MultiOutputDataset,
    weights: Optional[Union[TransferWeights, np.ndarray]] = None,
    residual: Optional[Hyperparameters] = None,
    standardize_outputs: bool = True,
) -> SmogModel:
    """Condition on target ``data`` with fixed weights and residual
    hyperparameters (defaulting to the model's current ones)."""
    if weights is None:
        weights = smog.weights
    elif not isinstance(weights, TransferWeights):
        weights = TransferWeights(weights)
    residual = residual or smog.residual
    if data.n and standardize_outputs:
        Y, transform = standardize(data.outputs)
        data = data.with_outputs(Y)
    else:
        transform = StandardizationTransform.identity(smog.spec.objective_count)
    prior = _smog_prior(smog.meta, weights.values, residual)
    if data.n:
        Xa, oa = augment(data.inputs, smog.spec.objective_count)
        for meta in smog.meta:
            cache_at(meta, Xa, oa)
    gp = condition(FittedGP.prior_only(smog.spec, residual, prior), data)
    return attrs.evolve(smog, weights=weights, residual=residual, transform=transform, gp=gp)


def _weight_starts(
    codec_starts: List[np.ndarray], size: int, seed: int
) -> List[np.ndarray]:
    rng = make_rng(seed, "weights")
    out = []
    for start in codec_starts:
        w = WEIGHT_INIT + rng.uniform(-WEIGHT_INIT_SPREAD, WEIGHT_INIT_SPREAD, size)
        out.append(np.concatenate([start, w]))
    return out


def fit_target(
    smog: SmogModel,
    target_data: MultiOutputDataset,
    restarts: int = TARGET_RESTARTS,
    seed: int = 0,
    standardize_outputs: bool = True,
) -> SmogModel:
    """Optimize the residual hyperparameters, noise and transfer weights on
    the target data, then condition on it.

    Meta-task posteriors at the target inputs are computed once and served
    from the meta caches for every objective evaluation.

    :raises NumericalError: if every restart fails.
    """
    if restarts < 1:
        raise ArgumentError(f"restarts must be >= 1, got {restarts}")
    spec = smog.spec
    if target_data.n and (
        target_data.dim != spec.input_dim or target_data.objective_count != spec.objective_count
    ):
        raise ArgumentError("Target data does not match the model's dimensions")
    if target_data.n == 0:
        return condition_target(smog, target_data, residual=Hyperparameters.defaults(spec))

    if standardize_outputs:
        Y, transform = standardize(target_data.outputs)
    else:
        Y, transform = target_data.outputs, StandardizationTransform.identity(spec.objective_count)
    data = target_data.with_outputs(Y)
    Xa, oa = augment(data.inputs, spec.objective_count)
    for meta in smog.meta:
        cache_at(meta, Xa, oa)

    M, O = smog.meta_count, spec.objective_count
    base_codec = spec.codec()
    codec = ParameterCodec(
        list(base_codec.blocks) + [ParameterBlock("weights", M * O, "identity")]
    )
    priors = spec.priors()
    defaults = Hyperparameters.defaults(spec)
    base = FittedGP.prior_only(spec, defaults, _smog_prior(smog.meta, np.zeros((M, O)), defaults))

    def unpack(u: np.ndarray) -> Tuple[Hyperparameters, np.ndarray]:
        values = codec.unpack(u)
        return Hyperparameters.from_groups(spec, values), values["weights"].reshape(M, O)

    def objective(u: np.ndarray) -> float:
        params, weights = unpack(u)
        model = base.with_params(params, _smog_prior(smog.meta, weights, params))
        return log_posterior_objective(model, data, priors)

    starts = restart_points(
        base_codec,
        defaults.groups(),
        {p.target: p for p in priors},
        restarts,
        make_rng(seed, "target-fit"),
    )
    starts = _weight_starts(starts, M * O, seed)
    start = time.perf_counter()
    result = multi_start_maximize(objective, starts)
    logger.info(
        f"Target fit over {M} meta tasks reached log posterior {result.value:.6g} "
        f"in {time.perf_counter() - start:.2f}s"
    )
    params, weights = unpack(result.x)
    prior = _smog_prior(smog.meta, weights, params)
    gp = condition(FittedGP.prior_only(spec, params, prior), data)
    return attrs.evolve(
        smog,
        weights=TransferWeights(weights),
        residual=params,
        transform=transform,
        gp=gp,
    )


def smog_posterior(
    smog: SmogModel,
    query: Union[Sequence[AugmentedInput], Tuple[np.ndarray, np.ndarray]],
) -> PosteriorGaussian:
    """Posterior of the target task on the standardized output scale."""
    return posterior(smog.gp, query)


def smog_predict(smog: SmogModel, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance at the rows of ``X`` on the original
    output scale, each an N×O matrix."""
    post = posterior_at(smog.gp, np.atleast_2d(np.asarray(X, dtype=float)))
    O = smog.spec.objective_count
    mean = smog.transform.invert(post.mean_matrix(O))
    variance = smog.transform.invert_variance(post.variance_matrix(O))
    return mean, variance


def timing_probe(
    meta_counts: Sequence[int],
    meta_observations: int = 32,
    target_observations: int = 8,
    objective_count: int = 2,
    repeats: int = 3,
    restarts: int = 2,
    seed: int = 0,
) -> List[Dict[str, float]]:
    """Wall-times of prior construction and target fitting for each ``M``.

    Meta models are fit once per ``M`` outside the timed region. Each
    repetition times the meta posterior caching at the target inputs, the
    target fit, and a second caching pass that is served from the cache.
    The median over ``repeats`` is reported.
    """
    from smog.benchmarks import HartmannBenchmark

    rows: List[Dict[str, float]] = []
    for M in meta_counts:
        bench = HartmannBenchmark(
            meta_tasks=M, objectives=objective_count, meta_observations=meta_observations
        )
        meta_data = bench.sample_meta_data(seed=derive_seed(seed, "timing", M))
        meta = fit_meta_tasks(meta_data, seed=seed, restarts=1)
        rng = make_rng(seed, "timing-target", M)
        X = rng.uniform(size=(target_observations, bench.dim))
        target = MultiOutputDataset(X, bench.evaluate(X))
        Xa, oa = augment(X, objective_count)
        prior_times, fit_times, cached_times = [], [], []
        for _ in range(repeats):
            for model in meta:
                model.clear_cache()
            t0 = time.perf_counter()
            for model in meta:
                cache_at(model, Xa, oa)
            t1 = time.perf_counter()
            spec = target_spec(bench.dim, objective_count)
            fit_target(SmogModel.create(meta, spec), target, restarts=restarts, seed=seed)
            t2 = time.perf_counter()
            for model in meta:
                cache_at(model, Xa, oa)
            t3 = time.perf_counter()
            prior_times.append(t1 - t0)
            fit_times.append(t2 - t1)
            cached_times.append(t3 - t2)
        prior_s = float(np.median(prior_times))
        fit_s = float(np.median(fit_times))
        rows.append(
            {
                "meta_tasks": M,
                "prior_seconds": prior_s,
                "fit_seconds": fit_s,
                "total_seconds": prior_s + fit_s,
                "cached_prior_seconds": float(np.median(cached_times)),
            }
        )
        logger.info(f"Timing M={M}: {prior_s + fit_s:.3f}s")
    return rows


def time_ratios(rows: Sequence[Dict[str, float]]) -> List[float]:
    """Ratios of ``total_seconds`` between consecutive rows."""
    out = []
    for prev, cur in zip(rows, rows[1:]):
        out.append(cur["total_seconds"] / max(prev["total_seconds"], 1e-9))
    return out


__all__ = [
    "MetaTaskModel",
    "SmogModel",
    "SmogPrior",
    "TransferWeights",
    "cache_at",
    "condition_target",
    "fit_meta_tasks",
    "fit_target",
    "meta_spec",
    "refit_meta_task",
    "smog_posterior",
    "smog_predict",
    "target_prior",
    "target_spec",
    "time_ratios",
    "timing_probe",
]
