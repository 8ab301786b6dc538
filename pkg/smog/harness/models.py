"""
Surrogate models compared by the harness.

Every model id maps to a factory through a :class:`ModelRegistry`. The
default registry holds the four models of a campaign:

* ``smog``: the meta-learned prior of :mod:`smog.model`;
* ``ind-scaml``: the same model with every task block diagonal, so each
  objective is modelled on its own;
* ``ind-gp``: one single-output GP per objective, no metadata;
* ``mo-gp``: one multi-output GP with an equicorrelated task block, no
  metadata.

Surrogates standardize the target outputs themselves and predict on that
standardized scale, which is the scale the acquisition works on.
"""

import logging
from abc import ABC, abstractmethod
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import attrs
import numpy as np

from smog.benchmarks import Benchmark
from smog.data import MultiOutputDataset, standardize
from smog.exceptions import ArgumentError
from smog.gp import FittedGP, GPSpec, fit, posterior_at
from smog.mobo.acquisition import point_blocks
from smog.model import MetaTaskModel, SmogModel, fit_meta_tasks, fit_target, target_spec
from smog.priors import FUNCTION_VARIANCE_PRIOR
from smog.serialization import MetaModelStorage
from smog.stats import Stats
from smog.utils import derive_seed

from .config import ExperimentConfig

logger = logging.getLogger(__name__)

#: Points predicted per joint posterior; blocks of different chunks are
#: independent of each other.
PREDICT_CHUNK = 64


class Surrogate(ABC):
    """A model of the target objectives.

    :meth:`fit` returns a fitted copy and leaves the instance untouched, so
    one surrogate can serve concurrent repetitions.
    """

    @abstractmethod
    def fit(self, data: MultiOutputDataset, restarts: int, seed: int) -> "Surrogate":
        """Fit hyperparameters on the target ``data``."""

    @abstractmethod
    def _predict_chunk(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        pass

    def predict_blocks(self, X) -> Tuple[np.ndarray, np.ndarray]:
        """Standardized posterior means (Q×O) and per-point objective
        covariances (Q×O×O) at the rows of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        means, covs = [], []
        for start in range(0, X.shape[0], PREDICT_CHUNK):
            m, c = self._predict_chunk(X[start : start + PREDICT_CHUNK])
            means.append(m)
            covs.append(c)
        return np.concatenate(means), np.concatenate(covs)


@attrs.define(frozen=True, eq=False)
class SmogSurrogate(Surrogate):
    """SMOG on top of fitted meta-task models."""

    meta: Tuple[MetaTaskModel, ...] = attrs.field(converter=tuple)
    task_mode: str = "equicorrelated"
    noise_mode: str = "global"
    model: Optional[SmogModel] = None

    def fit(self, data: MultiOutputDataset, restarts: int, seed: int) -> "SmogSurrogate":
        spec = target_spec(data.dim, data.objective_count, self.task_mode, self.noise_mode)
        smog = fit_target(SmogModel.create(self.meta, spec), data, restarts=restarts, seed=seed)
        return attrs.evolve(self, model=smog)

    def _predict_chunk(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        if self.model is None:
            raise ArgumentError("Fit the surrogate before predicting")
        post = posterior_at(self.model.gp, X)
        return point_blocks(post, self.model.spec.objective_count)


@attrs.define(frozen=True, eq=False)
class IndependentGPSurrogate(Surrogate):
    """One single-output GP per objective with a learned signal variance."""

    gps: Tuple[FittedGP, ...] = ()

    @staticmethod
    def spec(dim: int) -> GPSpec:
        return GPSpec(
            dim,
            1,
            task_mode="diagonal",
            noise_mode="per-objective",
            learn_outputscale=True,
            outputscale_prior=FUNCTION_VARIANCE_PRIOR,
        )

    def fit(self, data: MultiOutputDataset, restarts: int, seed: int) -> "IndependentGPSurrogate":
        Y, _ = standardize(data.outputs)
        spec = self.spec(data.dim)
        gps = []
        for o in range(data.objective_count):
            column = MultiOutputDataset(data.inputs, Y[:, [o]])
            gps.append(fit(spec, column, restarts=restarts, seed=derive_seed(seed, "objective", o)))
        return attrs.evolve(self, gps=tuple(gps))

    def _predict_chunk(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        if not self.gps:
            raise ArgumentError("Fit the surrogate before predicting")
        posts = [posterior_at(gp, X) for gp in self.gps]
        means = np.column_stack([p.mean for p in posts])
        variances = np.column_stack([p.variance for p in posts])
        covs = np.zeros(variances.shape + (variances.shape[1],))
        idx = np.arange(variances.shape[1])
        covs[:, idx, idx] = variances
        return means, covs


@attrs.define(frozen=True, eq=False)
class MultiOutputGPSurrogate(Surrogate):
    """A multi-output GP with an equicorrelated task block and global noise."""

    gp: Optional[FittedGP] = None

    def fit(self, data: MultiOutputDataset, restarts: int, seed: int) -> "MultiOutputGPSurrogate":
        Y, _ = standardize(data.outputs)
        spec = GPSpec(
            data.dim, data.objective_count, task_mode="equicorrelated", noise_mode="global"
        )
        return attrs.evolve(self, gp=fit(spec, data.with_outputs(Y), restarts=restarts, seed=seed))

    def _predict_chunk(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        if self.gp is None:
            raise ArgumentError("Fit the surrogate before predicting")
        return point_blocks(posterior_at(self.gp, X), self.gp.spec.objective_count)


SurrogateFactory = Callable[[Sequence[MetaTaskModel]], Surrogate]


@attrs.define(frozen=True)
class ModelEntry:
    """A registered model: its id, its factory and, for meta-learning models,
    the task block structure of the meta-task GPs it needs."""

    model_id: str
    factory: SurrogateFactory = attrs.field(eq=False)
    meta_task_mode: Optional[str] = None

    @property
    def uses_metadata(self) -> bool:
        return self.meta_task_mode is not None


class ModelRegistry:
    """Maps model ids to surrogate factories.

    .. code-block:: python

        from smog.harness.models import default_registry

        @default_registry.register("my-model")
        def my_model(meta):
            return MyModelSurrogate()

    Factories receive the fitted meta-task models, an empty sequence for
    models without metadata.
    """

    def __init__(self) -> None:
        self._entries: Dict[str, ModelEntry] = {}

    def register(
        self, model_id: str, *, meta_task_mode: Optional[str] = None
    ) -> Callable[[SurrogateFactory], SurrogateFactory]:
        def wrapper(factory: SurrogateFactory) -> SurrogateFactory:
            if model_id in self._entries:
                logger.warning(f"Model id {model_id!r} is registered again, replacing it")
            self._entries[model_id] = ModelEntry(model_id, factory, meta_task_mode)
            return factory

        return wrapper

    def get(self, model_id: str) -> ModelEntry:
        try:
            return self._entries[model_id]
        except KeyError:
            raise ArgumentError(
                f"Unknown model id {model_id!r}; known ids are {self.ids()}"
            ) from None

    def ids(self) -> List[str]:
        return list(self._entries)


default_registry = ModelRegistry()


@default_registry.register("smog", meta_task_mode="equicorrelated")
def _smog(meta: Sequence[MetaTaskModel]) -> Surrogate:
    return SmogSurrogate(meta)


@default_registry.register("ind-scaml", meta_task_mode="diagonal")
def _ind_scaml(meta: Sequence[MetaTaskModel]) -> Surrogate:
    return SmogSurrogate(meta, task_mode="diagonal", noise_mode="per-objective")


@default_registry.register("ind-gp")
def _ind_gp(meta: Sequence[MetaTaskModel]) -> Surrogate:
    return IndependentGPSurrogate()


@default_registry.register("mo-gp")
def _mo_gp(meta: Sequence[MetaTaskModel]) -> Surrogate:
    return MultiOutputGPSurrogate()


def cache_subdir(meta_task_mode: str) -> str:
    """Cache sub-directory of the meta models with a given task structure."""
    return "meta" if meta_task_mode == "equicorrelated" else f"meta-{meta_task_mode}"


def meta_manifest(config: ExperimentConfig, benchmark: Benchmark, meta_task_mode: str) -> Dict:
    """What a cached set of meta models must have been fit on to be reused."""
    return {
        "benchmark": benchmark.id,
        "seed": config.seed,
        "noise_std": config.noise_std,
        "meta_restarts": config.meta_restarts,
        "task_mode": meta_task_mode,
    }


def sample_meta_datasets(
    config: ExperimentConfig, benchmark: Benchmark
) -> List[MultiOutputDataset]:
    return benchmark.sample_meta_data(
        seed=derive_seed(config.seed, "meta-data"), noise_std=config.noise_std
    )


def _fit_meta(
    config: ExperimentConfig,
    meta_datasets: Sequence[MultiOutputDataset],
    meta_task_mode: str,
    stats: Optional[Stats],
) -> List[MetaTaskModel]:
    return fit_meta_tasks(
        meta_datasets,
        seed=derive_seed(config.seed, "meta-fit"),
        restarts=config.meta_restarts,
        task_mode=meta_task_mode,
        threads=config.threads,
        stats=stats,
    )


def prepare_meta_models(
    config: ExperimentConfig,
    benchmark: Benchmark,
    meta_task_mode: str,
    meta_datasets: Optional[Sequence[MultiOutputDataset]] = None,
    stats: Optional[Stats] = None,
) -> List[MetaTaskModel]:
    """Meta-task models for ``benchmark``, read from ``config.meta_cache_dir``
    when a matching cache exists and fitted (then cached) otherwise.

    :raises ConfigError: if the cache was built for something else.
    """
    storage = None
    manifest = meta_manifest(config, benchmark, meta_task_mode)
    if config.meta_cache_dir is not None:
        storage = MetaModelStorage(config.meta_cache_dir, cache_subdir(meta_task_mode))
        if storage.exists():
            return storage.read(expected=manifest)
    if meta_datasets is None:
        meta_datasets = sample_meta_datasets(config, benchmark)
    meta = _fit_meta(config, meta_datasets, meta_task_mode, stats)
    if storage is not None:
        storage.write(meta, manifest)
    return meta


def build_model(
    model_id: str,
    meta_datasets: Optional[Sequence[MultiOutputDataset]],
    config: ExperimentConfig,
    *,
    meta_models: Optional[Sequence[MetaTaskModel]] = None,
    registry: ModelRegistry = default_registry,
    stats: Optional[Stats] = None,
) -> Surrogate:
    """An unfitted surrogate for ``model_id``.

    Meta-learning models fit their meta-task models on ``meta_datasets``
    unless ``meta_models`` are given; other models ignore both.

    :raises ArgumentError: for an unknown id, or a meta-learning model
        without metadata.
    """
    entry = registry.get(model_id)
    if not entry.uses_metadata:
        return entry.factory(())
    if meta_models is None:
        if meta_datasets is None:
            raise ArgumentError(f"Model {model_id!r} needs meta-task datasets")
        mode = entry.meta_task_mode or "equicorrelated"
        meta_models = _fit_meta(config, meta_datasets, mode, stats)
    return entry.factory(meta_models)


__all__ = [
    "IndependentGPSurrogate",
    "ModelEntry",
    "ModelRegistry",
    "MultiOutputGPSurrogate",
    "SmogSurrogate",
    "Surrogate",
    "build_model",
    "default_registry",
    "prepare_meta_models",
]
