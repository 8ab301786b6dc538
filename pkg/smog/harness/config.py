"""
Experiment configuration.

A campaign is described by one :class:`ExperimentConfig`, usually read from
a JSON document whose keys mirror its attribute names:

.. code-block:: json

    {
        "benchmark": "hartmann6:M=8,O=2,n_meta=64",
        "models": ["smog", "ind-gp"],
        "iterations": 15,
        "repetitions": 10,
        "acquisition": {"mc_samples": 128}
    }
"""

import json
import os
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import attrs

from smog.benchmarks import Benchmark, parse_benchmark
from smog.exceptions import ArgumentError, ConfigError
from smog.gp import META_RESTARTS, TARGET_RESTARTS
from smog.mobo.acquisition import AcquisitionConfig
from smog.utils import as_list

#: Model ids understood by the harness, in the order they are documented.
MODEL_IDS = ("smog", "ind-scaml", "ind-gp", "mo-gp")


def _to_acquisition(value: Union[None, AcquisitionConfig, Mapping[str, Any]]) -> AcquisitionConfig:
    if value is None:
        return AcquisitionConfig()
    if isinstance(value, AcquisitionConfig):
        return value
    if not isinstance(value, Mapping):
        raise ConfigError(f"'acquisition' must be an object, got {type(value).__name__}")
    known = {a.name for a in attrs.fields(AcquisitionConfig)}
    unknown = sorted(set(value) - known)
    if unknown:
        raise ConfigError(f"Unknown acquisition settings: {unknown}")
    return AcquisitionConfig(**value)


def _optional_int(value: Optional[Any]) -> Optional[int]:
    return None if value is None else int(value)


def _optional_str(value: Optional[Any]) -> Optional[str]:
    return None if value is None else os.fspath(value)


def _at_least(minimum: int):
    def check(instance, attribute, value) -> None:
        if value is not None and value < minimum:
            raise ConfigError(f"'{attribute.name}' must be >= {minimum}, got {value}")

    return check


def _jsonable(instance, field, value: Any) -> Any:
    return list(value) if isinstance(value, tuple) else value


def _check_models(instance, attribute, value: Tuple[str, ...]) -> None:
    if not value:
        raise ConfigError("At least one model id is required")
    unknown = [m for m in value if m not in MODEL_IDS]
    if unknown:
        raise ConfigError(f"Unknown model ids {unknown}; known ids are {list(MODEL_IDS)}")
    if len(set(value)) != len(value):
        raise ConfigError(f"Duplicate model ids in {list(value)}")


@attrs.define(frozen=True)
class ExperimentConfig:
    """Parameters of a benchmark campaign.

    ``meta_tasks``, ``objectives`` and ``meta_observations`` override the
    values carried by the ``benchmark`` id. ``threads`` of ``None`` defers to
    the ``SMOG_THREADS`` environment variable.

    >>> config = ExperimentConfig("sinusoidal", models=["ind-gp"], repetitions=2)
    >>> config.models, config.iterations
    (('ind-gp',), 15)
    """

    benchmark: str = attrs.field(converter=str)
    models: Tuple[str, ...] = attrs.field(
        default=("smog", "ind-gp"),
        converter=lambda v: tuple(str(m) for m in as_list(v)),
        validator=_check_models,
    )
    iterations: int = attrs.field(default=15, converter=int, validator=_at_least(0))
    repetitions: int = attrs.field(default=10, converter=int, validator=_at_least(1))
    seed: int = attrs.field(default=0, converter=int)
    meta_tasks: Optional[int] = attrs.field(
        default=None, converter=_optional_int, validator=_at_least(1)
    )
    objectives: Optional[int] = attrs.field(
        default=None, converter=_optional_int, validator=_at_least(1)
    )
    meta_observations: Optional[int] = attrs.field(
        default=None, converter=_optional_int, validator=_at_least(1)
    )
    noise_std: float = attrs.field(default=0.0, converter=float)
    meta_restarts: int = attrs.field(default=META_RESTARTS, converter=int, validator=_at_least(1))
    target_restarts: int = attrs.field(
        default=TARGET_RESTARTS, converter=int, validator=_at_least(1)
    )
    acquisition: AcquisitionConfig = attrs.field(
        factory=AcquisitionConfig, converter=_to_acquisition
    )
    output_dir: str = attrs.field(default="results", converter=os.fspath)
    meta_cache_dir: Optional[str] = attrs.field(default=None, converter=_optional_str)
    #: Write measured wall times to the CSV; off by default so reruns give
    #: identical bytes.
    record_wall_time: bool = attrs.field(default=False, converter=bool)
    threads: Optional[int] = attrs.field(
        default=None, converter=_optional_int, validator=_at_least(0)
    )

    @noise_std.validator
    def _check_noise(self, attribute, value: float) -> None:
        if not value >= 0:
            raise ConfigError(f"'noise_std' must be >= 0, got {value}")

    def __attrs_post_init__(self):
        self.make_benchmark()

    def make_benchmark(self) -> Benchmark:
        """The benchmark instance, seeded with the root seed.

        :raises ConfigError: if the benchmark id or an override is invalid.
        """
        try:
            return parse_benchmark(
                self.benchmark,
                seed=self.seed,
                meta_tasks=self.meta_tasks,
                objectives=self.objectives,
                meta_observations=self.meta_observations,
            )
        except ArgumentError as ex:
            raise ConfigError(str(ex)) from ex

    def replace(self, **changes: Any) -> "ExperimentConfig":
        """A copy with ``changes`` applied; ``None`` values are ignored."""
        changes = {k: v for k, v in changes.items() if v is not None}
        try:
            return attrs.evolve(self, **changes)
        except (TypeError, ValueError) as ex:
            if isinstance(ex, ConfigError):
                raise
            raise ConfigError(str(ex)) from ex

    def to_dict(self) -> Dict[str, Any]:
        """A JSON-compatible document accepted by :meth:`from_dict`."""
        return attrs.asdict(self, value_serializer=_jsonable)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], path: Optional[str] = None) -> "ExperimentConfig":
        """Build a config from a parsed JSON document.

        :raises ConfigError: on unknown keys, a missing ``benchmark`` or an
            invalid value.
        """
        if not isinstance(data, Mapping):
            raise ConfigError("The configuration must be a JSON object", path=path)
        known = {a.name for a in attrs.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {unknown}", path=path)
        if "benchmark" not in data:
            raise ConfigError("The configuration needs a 'benchmark' id", path=path)
        try:
            return cls(**data)
        except ConfigError as ex:
            if ex.path is None and path is not None:
                raise ConfigError(str(ex), path=path) from ex
            raise
        except (TypeError, ValueError) as ex:
            raise ConfigError(f"Invalid configuration: {ex}", path=path) from ex

    @classmethod
    def from_file(cls, path: Union[str, os.PathLike]) -> "ExperimentConfig":
        """Read a JSON configuration file.

        :raises ConfigError: if the file is missing or isn't valid JSON.
        """
        path = os.fspath(path)
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"Configuration file not found: {path}", path=path)
        except (OSError, ValueError) as ex:
            raise ConfigError(f"Can't read configuration {path}: {ex}", path=path)
        return cls.from_dict(data, path=path)
