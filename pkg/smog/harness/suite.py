"""
Multi-model, multi-seed campaigns and their hypervolume-gap tables.

The gap of a row is its hypervolume's deficit to the best hypervolume
observed anywhere in the suite, over every model, repetition and
iteration. Tables report the mean gap per model and iteration with the
standard error ``std / sqrt(repetitions)``.
"""

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import attrs
import numpy as np

from smog.exceptions import ArgumentError, ConfigError
from smog.mobo.pareto import hv_gap, pareto_front
from smog.stats import Stats, default_stats
from smog.utils import derive_seed, resolve_thread_count

from .config import ExperimentConfig
from .loop import FALLBACK_STAT, RunRecord, run_bo_loop
from .models import (
    ModelRegistry,
    Surrogate,
    build_model,
    default_registry,
    prepare_meta_models,
    sample_meta_datasets,
)

logger = logging.getLogger(__name__)

#: Config fields the ablation sweeps can vary.
ABLATION_PARAMETERS = ("meta_tasks", "objectives", "meta_observations")


@attrs.define(frozen=True)
class ResultRow:
    """One CSV row: a run's hypervolume and gap at one iteration."""

    model: str
    benchmark: str
    seed: int
    iteration: int
    hv: float
    hv_gap: float
    elapsed_ms: float


@attrs.define(frozen=True)
class GapRow:
    """Mean hypervolume gap of a model at one iteration."""

    model: str
    iteration: int
    mean_gap: float
    stderr: float
    repetitions: int


@attrs.define(frozen=True)
class SuiteResult:
    config: ExperimentConfig
    records: Tuple[RunRecord, ...] = attrs.field(converter=tuple)
    best_hv: float
    rows: Tuple[ResultRow, ...] = attrs.field(converter=tuple)
    table: Tuple[GapRow, ...] = attrs.field(converter=tuple)

    @property
    def fallbacks(self) -> Dict[str, int]:
        """Random-point fallbacks per model."""
        out: Dict[str, int] = {}
        for record in self.records:
            out[record.model] = out.get(record.model, 0) + record.fallbacks
        return out


def repetition_seed(config: ExperimentConfig, repetition: int) -> int:
    """Seed of one repetition; shared by every model so that they start
    from the same random point."""
    return derive_seed(config.seed, "repetition", repetition)


def best_hypervolume(records: Iterable[RunRecord]) -> float:
    hvs = [row.hv for record in records for row in record.rows]
    if not hvs:
        raise ArgumentError("No rows to take the best hypervolume of")
    return max(hvs)


def result_rows(records: Sequence[RunRecord], best_hv: float) -> List[ResultRow]:
    """CSV rows of ``records``, sorted by model, seed and iteration."""
    out = [
        ResultRow(
            record.model,
            record.benchmark,
            row.seed,
            row.iteration,
            row.hv,
            hv_gap(row.hv, best_hv),
            row.elapsed_ms,
        )
        for record in records
        for row in record.rows
    ]
    out.sort(key=lambda r: (r.model, r.seed, r.iteration))
    return out


def aggregate(rows: Iterable[ResultRow]) -> List[GapRow]:
    """Mean gap and standard error per model and iteration.

    The standard error of a single repetition is reported as 0.

    >>> rows = [ResultRow("a", "b", s, 0, 1.0, g, 0.0) for s, g in [(1, 1.0), (2, 3.0)]]
    >>> aggregate(rows)[0].mean_gap, aggregate(rows)[0].stderr
    (2.0, 1.0)
    """
    groups: Dict[Tuple[str, int], List[float]] = {}
    for row in rows:
        groups.setdefault((row.model, row.iteration), []).append(row.hv_gap)
    table = []
    for (model, iteration), gaps in sorted(groups.items()):
        values = np.asarray(gaps)
        if values.size > 1:
            stderr = float(values.std(ddof=1) / math.sqrt(values.size))
        else:
            stderr = 0.0
        table.append(GapRow(model, iteration, float(values.mean()), stderr, values.size))
    return table


def _surrogates(
    config: ExperimentConfig, registry: ModelRegistry, stats: Stats
) -> Dict[str, Surrogate]:
    benchmark = config.make_benchmark()
    datasets = None
    meta_by_mode: Dict[str, list] = {}
    out = {}
    for model_id in config.models:
        entry = registry.get(model_id)
        meta = None
        if entry.meta_task_mode is not None:
            if entry.meta_task_mode not in meta_by_mode:
                if datasets is None:
                    datasets = sample_meta_datasets(config, benchmark)
                meta_by_mode[entry.meta_task_mode] = prepare_meta_models(
                    config, benchmark, entry.meta_task_mode, datasets, stats
                )
            meta = meta_by_mode[entry.meta_task_mode]
        out[model_id] = build_model(
            model_id, datasets, config, meta_models=meta, registry=registry, stats=stats
        )
    return out


def run_suite(
    config: ExperimentConfig,
    registry: ModelRegistry = default_registry,
    stats: Optional[Stats] = None,
) -> SuiteResult:
    """Run every model of ``config`` for every repetition.

    Meta-task models are fitted (or loaded from the cache) once per task
    structure and shared by all repetitions. Repetitions run concurrently;
    the result doesn't depend on their scheduling.
    """
    stats = stats or default_stats
    start = time.perf_counter()
    benchmark = config.make_benchmark()
    surrogates = _surrogates(config, registry, stats)
    jobs = [
        (model_id, repetition_seed(config, r))
        for model_id in config.models
        for r in range(config.repetitions)
    ]
    workers = min(resolve_thread_count(config.threads), len(jobs))
    logger.info(f"Running {len(jobs)} campaigns on {benchmark.id} with {workers} workers")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [
            executor.submit(
                run_bo_loop, config, surrogates[model_id], benchmark, seed, model_id, stats
            )
            for model_id, seed in jobs
        ]
        records = [future.result() for future in futures]
    records.sort(key=lambda r: (r.model, r.seed))
    best = best_hypervolume(records)
    rows = result_rows(records, best)
    result = SuiteResult(config, records, best, rows, aggregate(rows))
    logger.info(
        f"Suite finished in {time.perf_counter() - start:.1f}s, best hypervolume {best:.6g}, "
        f"{stats.get(FALLBACK_STAT)} random fallbacks"
    )
    return result


def run_ablation(
    config: ExperimentConfig,
    parameter: str,
    values: Sequence[int],
    registry: ModelRegistry = default_registry,
    stats: Optional[Stats] = None,
) -> List[Tuple[int, SuiteResult]]:
    """One suite per value of ``parameter``, everything else fixed.

    :raises ConfigError: for a parameter that can't be swept, or a value the
        benchmark rejects.
    """
    if parameter not in ABLATION_PARAMETERS:
        raise ConfigError(
            f"Can't sweep {parameter!r}; choose one of {list(ABLATION_PARAMETERS)}"
        )
    if not values:
        raise ConfigError("An ablation needs at least one value")
    out = []
    for value in values:
        logger.info(f"Ablation {parameter}={value}")
        varied = config.replace(**{parameter: value})
        if config.meta_cache_dir is not None:
            cache = os.path.join(config.meta_cache_dir, f"{parameter}-{value}")
            varied = varied.replace(meta_cache_dir=cache)
        out.append((value, run_suite(varied, registry, stats)))
    return out


def final_front(record: RunRecord) -> np.ndarray:
    """Pareto front of every objective vector observed in one run."""
    return pareto_front(record.Y)


def median_run(records: Sequence[RunRecord], iteration: Optional[int] = None) -> RunRecord:
    """The run whose hypervolume at ``iteration`` (the last one by default)
    is the lower median; ties are broken by seed."""
    if not records:
        raise ArgumentError("No runs to pick the median of")
    if iteration is None:
        iteration = len(records[0].rows) - 1
    for record in records:
        if not 0 <= iteration < len(record.rows):
            raise ArgumentError(f"Run with seed {record.seed} has no iteration {iteration}")
    ordered = sorted(records, key=lambda r: (r.rows[iteration].hv, r.seed))
    return ordered[(len(ordered) - 1) // 2]
