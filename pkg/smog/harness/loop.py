"""
The Bayesian-optimization loop of one campaign run.
"""

import logging
import time
from typing import List, Optional, Tuple

import attrs
import numpy as np

from smog.benchmarks import Benchmark
from smog.data import MultiOutputDataset, standardize
from smog.exceptions import NumericalError
from smog.mobo.acquisition import AcquisitionConfig, log_ehvi_batch
from smog.mobo.optimize import MixedSpace, optimize_acquisition_mixed
from smog.mobo.pareto import ParetoState, infer_reference_point, pareto_front
from smog.stats import Stats, default_stats
from smog.utils import derive_seed, make_rng

from .config import ExperimentConfig
from .models import Surrogate

logger = logging.getLogger(__name__)

FALLBACK_STAT = "smog/bo_random_fallbacks"


@attrs.define(frozen=True)
class RunRow:
    """One evaluated point of a run."""

    seed: int
    iteration: int
    x: Tuple[float, ...] = attrs.field(converter=lambda v: tuple(float(e) for e in v))
    y: Tuple[float, ...] = attrs.field(converter=lambda v: tuple(float(e) for e in v))
    #: Hypervolume of everything observed up to and including this row.
    hv: float
    elapsed_ms: float = 0.0


def _dense_rows(instance, attribute, value: Tuple[RunRow, ...]) -> None:
    if [row.iteration for row in value] != list(range(len(value))):
        raise ValueError("Run rows must be numbered 0, 1, 2, ... without gaps")


@attrs.define(frozen=True)
class RunRecord:
    """Every iteration of one model on one benchmark for one seed."""

    model: str
    benchmark: str
    seed: int
    rows: Tuple[RunRow, ...] = attrs.field(converter=tuple, validator=_dense_rows)
    #: Iterations that fell back to a random point after a surrogate failure.
    fallbacks: int = 0

    @property
    def X(self) -> np.ndarray:
        return np.array([row.x for row in self.rows])

    @property
    def Y(self) -> np.ndarray:
        return np.array([row.y for row in self.rows])

    @property
    def hv_curve(self) -> np.ndarray:
        return np.array([row.hv for row in self.rows])


def _uniform(bounds: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    lo, hi = bounds[:, 0], bounds[:, 1]
    return lo + (hi - lo) * rng.uniform(size=lo.size)


def propose(
    surrogate: Surrogate,
    X: np.ndarray,
    Y: np.ndarray,
    bounds: np.ndarray,
    acquisition: AcquisitionConfig,
    restarts: int,
    seed: int,
) -> np.ndarray:
    """The next point to evaluate: the maximizer of log EHVI under the
    surrogate fitted on ``(X, Y)``.

    Observations are standardized and the reference point is inferred from
    their Pareto front, the scale on which the surrogate predicts.
    """
    Ys, _ = standardize(Y)
    reference = infer_reference_point(pareto_front(Ys))
    state = ParetoState.from_observations(Ys, reference)
    fitted = surrogate.fit(MultiOutputDataset(X, Y), restarts, derive_seed(seed, "fit"))

    def af(candidates: np.ndarray) -> np.ndarray:
        means, covs = fitted.predict_blocks(candidates)
        return log_ehvi_batch(means, covs, state, acquisition)

    space = MixedSpace((), bounds)
    return optimize_acquisition_mixed(af, space, acquisition, derive_seed(seed, "acquisition"))


def run_bo_loop(
    config: ExperimentConfig,
    surrogate: Surrogate,
    benchmark: Benchmark,
    seed: int,
    model_id: str = "",
    stats: Optional[Stats] = None,
) -> RunRecord:
    """Run ``config.iterations`` BO steps after one uniformly random point.

    The run is a deterministic function of ``seed``. An iteration whose
    surrogate fails numerically evaluates a uniformly random point instead;
    such fallbacks are logged and counted.
    """
    stats = stats or default_stats
    bounds = benchmark.bounds
    reference = benchmark.reference_point
    rows: List[RunRow] = []
    fallbacks = 0

    start = time.perf_counter()
    x = _uniform(bounds, make_rng(seed, "initial"))
    X = x.reshape(1, -1)
    Y = benchmark.evaluate(X)
    state = ParetoState.from_observations(Y, reference)
    elapsed = (time.perf_counter() - start) * 1e3
    rows.append(RunRow(seed, 0, x, Y[0], state.hypervolume, elapsed))

    for iteration in range(1, config.iterations + 1):
        start = time.perf_counter()
        try:
            x = propose(
                surrogate,
                X,
                Y,
                bounds,
                config.acquisition,
                config.target_restarts,
                derive_seed(seed, "iteration", iteration),
            )
        except (NumericalError, np.linalg.LinAlgError) as ex:
            logger.warning(
                f"{model_id or 'surrogate'} failed at iteration {iteration} "
                f"(seed {seed}), evaluating a random point: {ex}"
            )
            stats.inc(FALLBACK_STAT)
            fallbacks += 1
            x = _uniform(bounds, make_rng(seed, "fallback", iteration))
        y = benchmark.evaluate(x.reshape(1, -1))
        X = np.vstack([X, x])
        Y = np.vstack([Y, y])
        state = state.with_point(y[0])
        elapsed = (time.perf_counter() - start) * 1e3
        rows.append(RunRow(seed, iteration, x, y[0], state.hypervolume, elapsed))
        logger.info(
            f"{model_id} seed={seed} iteration {iteration}/{config.iterations}: "
            f"hv={state.hypervolume:.6g} ({elapsed:.0f} ms)"
        )

    if not config.record_wall_time:
        rows = [attrs.evolve(row, elapsed_ms=0.0) for row in rows]
    return RunRecord(model_id, benchmark.id, seed, rows, fallbacks)
