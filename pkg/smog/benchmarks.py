"""
Analytic benchmark families with related tasks.

``sinusoidal`` is a one-dimensional problem with three shifted sine
sources and a target that is a fixed weighted sum of them. ``hartmann6``
perturbs the classical Hartmann6 function with per-task coefficients and
per-objective input offsets.

The evaluators below use 1-based objective numbers and task labels
``1..M`` for meta tasks and ``"t"`` for the target. The benchmark classes
expose the maximization form the optimizer sees, on unit-box inputs.
"""

import math
import re
from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Tuple, Union

import attrs
import numpy as np

from smog.data import MultiOutputDataset
from smog.exceptions import ArgumentError
from smog.utils import make_rng

TaskLabel = Union[int, str]

TARGET = "t"

HARTMANN_A = np.array(
    [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ]
)
HARTMANN_P = 1e-4 * np.array(
    [
        [1312.0, 1696.0, 5569.0, 124.0, 8283.0, 5886.0],
        [2329.0, 4135.0, 8307.0, 3736.0, 1004.0, 9991.0],
        [2348.0, 1451.0, 3522.0, 2883.0, 3047.0, 6650.0],
        [4047.0, 8828.0, 8732.0, 5743.0, 1091.0, 381.0],
    ]
)
#: Classical Hartmann6 coefficients.
HARTMANN_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
#: Sampling interval of each per-task coefficient.
ALPHA_RANGES = ((1.0, 1.02), (1.18, 1.2), (2.0, 3.0), (3.2, 3.4))
#: Per-objective input offsets are drawn from Uniform(0, EPSILON_MAX).
EPSILON_MAX = 0.15
HARTMANN_DIM = 6

DEFAULT_META_OBSERVATIONS = 64


@attrs.define(frozen=True)
class SinusoidalSpec:
    """Constants of the sinusoidal family."""

    delta: float = math.pi / 12
    phi: float = math.pi / 6
    weights_obj1: Tuple[float, float, float] = (0.5, 0.35, 0.15)
    weights_obj2: Tuple[float, float, float] = (0.4, 0.4, 0.2)
    domain: Tuple[float, float] = (0.0, 2.0 * math.pi)

    def weights(self, objective: int) -> Tuple[float, float, float]:
        return self.weights_obj1 if objective == 1 else self.weights_obj2

    def to_domain(self, u):
        lo, hi = self.domain
        return lo + (hi - lo) * np.asarray(u, dtype=float)


SINUSOIDAL = SinusoidalSpec()


def _check_objective(objective: int, count: int) -> None:
    if objective not in range(1, count + 1):
        raise ArgumentError(f"Objective must be in 1..{count}, got {objective!r}")


def sinusoidal_eval(task: TaskLabel, objective: int, x, spec: SinusoidalSpec = SINUSOIDAL):
    """Evaluate source ``task`` (1, 2, 3 or ``"t"``) and ``objective``
    (1 or 2) at ``x`` in the sinusoidal domain. ``x`` may be an array.

    >>> float(sinusoidal_eval(2, 1, 0.0))
    0.0
    """
    _check_objective(objective, 2)
    x = np.asarray(x, dtype=float)
    if task == TARGET:
        w = spec.weights(objective)
        return sum(w[m - 1] * sinusoidal_eval(m, objective, x, spec) for m in (1, 2, 3))
    if task not in (1, 2, 3):
        raise ArgumentError(f"Sinusoidal task must be 1, 2, 3 or 't', got {task!r}")
    shift = (task - 2) * spec.delta
    if objective == 2:
        shift += spec.phi
    return np.sin(x + shift)


@attrs.define(frozen=True, eq=False)
class HartmannInstance:
    """Sampled coefficients of one adapted Hartmann6 problem.

    ``alpha`` has one row per task, meta tasks first and the target last;
    ``epsilon`` has one row per objective.
    """

    alpha: np.ndarray
    epsilon: np.ndarray
    meta_tasks: int
    objectives: int
    seed: int
    A: np.ndarray = attrs.field(default=HARTMANN_A, repr=False)
    P: np.ndarray = attrs.field(default=HARTMANN_P, repr=False)

    def task_row(self, task: TaskLabel) -> int:
        if task == TARGET:
            return self.meta_tasks
        if isinstance(task, (int, np.integer)) and 1 <= task <= self.meta_tasks:
            return int(task) - 1
        raise ArgumentError(f"Task must be in 1..{self.meta_tasks} or 't', got {task!r}")

    def alpha_for(self, task: TaskLabel) -> np.ndarray:
        return self.alpha[self.task_row(task)]


def _sample_alpha(rng: np.random.Generator) -> np.ndarray:
    return np.array([rng.uniform(lo, hi) for lo, hi in ALPHA_RANGES])


def make_hartmann(M: int, O: int, seed: int) -> HartmannInstance:
    """Sample an adapted Hartmann6 instance with ``M`` meta tasks and ``O``
    objectives.

    Each task and each objective draws from its own seeded stream, so
    changing ``O`` leaves the task coefficients unchanged.
    """
    if M < 1 or O < 1:
        raise ArgumentError(f"Hartmann needs M >= 1 and O >= 1, got M={M}, O={O}")
    labels: List[TaskLabel] = list(range(1, M + 1)) + [TARGET]
    alpha = np.vstack([_sample_alpha(make_rng(seed, "hartmann-alpha", label)) for label in labels])
    epsilon = np.vstack(
        [
            make_rng(seed, "hartmann-epsilon", o).uniform(0.0, EPSILON_MAX, HARTMANN_DIM)
            for o in range(1, O + 1)
        ]
    )
    return HartmannInstance(alpha=alpha, epsilon=epsilon, meta_tasks=M, objectives=O, seed=seed)


def hartmann_eval(instance: HartmannInstance, task: TaskLabel, objective: int, x) -> np.ndarray:
    """Adapted Hartmann6 value (minimization form) at ``x``, a 6-vector or
    an N×6 array in the unit box."""
    _check_objective(objective, instance.objectives)
    alpha = instance.alpha_for(task)
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != HARTMANN_DIM:
        raise ArgumentError(f"Hartmann6 takes 6-dimensional inputs, got {X.shape[1]}")
    shifted = X[:, None, :] - instance.P[None, :, :] - instance.epsilon[objective - 1]
    inner = np.sum(instance.A[None, :, :] * shifted**2, axis=2)
    values = -np.sum(alpha[None, :] * np.exp(-inner), axis=1)
    return values[0] if single else values


def _noisy(Y: np.ndarray, noise_std: float, rng: np.random.Generator) -> np.ndarray:
    if noise_std < 0:
        raise ArgumentError(f"noise_std must be >= 0, got {noise_std}")
    if noise_std == 0:
        return Y
    return Y + noise_std * rng.standard_normal(Y.shape)


def sample_meta_data(
    source: Union[HartmannInstance, SinusoidalSpec],
    n_per_task: int = DEFAULT_META_OBSERVATIONS,
    noise_std: float = 0.0,
    seed: int = 0,
) -> List[MultiOutputDataset]:
    """Uniform observations of every meta task with all objectives.

    Inputs are in the unit box; sinusoidal inputs are mapped to its domain
    before evaluation. Outputs are the analytic values plus optional
    Gaussian noise.
    """
    if n_per_task < 1:
        raise ArgumentError(f"n_per_task must be >= 1, got {n_per_task}")
    if isinstance(source, HartmannInstance):
        tasks: List[TaskLabel] = list(range(1, source.meta_tasks + 1))
        dim, O = HARTMANN_DIM, source.objectives
    else:
        tasks, dim, O = [1, 2, 3], 1, 2
    out = []
    for task in tasks:
        rng = make_rng(seed, "meta-data", task)
        X = rng.uniform(size=(n_per_task, dim))
        if isinstance(source, HartmannInstance):
            Y = np.column_stack([hartmann_eval(source, task, o, X) for o in range(1, O + 1)])
        else:
            x = source.to_domain(X[:, 0])
            Y = np.column_stack([sinusoidal_eval(task, o, x, source) for o in (1, 2)])
        out.append(MultiOutputDataset(X, _noisy(Y, noise_std, rng)))
    return out


class Benchmark(ABC):
    """A target problem in maximization form over the unit box, with
    related meta tasks."""

    @property
    @abstractmethod
    def id(self) -> str:
        """Identity string accepted by :func:`parse_benchmark`."""

    @property
    @abstractmethod
    def dim(self) -> int:
        pass

    @property
    @abstractmethod
    def objective_count(self) -> int:
        pass

    @property
    @abstractmethod
    def meta_task_count(self) -> int:
        pass

    @property
    @abstractmethod
    def reference_point(self) -> np.ndarray:
        """Fixed reference point of the evaluation hypervolume."""

    @abstractmethod
    def evaluate(self, X) -> np.ndarray:
        """Target objectives at the rows of ``X``, an N×O matrix."""

    @abstractmethod
    def sample_meta_data(self, seed: int = 0, noise_std: float = 0.0) -> List[MultiOutputDataset]:
        """Meta-task observations in the same form as :meth:`evaluate`."""

    @property
    def bounds(self) -> np.ndarray:
        return np.tile([0.0, 1.0], (self.dim, 1))


def _check_counts(instance, attribute, value) -> None:
    if value < 1:
        raise ArgumentError(f"{attribute.name} must be >= 1, got {value}")


@attrs.define(frozen=True)
class SinusoidalBenchmark(Benchmark):
    """Target of the sinusoidal family, maximized as is."""

    meta_observations: int = attrs.field(
        default=DEFAULT_META_OBSERVATIONS, converter=int, validator=_check_counts
    )
    spec: SinusoidalSpec = SINUSOIDAL

    @property
    def id(self) -> str:
        return f"sinusoidal:n_meta={self.meta_observations}"

    @property
    def dim(self) -> int:
        return 1

    @property
    def objective_count(self) -> int:
        return 2

    @property
    def meta_task_count(self) -> int:
        return 3

    @property
    def reference_point(self) -> np.ndarray:
        return np.array([-1.0, -1.0])

    def evaluate(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        x = self.spec.to_domain(X[:, 0])
        return np.column_stack([sinusoidal_eval(TARGET, o, x, self.spec) for o in (1, 2)])

    def sample_meta_data(self, seed: int = 0, noise_std: float = 0.0) -> List[MultiOutputDataset]:
        return sample_meta_data(self.spec, self.meta_observations, noise_std, seed)


@attrs.define(frozen=True)
class HartmannBenchmark(Benchmark):
    """Target of an adapted Hartmann6 instance, negated for maximization."""

    meta_tasks: int = attrs.field(default=8, converter=int, validator=_check_counts)
    objectives: int = attrs.field(default=2, converter=int, validator=_check_counts)
    meta_observations: int = attrs.field(
        default=DEFAULT_META_OBSERVATIONS, converter=int, validator=_check_counts
    )
    seed: int = attrs.field(default=0, converter=int)
    instance: HartmannInstance = attrs.field(init=False, repr=False, eq=False)

    def __attrs_post_init__(self):
        instance = make_hartmann(self.meta_tasks, self.objectives, self.seed)
        object.__setattr__(self, "instance", instance)

    @property
    def id(self) -> str:
        return f"hartmann6:M={self.meta_tasks},O={self.objectives},n_meta={self.meta_observations}"

    @property
    def dim(self) -> int:
        return HARTMANN_DIM

    @property
    def objective_count(self) -> int:
        return self.objectives

    @property
    def meta_task_count(self) -> int:
        return self.meta_tasks

    @property
    def reference_point(self) -> np.ndarray:
        return np.zeros(self.objectives)

    def evaluate(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return -np.column_stack(
            [hartmann_eval(self.instance, TARGET, o, X) for o in range(1, self.objectives + 1)]
        )

    def sample_meta_data(self, seed: int = 0, noise_std: float = 0.0) -> List[MultiOutputDataset]:
        raw = sample_meta_data(self.instance, self.meta_observations, 0.0, seed)
        rng = make_rng(seed, "meta-noise")
        return [d.with_outputs(_noisy(-d.outputs, noise_std, rng)) for d in raw]


_BENCHMARK_RE = re.compile(r"^(?P<name>[a-z0-9]+)(?::(?P<params>.*))?$")
_PARAM_NAMES = {"M": "meta_tasks", "O": "objectives", "n_meta": "meta_observations"}


def _parse_params(raw: Optional[str], benchmark_id: str) -> Dict[str, int]:
    params: Dict[str, int] = {}
    if not raw:
        return params
    for item in raw.split(","):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in _PARAM_NAMES:
            raise ArgumentError(f"Unknown benchmark parameter {item!r} in {benchmark_id!r}")
        try:
            params[_PARAM_NAMES[key]] = int(value)
        except ValueError:
            raise ArgumentError(f"Benchmark parameter {key!r} must be an integer, got {value!r}")
    return params


def parse_benchmark(
    benchmark_id: str,
    seed: int = 0,
    meta_tasks: Optional[int] = None,
    objectives: Optional[int] = None,
    meta_observations: Optional[int] = None,
) -> Benchmark:
    """Build a benchmark from its identity string.

    Accepted ids are ``sinusoidal`` (optionally ``sinusoidal:n_meta=<int>``)
    and ``hartmann6:M=<int>,O=<int>,n_meta=<int>`` with every parameter
    optional. Keyword arguments override the values in the id.

    >>> parse_benchmark("hartmann6:M=3,O=2,n_meta=16").id
    'hartmann6:M=3,O=2,n_meta=16'
    """
    match = _BENCHMARK_RE.match(benchmark_id.strip())
    if not match:
        raise ArgumentError(f"Malformed benchmark id {benchmark_id!r}")
    params = _parse_params(match.group("params"), benchmark_id)
    overrides = {
        "meta_tasks": meta_tasks,
        "objectives": objectives,
        "meta_observations": meta_observations,
    }
    params.update({k: v for k, v in overrides.items() if v is not None})
    name = match.group("name")
    if name == "hartmann6":
        return HartmannBenchmark(seed=seed, **params)
    if name == "sinusoidal":
        unsupported = set(params) - {"meta_observations"}
        if unsupported:
            raise ArgumentError(f"The sinusoidal benchmark has fixed {sorted(unsupported)}")
        return SinusoidalBenchmark(**params)
    raise ArgumentError(f"Unknown benchmark {name!r}")


__all__ = [
    "ALPHA_RANGES",
    "Benchmark",
    "EPSILON_MAX",
    "HARTMANN_A",
    "HARTMANN_P",
    "HartmannBenchmark",
    "HartmannInstance",
    "SINUSOIDAL",
    "SinusoidalBenchmark",
    "SinusoidalSpec",
    "hartmann_eval",
    "make_hartmann",
    "parse_benchmark",
    "sample_meta_data",
    "sinusoidal_eval",
]
