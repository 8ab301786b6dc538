"""
Covariance functions over objective-augmented inputs.

Every model in **smog** uses the same separable structure: a Matérn-5/2
ARD kernel over the unit box multiplied by an equicorrelated task
(objective) covariance,

    k((x, o), (x', o')) = k_X(x, x') * K_T[o, o'].

Scalar functions mirror the mathematical definitions one entry at a time;
the ``*_gram`` functions are their vectorized counterparts used by the
models.
"""

from typing import Optional, Tuple

import attrs
import numpy as np
from scipy.spatial.distance import cdist

from smog.exceptions import ArgumentError
from smog.stats import Stats, default_stats

_SQRT5 = np.sqrt(5.0)

#: Stat incremented by the number of cross-objective Gram entries computed.
OFFDIAG_STAT = "kernels/offdiag_task_entries"


def _float_vector(value) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    arr.setflags(write=False)
    return arr


def _positive_entries(instance, attribute, value) -> None:
    if value.ndim != 1 or value.size == 0:
        raise ArgumentError(f"{attribute.name} must be a non-empty vector")
    if not np.all(np.isfinite(value)) or np.any(value <= 0):
        raise ArgumentError(f"{attribute.name} must be finite and > 0, got {value}")


def _positive_scalar(instance, attribute, value) -> None:
    if not np.isfinite(value) or value <= 0:
        raise ArgumentError(f"{attribute.name} must be finite and > 0, got {value}")


@attrs.define(frozen=True, eq=False)
class Matern52Params:
    """Hyperparameters of the Matérn-5/2 ARD input kernel.

    Lengthscales are expressed in unit-box input units.
    """

    lengthscales: np.ndarray = attrs.field(
        converter=_float_vector, validator=_positive_entries
    )
    outputscale: float = attrs.field(
        default=1.0, converter=float, validator=_positive_scalar
    )

    @property
    def dim(self) -> int:
        return self.lengthscales.size


@attrs.define(frozen=True, eq=False)
class EquicorrelatedTaskParams:
    """Task covariance with one marginal scale per objective and one shared
    correlation.

    ``rho`` lives in [0, 1); ``rho == 0`` is the diagonal (independent
    objectives) block used by the independent-output models.
    """

    sigma: np.ndarray = attrs.field(converter=_float_vector, validator=_positive_entries)
    rho: float = attrs.field(default=0.5, converter=float)

    @rho.validator
    def _check_rho(self, attribute, value) -> None:
        if not (0.0 <= value < 1.0):
            raise ArgumentError(f"rho must be in [0, 1), got {value}")

    @property
    def objective_count(self) -> int:
        return self.sigma.size

    @property
    def is_diagonal(self) -> bool:
        return self.rho == 0.0 or self.sigma.size == 1

    def matrix(self) -> np.ndarray:
        """Return K_T as an O×O matrix.

        >>> EquicorrelatedTaskParams(sigma=[1.0, 2.0], rho=0.25).matrix().tolist()
        [[1.0, 0.5], [0.5, 4.0]]
        """
        s = self.sigma
        out = self.rho * np.outer(s, s)
        np.fill_diagonal(out, s**2)
        return out

    @classmethod
    def independent(cls, objective_count: int) -> "EquicorrelatedTaskParams":
        """Unit-scale diagonal task block."""
        return cls(sigma=np.ones(objective_count), rho=0.0)


@attrs.define(frozen=True, eq=False)
class CoregionalizationBlock:
    """A general symmetric PSD O×O block of inter-objective covariances."""

    matrix: np.ndarray = attrs.field(converter=lambda m: np.array(m, dtype=float))

    @matrix.validator
    def _check(self, attribute, value) -> None:
        if value.ndim != 2 or value.shape[0] != value.shape[1]:
            raise ArgumentError(f"Coregionalization block must be square, got {value.shape}")
        if not np.allclose(value, value.T, rtol=0.0, atol=1e-12):
            raise ArgumentError("Coregionalization block must be symmetric")
        if not psd_check(value, 1e-8):
            raise ArgumentError("Coregionalization block must be PSD")

    @classmethod
    def from_task_params(cls, params: EquicorrelatedTaskParams) -> "CoregionalizationBlock":
        return cls(params.matrix())


@attrs.define(frozen=True, eq=False)
class AugmentedInput:
    """A unit-box search point paired with an objective index."""

    x: np.ndarray = attrs.field(converter=_float_vector)
    objective: int = attrs.field(converter=int)

    @x.validator
    def _check_x(self, attribute, value) -> None:
        if np.any(value < 0.0) or np.any(value > 1.0) or not np.all(np.isfinite(value)):
            raise ArgumentError(f"Augmented input must lie in the unit box, got {value}")

    @objective.validator
    def _check_objective(self, attribute, value) -> None:
        if value < 0:
            raise ArgumentError(f"Objective index must be >= 0, got {value}")


def augment(X: np.ndarray, objective_count: int) -> Tuple[np.ndarray, np.ndarray]:
    """Stack ``X`` once per objective in objective-major order.

    Returns the stacked inputs and the matching objective indices, so that
    row ``o * len(X) + n`` is ``(X[n], o)``.

    >>> Xa, oa = augment(np.array([[0.1], [0.2]]), 2)
    >>> Xa.ravel().tolist(), oa.tolist()
    ([0.1, 0.2, 0.1, 0.2], [0, 0, 1, 1])
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.tile(X, (objective_count, 1)), np.repeat(
        np.arange(objective_count), X.shape[0]
    )


def _matern52_from_distance(r: np.ndarray, outputscale: float) -> np.ndarray:
    sr = _SQRT5 * r
    return outputscale * (1.0 + sr + sr * sr / 3.0) * np.exp(-sr)


def matern52(x, x2, params: Matern52Params) -> float:
    """Matérn-5/2 ARD kernel between two points.

    >>> p = Matern52Params(lengthscales=[1.0], outputscale=2.0)
    >>> matern52([0.3], [0.3], p)
    2.0
    """
    x = np.asarray(x, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    if x.size != params.dim or x2.size != params.dim:
        raise ArgumentError(
            f"Expected points of dimension {params.dim}, got {x.size} and {x2.size}"
        )
    r = float(np.sqrt(np.sum(((x - x2) / params.lengthscales) ** 2)))
    return float(_matern52_from_distance(np.asarray(r), params.outputscale))


def matern52_gram(X: np.ndarray, X2: np.ndarray, params: Matern52Params) -> np.ndarray:
    """Matérn-5/2 ARD Gram matrix between the rows of ``X`` and ``X2``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    if X.shape[1] != params.dim or X2.shape[1] != params.dim:
        raise ArgumentError(
            f"Expected inputs with {params.dim} columns, got {X.shape[1]} and {X2.shape[1]}"
        )
    if X.shape[0] == 0 or X2.shape[0] == 0:
        return np.zeros((X.shape[0], X2.shape[0]))
    r = cdist(X / params.lengthscales, X2 / params.lengthscales)
    return _matern52_from_distance(r, params.outputscale)


def _check_objective(index: int, count: int) -> None:
    if not (0 <= index < count):
        raise ArgumentError(f"Objective index {index} out of range [0, {count})")


def task_covariance(i: int, j: int, params: EquicorrelatedTaskParams) -> float:
    """Entry ``K_T[i, j]`` of the equicorrelated task covariance.

    >>> p = EquicorrelatedTaskParams(sigma=[1.0, 2.0], rho=0.5)
    >>> task_covariance(1, 1, p), task_covariance(0, 1, p)
    (4.0, 1.0)
    """
    _check_objective(i, params.objective_count)
    _check_objective(j, params.objective_count)
    if i == j:
        return float(params.sigma[i] ** 2)
    return float(params.rho * params.sigma[i] * params.sigma[j])


def decompose_diag_rank1(
    params: EquicorrelatedTaskParams,
) -> Tuple[np.ndarray, np.ndarray]:
    """Split K_T into ``diag(d) + spike spike^T``.

    >>> d, s = decompose_diag_rank1(EquicorrelatedTaskParams(sigma=[1.0, 1.0], rho=0.5))
    >>> d.tolist()
    [0.5, 0.5]
    """
    diag = (1.0 - params.rho) * params.sigma**2
    spike = np.sqrt(params.rho) * params.sigma
    return diag, spike


def multi_output_kernel(
    a: AugmentedInput,
    b: AugmentedInput,
    input_params: Matern52Params,
    task_params: EquicorrelatedTaskParams,
) -> float:
    """Separable kernel between two augmented inputs."""
    return matern52(a.x, b.x, input_params) * task_covariance(
        a.objective, b.objective, task_params
    )


def multi_output_gram(
    XA: np.ndarray,
    oA: np.ndarray,
    XB: np.ndarray,
    oB: np.ndarray,
    input_params: Matern52Params,
    task_params: EquicorrelatedTaskParams,
    stats: Optional[Stats] = None,
) -> np.ndarray:
    """Gram matrix of the separable kernel between two augmented input sets.

    When the task block is diagonal only same-objective entries are
    computed; cross-objective entries are left at zero. Every computed
    cross-objective entry is counted under :data:`OFFDIAG_STAT`.
    """
    stats = stats or default_stats
    oA = np.asarray(oA, dtype=int)
    oB = np.asarray(oB, dtype=int)
    count = task_params.objective_count
    for o in (oA, oB):
        if o.size and (o.min() < 0 or o.max() >= count):
            raise ArgumentError(f"Objective indices must be in [0, {count})")
    out = np.zeros((oA.size, oB.size))
    if out.size == 0:
        return out
    if task_params.is_diagonal and count > 1:
        for o in range(count):
            ia = np.flatnonzero(oA == o)
            ib = np.flatnonzero(oB == o)
            if ia.size and ib.size:
                block = matern52_gram(XA[ia], XB[ib], input_params)
                out[np.ix_(ia, ib)] = task_params.sigma[o] ** 2 * block
        return out
    kt = task_params.matrix()
    out = matern52_gram(XA, XB, input_params) * kt[np.ix_(oA, oB)]
    offdiag = int(np.sum(oA[:, None] != oB[None, :]))
    if offdiag:
        stats.inc(OFFDIAG_STAT, offdiag)
    return out


def psd_check(matrix, tol: float = 1e-8) -> bool:
    """Return True if the symmetric ``matrix`` has no eigenvalue below ``-tol``.

    >>> psd_check(np.eye(3))
    True
    >>> psd_check(np.array([[1.0, 2.0], [2.0, 1.0]]))
    False
    >>> psd_check(np.zeros((2, 2)))
    True
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ArgumentError(f"Expected a square matrix, got shape {matrix.shape}")
    if matrix.size == 0:
        return True
    sym = 0.5 * (matrix + matrix.T)
    return bool(np.linalg.eigvalsh(sym).min() >= -tol)
