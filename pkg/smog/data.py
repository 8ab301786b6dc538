"""Observed data and output standardization."""

from typing import Tuple

import attrs
import numpy as np

from smog.exceptions import ArgumentError

#: Smallest standard deviation kept by :func:`standardize`.
STD_FLOOR = 1e-12


def _frozen_matrix(value) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if arr.size else arr.reshape(0, 0)
    arr.setflags(write=False)
    return arr


@attrs.define(frozen=True, eq=False)
class MultiOutputDataset:
    """N unit-box inputs with all O objective values observed at each.

    >>> data = MultiOutputDataset(inputs=[[0.1, 0.2]], outputs=[[1.0, -1.0]])
    >>> data.n, data.dim, data.objective_count
    (1, 2, 2)
    """

    inputs: np.ndarray = attrs.field(converter=_frozen_matrix)
    outputs: np.ndarray = attrs.field(converter=_frozen_matrix)

    def __attrs_post_init__(self):
        X, Y = self.inputs, self.outputs
        if X.ndim != 2 or Y.ndim != 2:
            raise ArgumentError("Dataset inputs and outputs must be matrices")
        if X.shape[0] != Y.shape[0]:
            raise ArgumentError(
                f"Dataset has {X.shape[0]} inputs but {Y.shape[0]} output rows"
            )
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ArgumentError("Dataset contains non-finite values")
        if X.size and (X.min() < 0.0 or X.max() > 1.0):
            raise ArgumentError("Dataset inputs must lie in the unit box")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def objective_count(self) -> int:
        return self.outputs.shape[1]

    def stacked_outputs(self) -> np.ndarray:
        """Outputs as one objective-major vector, matching
        :func:`smog.kernels.augment`."""
        return self.outputs.T.ravel()

    def append(self, x, y) -> "MultiOutputDataset":
        """Return a new dataset with one more observation."""
        x = np.asarray(x, dtype=float).reshape(1, self.dim)
        y = np.asarray(y, dtype=float).reshape(1, self.objective_count)
        return MultiOutputDataset(
            inputs=np.vstack([self.inputs, x]), outputs=np.vstack([self.outputs, y])
        )

    def with_outputs(self, outputs) -> "MultiOutputDataset":
        return MultiOutputDataset(inputs=self.inputs, outputs=outputs)

    @classmethod
    def empty(cls, dim: int, objective_count: int) -> "MultiOutputDataset":
        return cls(
            inputs=np.zeros((0, dim)), outputs=np.zeros((0, objective_count))
        )


@attrs.define(frozen=True, eq=False)
class StandardizationTransform:
    """Per-objective affine map to zero mean and unit variance."""

    means: np.ndarray = attrs.field(converter=lambda v: np.array(v, dtype=float))
    stds: np.ndarray = attrs.field(converter=lambda v: np.array(v, dtype=float))

    @stds.validator
    def _check_stds(self, attribute, value) -> None:
        if np.any(value < STD_FLOOR):
            raise ArgumentError(f"Standard deviations must be >= {STD_FLOOR}")

    def apply(self, Y) -> np.ndarray:
        return (np.asarray(Y, dtype=float) - self.means) / self.stds

    def invert(self, Y) -> np.ndarray:
        return np.asarray(Y, dtype=float) * self.stds + self.means

    def invert_variance(self, variance) -> np.ndarray:
        return np.asarray(variance, dtype=float) * self.stds**2

    @classmethod
    def identity(cls, objective_count: int) -> "StandardizationTransform":
        return cls(np.zeros(objective_count), np.ones(objective_count))


def standardize(Y) -> Tuple[np.ndarray, StandardizationTransform]:
    """Standardize each column with its mean and sample standard deviation.

    The standard deviation is fixed to 1 for a single row or a constant
    column.

    >>> Y_std, t = standardize([[1.0], [3.0]])
    >>> [round(v, 12) for v in Y_std.ravel().tolist()]
    [-0.707106781187, 0.707106781187]
    >>> standardize([[2.0], [2.0]])[1].stds.tolist()
    [1.0]
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] < 1:
        raise ArgumentError(f"Expected a non-empty N×O matrix, got shape {Y.shape}")
    if not np.all(np.isfinite(Y)):
        raise ArgumentError("Cannot standardize non-finite values")
    means = Y.mean(axis=0)
    if Y.shape[0] > 1:
        stds = Y.std(axis=0, ddof=1)
    else:
        stds = np.ones(Y.shape[1])
    stds = np.where(stds < STD_FLOOR, 1.0, stds)
    transform = StandardizationTransform(means, stds)
    return transform.apply(Y), transform
