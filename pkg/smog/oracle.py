"""
Dense joint-kernel reference for the meta-learned prior.

The joint kernel indexes every observation by ``(x, task, objective)``,
with tasks ``0..M-1`` for the meta tasks and ``M`` for the target. It sums
one separable kernel per task ``v``, gated by

    g_v(ν, o) = 1        if v == ν
              = w[v, o]  if v is a meta task and ν is the target
              = 0        otherwise

Conditioning it densely on the metadata must reproduce the modular target
prior of :mod:`smog.model`. This path builds full Gram matrices and is only
meant for small instances in tests.
"""

from typing import List, Optional, Sequence, Tuple

import attrs
import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from smog._base import jittered_cholesky
from smog.data import MultiOutputDataset
from smog.exceptions import ArgumentError
from smog.gp import Hyperparameters, PosteriorGaussian
from smog.kernels import CoregionalizationBlock, augment, matern52, multi_output_gram, psd_check

#: Largest number of conditioning rows the dense path accepts.
MAX_DENSE_ROWS = 200


@attrs.define(frozen=True, eq=False)
class JointKernelOracle:
    """Per-task kernels (meta tasks first, target last) and transfer weights."""

    meta: Tuple[Hyperparameters, ...] = attrs.field(converter=tuple)
    target: Hyperparameters
    weights: np.ndarray = attrs.field(converter=lambda w: np.array(w, dtype=float))

    def __attrs_post_init__(self):
        O = self.objective_count
        if self.weights.shape != (len(self.meta), O):
            raise ArgumentError(
                f"Weights must have shape {(len(self.meta), O)}, got {self.weights.shape}"
            )
        for params in self.meta:
            if params.task.objective_count != O:
                raise ArgumentError("Every task kernel must cover the same objectives")

    @property
    def meta_count(self) -> int:
        return len(self.meta)

    @property
    def objective_count(self) -> int:
        return self.target.task.objective_count

    @property
    def target_index(self) -> int:
        return self.meta_count

    def task_params(self, v: int) -> Hyperparameters:
        return self.target if v == self.target_index else self.meta[v]

    def gate(self, v: int, tasks: np.ndarray, objectives: np.ndarray) -> np.ndarray:
        """``g_v(ν, o)`` for every row."""
        out = (tasks == v).astype(float)
        if v != self.target_index:
            on_target = tasks == self.target_index
            out[on_target] = self.weights[v, objectives[on_target]]
        return out

    def _check(self, tasks: np.ndarray, objectives: np.ndarray) -> None:
        if tasks.size and (tasks.min() < 0 or tasks.max() > self.target_index):
            raise ArgumentError(f"Task indices must be in [0, {self.target_index}]")
        if objectives.size and (objectives.min() < 0 or objectives.max() >= self.objective_count):
            raise ArgumentError(f"Objective indices must be in [0, {self.objective_count})")

    def gram(
        self,
        XA: np.ndarray,
        tA: np.ndarray,
        oA: np.ndarray,
        XB: np.ndarray,
        tB: np.ndarray,
        oB: np.ndarray,
    ) -> np.ndarray:
        """Joint Gram matrix between two index sets."""
        tA, oA = np.asarray(tA, dtype=int), np.asarray(oA, dtype=int)
        tB, oB = np.asarray(tB, dtype=int), np.asarray(oB, dtype=int)
        self._check(tA, oA)
        self._check(tB, oB)
        out = np.zeros((tA.size, tB.size))
        for v in range(self.target_index + 1):
            gA = self.gate(v, tA, oA)
            gB = self.gate(v, tB, oB)
            if not (np.any(gA) and np.any(gB)):
                continue
            params = self.task_params(v)
            k = multi_output_gram(XA, oA, XB, oB, params.input, params.task)
            out += np.outer(gA, gB) * k
        return out


def joint_kernel(
    oracle: JointKernelOracle,
    a: Tuple[Sequence[float], int, int],
    b: Tuple[Sequence[float], int, int],
) -> float:
    """Joint kernel between two ``(x, task, objective)`` triples."""
    (xa, ta, oa), (xb, tb, ob) = a, b
    ta_arr, oa_arr = np.array([ta]), np.array([oa])
    tb_arr, ob_arr = np.array([tb]), np.array([ob])
    oracle._check(ta_arr, oa_arr)
    oracle._check(tb_arr, ob_arr)
    total = 0.0
    for v in range(oracle.target_index + 1):
        ga = oracle.gate(v, ta_arr, oa_arr)[0]
        gb = oracle.gate(v, tb_arr, ob_arr)[0]
        if ga == 0.0 or gb == 0.0:
            continue
        params = oracle.task_params(v)
        task_cov = params.task.matrix()[oa, ob]
        total += ga * gb * matern52(xa, xb, params.input) * task_cov
    return float(total)


def build_coregionalization_matrices(
    weights: np.ndarray, blocks: Sequence[np.ndarray]
) -> List[np.ndarray]:
    """Coregionalization matrices ``C_v = diag(g_v) (1 1ᵀ ⊗ H_v) diag(g_v)``.

    ``blocks`` holds one O×O PSD block per task, meta tasks first and the
    target last. The basis is task-major, ``(ν, o) -> ν * O + o``, with the
    target as the last task.

    :raises ArgumentError: if a block is not symmetric PSD or shapes mismatch.
    """
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    M, O = weights.shape
    if len(blocks) != M + 1:
        raise ArgumentError(f"Expected {M + 1} blocks, got {len(blocks)}")
    H = [CoregionalizationBlock(b).matrix for b in blocks]
    for h in H:
        if h.shape != (O, O):
            raise ArgumentError(f"Blocks must be {O}×{O}, got {h.shape}")
    tasks = np.repeat(np.arange(M + 1), O)
    objectives = np.tile(np.arange(O), M + 1)
    out = []
    for v in range(M + 1):
        g = (tasks == v).astype(float)
        if v < M:
            g[tasks == M] = weights[v]
        tiled = np.kron(np.ones((M + 1, M + 1)), H[v])
        out.append(g[:, None] * tiled * g[None, :])
    return out


def _stack_meta(
    oracle: JointKernelOracle, meta_data: Sequence[MultiOutputDataset]
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Augmented meta observations with their noise variances."""
    if len(meta_data) != oracle.meta_count:
        raise ArgumentError(f"Expected {oracle.meta_count} meta datasets, got {len(meta_data)}")
    Xs, ts, os_, ys, noise = [], [], [], [], []
    for m, data in enumerate(meta_data):
        if data.n == 0:
            continue
        X, o = augment(data.inputs, data.objective_count)
        Xs.append(X)
        ts.append(np.full(o.size, m))
        os_.append(o)
        ys.append(data.stacked_outputs())
        noise.append(oracle.meta[m].noise_for(o))
    if not Xs:
        dim = oracle.target.input.dim
        empty = np.zeros(0)
        return np.zeros((0, dim)), empty.astype(int), empty.astype(int), empty, empty
    return (
        np.vstack(Xs),
        np.concatenate(ts),
        np.concatenate(os_),
        np.concatenate(ys),
        np.concatenate(noise),
    )


def _dense_condition(
    oracle: JointKernelOracle,
    X: np.ndarray,
    t: np.ndarray,
    o: np.ndarray,
    y: np.ndarray,
    noise: np.ndarray,
    Xq: np.ndarray,
    oq: np.ndarray,
) -> PosteriorGaussian:
    if y.size > MAX_DENSE_ROWS:
        raise ArgumentError(
            f"The dense path handles at most {MAX_DENSE_ROWS} rows, got {y.size}"
        )
    tq = np.full(oq.size, oracle.target_index)
    prior_cov = oracle.gram(Xq, tq, oq, Xq, tq, oq)
    if y.size == 0:
        return PosteriorGaussian(np.zeros(oq.size), prior_cov, Xq, oq)
    K = oracle.gram(X, t, o, X, t, o)
    K[np.diag_indices_from(K)] += noise
    factor, _ = jittered_cholesky(K)
    cross = oracle.gram(X, t, o, Xq, tq, oq)
    mean = cross.T @ cho_solve((factor, True), y)
    v = solve_triangular(factor, cross, lower=True)
    return PosteriorGaussian(mean, prior_cov - v.T @ v, Xq, oq)


def oracle_condition_on_metadata(
    oracle: JointKernelOracle,
    meta_data: Sequence[MultiOutputDataset],
    query: Tuple[np.ndarray, np.ndarray],
) -> PosteriorGaussian:
    """Target-task slice of the joint GP conditioned on the metadata only.

    ``query`` is an ``(X, objectives)`` pair of target inputs.

    :raises FactorizationError: when the dense Gram can't be factorized.
    """
    X, t, o, y, noise = _stack_meta(oracle, meta_data)
    Xq = np.atleast_2d(np.asarray(query[0], dtype=float))
    oq = np.asarray(query[1], dtype=int)
    return _dense_condition(oracle, X, t, o, y, noise, Xq, oq)


def oracle_condition_on_all(
    oracle: JointKernelOracle,
    meta_data: Sequence[MultiOutputDataset],
    target_data: Optional[MultiOutputDataset],
    query: Tuple[np.ndarray, np.ndarray],
) -> PosteriorGaussian:
    """Target-task slice of the joint GP conditioned on metadata and target
    data together."""
    X, t, o, y, noise = _stack_meta(oracle, meta_data)
    if target_data is not None and target_data.n:
        Xt, ot = augment(target_data.inputs, target_data.objective_count)
        X = np.vstack([X, Xt])
        t = np.concatenate([t, np.full(ot.size, oracle.target_index)])
        o = np.concatenate([o, ot])
        y = np.concatenate([y, target_data.stacked_outputs()])
        noise = np.concatenate([noise, oracle.target.noise_for(ot)])
    Xq = np.atleast_2d(np.asarray(query[0], dtype=float))
    oq = np.asarray(query[1], dtype=int)
    return _dense_condition(oracle, X, t, o, y, noise, Xq, oq)


def joint_gram_is_psd(
    oracle: JointKernelOracle, X: np.ndarray, t: np.ndarray, o: np.ndarray
) -> bool:
    """Whether the joint Gram over the given index set passes :func:`psd_check`."""
    return psd_check(oracle.gram(X, t, o, X, t, o), 1e-8)
