"""
Exact multi-output Gaussian process regression.

A :class:`FittedGP` couples a :class:`GPSpec` (structure and hyperpriors),
natural-scale :class:`Hyperparameters`, a prior (zero mean with the
separable kernel, or an externally supplied mean/covariance such as the
meta-learned target prior) and the training data. :func:`condition` caches
the Cholesky factor of ``K(X, X) + Σ`` and the solved residual vector;
:func:`posterior` and :func:`log_marginal_likelihood` reuse them.

All vectors over augmented inputs are objective-major: entry
``o * N + n`` belongs to input ``n`` and objective ``o``.
"""

import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import attrs
import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from smog._base import jittered_cholesky, psd_sqrt
from smog.data import MultiOutputDataset
from smog.exceptions import ArgumentError, ModelStateError, NumericalError
from smog.fitting import ParameterBlock, ParameterCodec, multi_start_maximize
from smog.kernels import (
    AugmentedInput,
    EquicorrelatedTaskParams,
    Matern52Params,
    augment,
    multi_output_gram,
)
from smog.priors import (
    CORRELATION_PRIOR,
    LENGTHSCALE_PRIOR,
    NOISE_LOWER_BOUND,
    NOISE_PRIOR,
    HyperPriorSpec,
)
from smog.utils import make_rng

logger = logging.getLogger(__name__)

TASK_MODES = ("equicorrelated", "diagonal")
NOISE_MODES = ("global", "per-objective")

#: Default number of restarts for meta-task and target fits.
META_RESTARTS = 8
TARGET_RESTARTS = 16

_LOG_2PI = math.log(2.0 * math.pi)
_DIAG_CLAMP = 1e-8


@attrs.define(frozen=True)
class GPSpec:
    """Structure of a multi-output GP and the hyperpriors of its groups."""

    input_dim: int = attrs.field(converter=int)
    objective_count: int = attrs.field(converter=int)
    task_mode: str = attrs.field(
        default="equicorrelated", validator=attrs.validators.in_(TASK_MODES)
    )
    noise_mode: str = attrs.field(
        default="global", validator=attrs.validators.in_(NOISE_MODES)
    )
    #: Learn a signal variance on the input kernel (single-output models);
    #: otherwise the per-objective scales of the task block carry it.
    learn_outputscale: bool = False
    lengthscale_prior: Optional[HyperPriorSpec] = LENGTHSCALE_PRIOR
    outputscale_prior: Optional[HyperPriorSpec] = None
    noise_prior: Optional[HyperPriorSpec] = NOISE_PRIOR
    rho_prior: Optional[HyperPriorSpec] = CORRELATION_PRIOR

    def __attrs_post_init__(self):
        if self.input_dim < 1 or self.objective_count < 1:
            raise ArgumentError("GPSpec needs input_dim >= 1 and objective_count >= 1")

    @property
    def learns_rho(self) -> bool:
        return self.task_mode == "equicorrelated" and self.objective_count > 1

    @property
    def noise_size(self) -> int:
        return self.objective_count if self.noise_mode == "per-objective" else 1

    def priors(self) -> List[HyperPriorSpec]:
        out = [self.lengthscale_prior, self.noise_prior]
        if self.learn_outputscale:
            out.append(self.outputscale_prior)
        if self.learns_rho:
            out.append(self.rho_prior)
        return [p for p in out if p is not None]

    def codec(self) -> ParameterCodec:
        blocks = [ParameterBlock("lengthscale", self.input_dim, "positive")]
        if self.learn_outputscale:
            blocks.append(ParameterBlock("outputscale", 1, "positive"))
        else:
            blocks.append(ParameterBlock("sigma", self.objective_count, "positive"))
        if self.learns_rho:
            blocks.append(ParameterBlock("rho", 1, "unit"))
        blocks.append(ParameterBlock("noise", self.noise_size, "noise"))
        return ParameterCodec(blocks)


@attrs.define(frozen=True, eq=False)
class Hyperparameters:
    """Natural-scale hyperparameters of a separable multi-output GP."""

    input: Matern52Params
    task: EquicorrelatedTaskParams
    noise: np.ndarray = attrs.field(converter=lambda v: np.atleast_1d(np.array(v, dtype=float)))

    @noise.validator
    def _check_noise(self, attribute, value) -> None:
        if not np.all(np.isfinite(value)) or np.any(value <= 0):
            raise ArgumentError(f"Noise variances must be finite and > 0, got {value}")

    def groups(self) -> Dict[str, np.ndarray]:
        """Values keyed by hyperprior target group."""
        return {
            "lengthscale": self.input.lengthscales,
            "outputscale": np.array([self.input.outputscale]),
            "sigma": self.task.sigma,
            "rho": np.array([self.task.rho]),
            "noise": self.noise,
        }

    def noise_for(self, objectives: np.ndarray) -> np.ndarray:
        if self.noise.size == 1:
            return np.full(objectives.shape, self.noise[0])
        return self.noise[objectives]

    @classmethod
    def from_groups(cls, spec: GPSpec, values: Dict[str, np.ndarray]) -> "Hyperparameters":
        O = spec.objective_count
        outputscale = float(values["outputscale"][0]) if "outputscale" in values else 1.0
        sigma = values["sigma"] if "sigma" in values else np.ones(O)
        if spec.learns_rho:
            rho = float(values["rho"][0])
        elif spec.task_mode == "equicorrelated" and O == 1:
            rho = 0.5
        else:
            rho = 0.0
        return cls(
            input=Matern52Params(values["lengthscale"], outputscale),
            task=EquicorrelatedTaskParams(sigma, rho),
            noise=values["noise"],
        )

    @classmethod
    def defaults(cls, spec: GPSpec) -> "Hyperparameters":
        """Hyperprior modes, with unit scales for groups without a prior."""
        values = {
            "lengthscale": np.full(spec.input_dim, _mode(spec.lengthscale_prior, 0.5)),
            "sigma": np.ones(spec.objective_count),
            "noise": np.full(spec.noise_size, _mode(spec.noise_prior, 1e-2)),
            "rho": np.array([_mode(spec.rho_prior, 0.5)]),
        }
        if spec.learn_outputscale:
            values["outputscale"] = np.array([_mode(spec.outputscale_prior, 1.0)])
        return cls.from_groups(spec, values)


def _mode(prior: Optional[HyperPriorSpec], default: float) -> float:
    return default if prior is None else prior.mode()


class GaussianPrior:
    """Mean and covariance functions over augmented inputs."""

    def mean(self, X: np.ndarray, objectives: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def covariance(
        self, XA: np.ndarray, oA: np.ndarray, XB: np.ndarray, oB: np.ndarray
    ) -> np.ndarray:
        raise NotImplementedError


@attrs.define(frozen=True, eq=False)
class KernelPrior(GaussianPrior):
    """Zero-mean prior with the separable Matérn × task kernel."""

    params: Hyperparameters

    def mean(self, X, objectives):
        return np.zeros(len(objectives))

    def covariance(self, XA, oA, XB, oB):
        return multi_output_gram(XA, oA, XB, oB, self.params.input, self.params.task)


@attrs.define(frozen=True, eq=False)
class PosteriorGaussian:
    """Joint Gaussian over a list of augmented inputs.

    Rows follow ``inputs`` / ``objectives``; when produced by
    :func:`posterior_at` they are objective-major over the query points.
    """

    mean: np.ndarray
    covariance: np.ndarray
    inputs: np.ndarray
    objectives: np.ndarray

    def __attrs_post_init__(self):
        cov = 0.5 * (self.covariance + self.covariance.T)
        diag = np.diagonal(cov).copy()
        tol = _DIAG_CLAMP * max(1.0, float(np.abs(diag).max(initial=0.0)))
        if np.any(diag < -tol):
            raise NumericalError(
                "Posterior covariance has a negative variance",
                {"min_variance": float(diag.min()), "tolerance": tol},
            )
        np.fill_diagonal(cov, np.maximum(diag, 0.0))
        object.__setattr__(self, "covariance", cov)

    @property
    def variance(self) -> np.ndarray:
        return np.diagonal(self.covariance).copy()

    def mean_matrix(self, objective_count: int) -> np.ndarray:
        """Mean reshaped to Q×O for objective-major layouts."""
        return self.mean.reshape(objective_count, -1).T

    def variance_matrix(self, objective_count: int) -> np.ndarray:
        return self.variance.reshape(objective_count, -1).T


@attrs.define(frozen=True, eq=False)
class FittedGP:
    """A GP with fixed hyperparameters and, once conditioned, cached solves.

    Build one with :meth:`prior_only` and pass it to :func:`condition`.
    """

    spec: GPSpec
    params: Hyperparameters
    data: MultiOutputDataset
    prior: GaussianPrior
    factor: Optional[np.ndarray] = None
    alpha: Optional[np.ndarray] = None
    jitter: float = 0.0

    @classmethod
    def prior_only(
        cls,
        spec: GPSpec,
        params: Optional[Hyperparameters] = None,
        prior: Optional[GaussianPrior] = None,
    ) -> "FittedGP":
        params = params or Hyperparameters.defaults(spec)
        return cls(
            spec=spec,
            params=params,
            data=MultiOutputDataset.empty(spec.input_dim, spec.objective_count),
            prior=prior if prior is not None else KernelPrior(params),
        )

    @property
    def is_conditioned(self) -> bool:
        return self.factor is not None and self.alpha is not None

    def training_inputs(self) -> Tuple[np.ndarray, np.ndarray]:
        return augment(self.data.inputs, self.spec.objective_count)

    def with_params(self, params: Hyperparameters, prior: Optional[GaussianPrior] = None):
        """Same spec and data with new hyperparameters, unconditioned."""
        return attrs.evolve(
            self,
            params=params,
            prior=prior if prior is not None else KernelPrior(params),
            factor=None,
            alpha=None,
            jitter=0.0,
        )


def _check_data(spec: GPSpec, data: MultiOutputDataset) -> None:
    if data.n and (data.dim != spec.input_dim or data.objective_count != spec.objective_count):
        raise ArgumentError(
            f"Dataset has shape ({data.dim}, {data.objective_count}), model expects "
            f"({spec.input_dim}, {spec.objective_count})"
        )


def condition(model: FittedGP, data: MultiOutputDataset) -> FittedGP:
    """Condition ``model`` on ``data``, caching the factor and solve.

    :raises FactorizationError: when ``K + Σ`` can't be factorized.
    """
    _check_data(model.spec, data)
    if data.n == 0:
        data = MultiOutputDataset.empty(model.spec.input_dim, model.spec.objective_count)
        return attrs.evolve(model, data=data, factor=np.zeros((0, 0)), alpha=np.zeros(0))
    X, objectives = augment(data.inputs, model.spec.objective_count)
    K = model.prior.covariance(X, objectives, X, objectives)
    K[np.diag_indices_from(K)] += model.params.noise_for(objectives)
    factor, jitter = jittered_cholesky(K)
    residual = data.stacked_outputs() - model.prior.mean(X, objectives)
    alpha = cho_solve((factor, True), residual)
    return attrs.evolve(model, data=data, factor=factor, alpha=alpha, jitter=jitter)


def _query_arrays(
    query: Union[Sequence[AugmentedInput], Tuple[np.ndarray, np.ndarray]], dim: int
) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(query, tuple):
        X, objectives = query
        return np.atleast_2d(np.asarray(X, dtype=float)), np.asarray(objectives, dtype=int)
    if len(query) == 0:
        raise ArgumentError("Posterior query must not be empty")
    X = np.vstack([q.x for q in query])
    if X.shape[1] != dim:
        raise ArgumentError(f"Query points must have dimension {dim}")
    return X, np.array([q.objective for q in query], dtype=int)


def posterior(
    model: FittedGP,
    query: Union[Sequence[AugmentedInput], Tuple[np.ndarray, np.ndarray]],
) -> PosteriorGaussian:
    """Posterior mean and covariance at a list of augmented inputs.

    ``query`` is a list of :class:`AugmentedInput` or an ``(X, objectives)``
    pair of arrays.

    :raises ModelStateError: if ``model`` was never conditioned.
    """
    if not model.is_conditioned:
        raise ModelStateError("The GP must be conditioned before computing a posterior")
    Xq, oq = _query_arrays(query, model.spec.input_dim)
    if Xq.shape[0] != oq.size or oq.size == 0:
        raise ArgumentError("Posterior query must be non-empty with one objective per row")
    mean, cov = posterior_blocks(model, Xq, oq)
    return PosteriorGaussian(mean=mean, covariance=cov, inputs=Xq, objectives=oq)


def posterior_blocks(
    model: FittedGP,
    XA: np.ndarray,
    oA: np.ndarray,
    XB: Optional[np.ndarray] = None,
    oB: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Posterior mean at ``A`` and posterior covariance between ``A`` and ``B``.

    ``B`` defaults to ``A``. Unlike :func:`posterior` the covariance is not
    symmetrized or clamped, so rectangular blocks can be requested.
    """
    if not model.is_conditioned:
        raise ModelStateError("The GP must be conditioned before computing a posterior")
    same = XB is None
    if same:
        XB, oB = XA, oA
    mean = model.prior.mean(XA, oA)
    cov = model.prior.covariance(XA, oA, XB, oB)
    if model.data.n:
        X, objectives = model.training_inputs()
        cross_a = model.prior.covariance(X, objectives, XA, oA)
        mean = mean + cross_a.T @ model.alpha
        va = solve_triangular(model.factor, cross_a, lower=True)
        if same:
            vb = va
        else:
            cross_b = model.prior.covariance(X, objectives, XB, oB)
            vb = solve_triangular(model.factor, cross_b, lower=True)
        cov = cov - va.T @ vb
    return mean, cov


def posterior_mean(model: FittedGP, X: np.ndarray, objectives: np.ndarray) -> np.ndarray:
    """Posterior mean only, skipping the covariance solve."""
    if not model.is_conditioned:
        raise ModelStateError("The GP must be conditioned before computing a posterior")
    mean = model.prior.mean(X, objectives)
    if model.data.n:
        Xt, ot = model.training_inputs()
        mean = mean + model.prior.covariance(Xt, ot, X, objectives).T @ model.alpha
    return mean


def posterior_at(model: FittedGP, X: np.ndarray) -> PosteriorGaussian:
    """Posterior over every objective at the rows of ``X``, objective-major."""
    return posterior(model, augment(X, model.spec.objective_count))


def log_marginal_likelihood(model: FittedGP, data: Optional[MultiOutputDataset] = None) -> float:
    """Gaussian log-evidence of ``data`` (default: the conditioned data)."""
    if data is not None and data is not model.data:
        model = condition(model, data)
    elif not model.is_conditioned:
        model = condition(model, model.data)
    n = model.alpha.size
    if n == 0:
        return 0.0
    X, objectives = model.training_inputs()
    residual = model.data.stacked_outputs() - model.prior.mean(X, objectives)
    return float(
        -0.5 * residual @ model.alpha
        - np.sum(np.log(np.diagonal(model.factor)))
        - 0.5 * n * _LOG_2PI
    )


def log_prior_density(params: Hyperparameters, priors: Sequence[HyperPriorSpec]) -> float:
    """Sum of hyperprior log-densities evaluated on the natural scale."""
    groups = params.groups()
    if np.any(params.noise < NOISE_LOWER_BOUND):
        return -math.inf
    total = 0.0
    for prior in priors:
        total += prior.log_prob(groups[prior.target])
    return total


def log_posterior_objective(
    model: FittedGP, data: MultiOutputDataset, priors: Sequence[HyperPriorSpec]
) -> float:
    """Log marginal likelihood plus hyperprior log-densities (the MAP
    objective). Returns ``-inf`` when a parameter is outside a prior's
    support."""
    log_prior = log_prior_density(model.params, priors)
    if not math.isfinite(log_prior):
        return -math.inf
    return log_marginal_likelihood(model, data) + log_prior


def restart_points(
    codec: ParameterCodec,
    mode: Dict[str, np.ndarray],
    priors: Dict[str, HyperPriorSpec],
    restarts: int,
    rng: np.random.Generator,
) -> List[np.ndarray]:
    """First restart at ``mode``, the others drawn from the hyperpriors
    (groups without a prior stay at ``mode``)."""
    starts = [codec.pack(mode)]
    for _ in range(restarts - 1):
        values = {}
        for block in codec.blocks:
            prior = priors.get(block.name)
            if prior is None:
                values[block.name] = mode[block.name]
            else:
                values[block.name] = prior.sample(rng, block.size)
        starts.append(codec.pack(values))
    return starts


def fit(
    spec: GPSpec,
    data: MultiOutputDataset,
    restarts: int = META_RESTARTS,
    seed: int = 0,
    prior_factory: Optional[Callable[[Hyperparameters], GaussianPrior]] = None,
) -> FittedGP:
    """Fit hyperparameters by multi-start MAP search and condition on ``data``.

    Deterministic for a fixed ``seed``. With no data the hyperprior modes
    are returned.

    :raises NumericalError: if every restart fails.
    """
    if restarts < 1:
        raise ArgumentError(f"restarts must be >= 1, got {restarts}")
    _check_data(spec, data)
    make_prior = prior_factory or KernelPrior
    defaults = Hyperparameters.defaults(spec)
    if data.n == 0:
        return condition(FittedGP.prior_only(spec, defaults, make_prior(defaults)), data)

    codec = spec.codec()
    priors = spec.priors()
    base = FittedGP.prior_only(spec, defaults, make_prior(defaults))

    def unpack(u: np.ndarray) -> Hyperparameters:
        return Hyperparameters.from_groups(spec, codec.unpack(u))

    def objective(u: np.ndarray) -> float:
        params = unpack(u)
        model = base.with_params(params, make_prior(params))
        return log_posterior_objective(model, data, priors)

    mode = {name: value for name, value in defaults.groups().items()}
    prior_by_group = {p.target: p for p in priors}
    starts = restart_points(codec, mode, prior_by_group, restarts, make_rng(seed, "gp-fit"))
    result = multi_start_maximize(objective, starts)
    params = unpack(result.x)
    logger.debug(f"GP fit reached log posterior {result.value:.6g}")
    return condition(base.with_params(params, make_prior(params)), data)


def sample_posterior(post: PosteriorGaussian, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` joint samples; identical seeds give identical draws."""
    if count < 1:
        raise ArgumentError(f"count must be >= 1, got {count}")
    root = psd_sqrt(post.covariance)
    z = np.random.default_rng(seed).standard_normal((count, post.mean.size))
    return post.mean + z @ root.T
