"""
Hyperpriors over named hyperparameter groups.

A :class:`HyperPriorSpec` evaluates its log-density on the natural
(constrained) scale, knows its mode and can draw restart points. The module
constants hold the hyperpriors every model in **smog** uses.
"""

import math
from typing import Optional, Tuple

import attrs
import numpy as np
from scipy import stats

from smog.exceptions import ArgumentError

#: Hyperparameter groups a prior can target.
GROUPS = ("lengthscale", "outputscale", "sigma", "rho", "noise")
KINDS = ("gamma", "lognormal", "beta")

#: Lower bound of every noise variance.
NOISE_LOWER_BOUND = 1e-6


@attrs.define(frozen=True)
class HyperPriorSpec:
    """A hyperprior of ``kind`` with parameters ``params`` on ``target``.

    Parameters are ``(shape, rate)`` for ``gamma``, ``(mu, sigma)`` of the
    underlying normal for ``lognormal`` and ``(a, b)`` for ``beta``.

    >>> prior = HyperPriorSpec("beta", (2.0, 2.0), target="rho")
    >>> round(float(prior.log_prob(0.5)), 12) == round(math.log(1.5), 12)
    True
    """

    kind: str = attrs.field(validator=attrs.validators.in_(KINDS))
    params: Tuple[float, float] = attrs.field(
        converter=lambda p: tuple(float(v) for v in p)
    )
    target: str = attrs.field(kw_only=True, validator=attrs.validators.in_(GROUPS))
    lower_bound: Optional[float] = attrs.field(default=None, kw_only=True)

    @params.validator
    def _check_params(self, attribute, value) -> None:
        if len(value) != 2:
            raise ArgumentError(f"{self.kind} prior takes 2 parameters, got {value}")
        if self.kind == "lognormal":
            positive = value[1:]
        else:
            positive = value
        if any(v <= 0 for v in positive):
            raise ArgumentError(f"{self.kind} prior parameters must be > 0: {value}")

    def _distribution(self):
        a, b = self.params
        if self.kind == "gamma":
            return stats.gamma(a, scale=1.0 / b)
        if self.kind == "lognormal":
            return stats.lognorm(s=b, scale=math.exp(a))
        return stats.beta(a, b)

    def log_prob(self, values) -> float:
        """Sum of log-densities of ``values``; ``-inf`` outside the support."""
        values = np.atleast_1d(np.asarray(values, dtype=float))
        if self.lower_bound is not None and np.any(values < self.lower_bound):
            return -math.inf
        return float(np.sum(self._distribution().logpdf(values)))

    def mode(self) -> float:
        """Mode of the distribution, clipped to ``lower_bound``."""
        a, b = self.params
        if self.kind == "gamma":
            value = max(a - 1.0, 0.0) / b
        elif self.kind == "lognormal":
            value = math.exp(a - b * b)
        else:
            value = (a - 1.0) / (a + b - 2.0) if a > 1 and b > 1 else 0.5
        if self.lower_bound is not None:
            value = max(value, self.lower_bound)
        return value

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` values, clipped to ``lower_bound``."""
        draws = np.atleast_1d(self._distribution().rvs(size=size, random_state=rng))
        if self.lower_bound is not None:
            draws = np.maximum(draws, self.lower_bound)
        return draws.astype(float)

    @classmethod
    def gamma(cls, shape: float, rate: float, *, target: str) -> "HyperPriorSpec":
        return cls("gamma", (shape, rate), target=target)

    @classmethod
    def lognormal(
        cls, mu: float, sigma: float, *, target: str, lower_bound: Optional[float] = None
    ) -> "HyperPriorSpec":
        return cls("lognormal", (mu, sigma), target=target, lower_bound=lower_bound)

    @classmethod
    def beta(cls, a: float, b: float, *, target: str) -> "HyperPriorSpec":
        return cls("beta", (a, b), target=target)


LENGTHSCALE_PRIOR = HyperPriorSpec.gamma(1.5, 1.0, target="lengthscale")
RESIDUAL_LENGTHSCALE_PRIOR = HyperPriorSpec.lognormal(0.5, 1.5, target="lengthscale")
NOISE_PRIOR = HyperPriorSpec.lognormal(
    -4.0, 1.0, target="noise", lower_bound=NOISE_LOWER_BOUND
)
FUNCTION_VARIANCE_PRIOR = HyperPriorSpec.lognormal(-2.0, 3.0, target="outputscale")
CORRELATION_PRIOR = HyperPriorSpec.beta(2.0, 2.0, target="rho")
