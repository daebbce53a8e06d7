"""Adaptive random-walk Metropolis for ``(mu, sigma, lambda)``.

The target is the posterior under the partial-information prior
``pi(mu, sigma, lambda) = p(lambda) / sigma``.  Coordinates are updated one at
a time with Gaussian proposals on ``(mu, log sigma, lambda)``; on that scale
the Jacobian ``sigma`` cancels the ``1/sigma`` of the prior.  During the
first ``adapt_horizon`` iterations each proposal scale is tuned after every
batch of 50 iterations::

    log scale += (batch acceptance - target) / sqrt(batch index)

and frozen afterwards.  Random numbers come from two Philox streams keyed by
the chain seed (increments and acceptance uniforms), so a chain is a pure
function of its inputs.  Both backends consume the streams identically; their
log-densities may differ in the last bit, which in practice leaves the draws
unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .exceptions import DomainError, InitializationError, ProprietyError
from .priors import LambdaPrior
from .rng import make_rng
from .skew_symmetric import SkewFamily, SkewSymmetricModel, family_from_name

__all__ = [
    "PosteriorSpec",
    "ChainConfig",
    "PosteriorChain",
    "log_posterior",
    "run_chain",
    "check_propriety",
]

BATCH_SIZE = 50
_BLOCK = 8192
PARAMETERS = ("mu", "sigma", "lambda")


@dataclass(frozen=True)
class PosteriorSpec:
    family: SkewFamily
    data: np.ndarray
    lambda_prior: LambdaPrior

    def __post_init__(self):
        if isinstance(self.family, str):
            object.__setattr__(self, "family", family_from_name(self.family))
        data = np.ascontiguousarray(self.data, dtype=float).ravel()
        if data.size == 0 or not np.all(np.isfinite(data)):
            raise DomainError("data must be a non-empty array of finite values")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)


@dataclass(frozen=True)
class ChainConfig:
    """Length, thinning and adaptation settings of one chain.

    ``adapt_horizon`` defaults to ``burn_in``.  Retained draws are the
    iterates ``burn_in + thin, burn_in + 2*thin, ...``.
    """

    iterations: int
    burn_in: int = 10_000
    thin: int = 100
    seed: int = 0
    target_acceptance: float = 0.44
    adapt_horizon: int | None = None

    def __post_init__(self):
        if self.thin < 1 or self.burn_in < 0 or self.iterations < 1:
            raise DomainError("need iterations >= 1, burn_in >= 0, thin >= 1")
        if self.iterations < self.burn_in + self.thin:
            raise DomainError("iterations must be at least burn_in + thin")
        if not (0 < self.target_acceptance < 1):
            raise DomainError("target_acceptance must lie in (0, 1)")
        if self.adapt_horizon is None:
            object.__setattr__(self, "adapt_horizon", self.burn_in)
        elif self.adapt_horizon < 0:
            raise DomainError("adapt_horizon must be >= 0")

    @classmethod
    def for_retained(cls, retained, burn_in=10_000, thin=100, seed=0, **kw):
        return cls(burn_in + retained * thin, burn_in, thin, seed, **kw)

    @property
    def retained(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass
class PosteriorChain:
    """Retained draws of ``(mu, sigma, lambda)`` and sampler diagnostics.

    Attributes
    ----------
    draws : ndarray, shape (m, 3)
    log_post : ndarray, shape (m,)
        Unnormalised log-posterior of each retained draw.
    acceptance : ndarray, shape (3,)
        Post-burn-in acceptance rate per coordinate.
    scale_trace : ndarray, shape (iterations // 50, 3)
        Proposal scales at the end of every batch.
    """

    draws: np.ndarray
    log_post: np.ndarray
    acceptance: np.ndarray
    scale_trace: np.ndarray
    config: ChainConfig
    backend: str = ""
    prior_only: bool = False
    initial: tuple = field(default=(0.0, 1.0, 0.0))

    def __len__(self):
        return len(self.log_post)

    def column(self, parameter) -> np.ndarray:
        if isinstance(parameter, str):
            parameter = PARAMETERS.index(parameter)
        return self.draws[:, parameter]

    @property
    def mu(self):
        return self.draws[:, 0]

    @property
    def sigma(self):
        return self.draws[:, 1]

    @property
    def lam(self):
        return self.draws[:, 2]


def log_posterior(spec: PosteriorSpec, mu, sigma, lam) -> float:
    """Unnormalised log-posterior; ``-inf`` for ``sigma <= 0``."""
    if not (sigma > 0):
        return -math.inf
    model = SkewSymmetricModel(spec.family, mu, sigma, lam)
    return float(np.sum(model.log_pdf(spec.data)) + spec.lambda_prior.log_density(lam) - math.log(sigma))


def check_propriety(data):
    """Raise :class:`ProprietyError` unless there are >= 2 distinct observations."""
    data = np.asarray(data, dtype=float).ravel()
    if data.size < 2:
        raise ProprietyError("posterior is improper: need n >= 2 observations")
    if np.all(data == data[0]):
        raise ProprietyError("posterior is improper: all observations are equal")


def _start(data):
    mu0 = float(np.median(data))
    sig0 = 1.4826 * float(np.median(np.abs(data - mu0)))
    if not sig0 > 0:
        sig0 = float(np.std(data))
    return mu0, sig0


def run_chain(spec: PosteriorSpec, config: ChainConfig, *, prior_only=False, backend=None,
              initial=None, proposal_scales=None) -> PosteriorChain:
    """Sample the posterior described by ``spec``.

    Parameters
    ----------
    prior_only : bool
        Drop the likelihood and update only ``lambda``; the chain then targets
        the prior of ``lambda`` (a correctness check for the sampler).
    backend : {'compiled', 'python'}, optional
        Override the backend chosen at import time.
    initial : (mu, sigma, lambda), optional
        Starting point; defaults to (median, 1.4826 * MAD, 0).
    proposal_scales : (s_mu, s_logsigma, s_lambda), optional
        Initial proposal scales; default ``(sigma0 / sqrt(n), 0.5, 1.0)``.
    """
    data = spec.data
    if not prior_only:
        check_propriety(data)
    be = _backend.get(backend)
    if initial is None:
        mu0, sig0 = _start(data)
        initial = (mu0, sig0, 0.0)
    mu0, sig0, lam0 = (float(v) for v in initial)
    if not sig0 > 0:
        raise InitializationError("initial sigma must be > 0")
    if proposal_scales is None:
        proposal_scales = (sig0 / math.sqrt(data.size), 0.5, 1.0)

    fam = spec.family
    dof = float(fam.dof) if fam.dof is not None else 0.0
    kspec = spec.lambda_prior.kernel_spec()
    if kspec is None:
        pcode, pparams, pfn = -1, np.zeros(1), spec.lambda_prior.log_density
    else:
        pcode, params = kspec
        pparams, pfn = np.asarray(params, dtype=float), None

    ll0 = be.loglik(data, fam.code, dof, mu0, sig0, lam0) if not prior_only else 0.0
    lp0 = be.log_prior(pcode, pparams, pfn, lam0)
    if not (math.isfinite(ll0) and math.isfinite(lp0)):
        raise InitializationError(
            f"non-finite log-posterior at the initial point (mu={mu0}, sigma={sig0}, lambda={lam0})"
        )

    state = np.array([mu0, math.log(sig0), lam0])
    cur = np.array([ll0, lp0])
    log_scale = np.log(np.asarray(proposal_scales, dtype=float))
    counters = np.zeros(10, dtype=np.int64)
    draws = np.empty((config.retained, 3))
    log_post = np.empty(config.retained)
    trace = np.empty((config.iterations // BATCH_SIZE, 3))

    rng_step = make_rng(config.seed, 0)
    rng_accept = make_rng(config.seed, 1)
    remaining = config.iterations
    while remaining > 0:
        b = min(_BLOCK, remaining)
        normals = rng_step.standard_normal((b, 3))
        logu = np.log(rng_accept.random((b, 3)))
        be.run_block(
            data, fam.code, dof, pcode, pparams, pfn, not prior_only,
            state, cur, log_scale, counters, normals, logu,
            config.burn_in, config.thin, config.adapt_horizon,
            config.target_acceptance, BATCH_SIZE,
            draws, log_post, trace,
        )
        remaining -= b

    post = max(config.iterations - config.burn_in, 1)
    acceptance = counters[5:8] / post
    return PosteriorChain(
        draws=draws,
        log_post=log_post,
        acceptance=acceptance,
        scale_trace=trace,
        config=config,
        backend=be.BACKEND,
        prior_only=prior_only,
        initial=(mu0, sig0, lam0),
    )
