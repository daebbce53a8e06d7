"""Posterior summaries, Savage-Dickey Bayes factors and maximum likelihood."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .exceptions import DomainError, FitError
from .mcmc import PARAMETERS, PosteriorChain
from .priors import LambdaPrior
from .rng import make_rng
from .skew_symmetric import SkewFamily, family_from_name

__all__ = [
    "FitReport",
    "MleResult",
    "credible_interval",
    "map_estimate",
    "posterior_median",
    "kde_at",
    "savage_dickey_bf",
    "summarize",
    "mle_fit",
    "bootstrap_ci",
]

INFINITE_LAMBDA = 1e4


def _column(chain, parameter):
    if isinstance(chain, PosteriorChain):
        values = chain.column(parameter)
    else:
        values = np.asarray(chain, dtype=float)
        if values.ndim == 2:
            idx = PARAMETERS.index(parameter) if isinstance(parameter, str) else parameter
            values = values[:, idx]
    if values.size == 0:
        raise DomainError("chain is empty")
    return values


def credible_interval(chain, parameter="lambda", level=0.95):
    """Equal-tailed interval from the empirical quantiles of the draws.

    Quantiles interpolate linearly between order statistics
    (``h = (m - 1) p``).  ``chain`` may also be a plain array of draws.
    """
    if not (0 < level < 1):
        raise DomainError("level must lie in (0, 1)")
    values = _column(chain, parameter)
    tail = 0.5 * (1.0 - level)
    lo, hi = np.quantile(values, [tail, 1.0 - tail])
    return float(lo), float(hi)


def posterior_median(chain, parameter="lambda"):
    return float(np.median(_column(chain, parameter)))


def map_estimate(chain: PosteriorChain):
    """Retained draw with the largest log-posterior (earliest on ties)."""
    if len(chain.log_post) == 0:
        raise DomainError("chain is empty")
    i = int(np.argmax(chain.log_post))
    return tuple(float(v) for v in chain.draws[i])


def kde_at(values, x=0.0):
    """Gaussian kernel density estimate of ``values`` at ``x``.

    Bandwidth ``0.9 * min(sd, IQR / 1.34) * m^(-1/5)``; if one of the spread
    measures is zero the other is used.
    """
    values = np.asarray(values, dtype=float)
    m = values.size
    if m < 2:
        raise DomainError("need at least two draws for a density estimate")
    sd = float(np.std(values, ddof=1))
    q75, q25 = np.quantile(values, [0.75, 0.25])
    iqr = float(q75 - q25) / 1.34
    spread = min(sd, iqr) if sd > 0 and iqr > 0 else max(sd, iqr)
    if not spread > 0:
        raise DomainError("draws have zero spread; density estimate undefined")
    h = 0.9 * spread * m ** (-0.2)
    u = (x - values) / h
    return float(np.sum(np.exp(-0.5 * u * u)) / (m * h * math.sqrt(2.0 * math.pi)))


def savage_dickey_bf(chain, lambda_prior: LambdaPrior, null_value=0.0):
    """Bayes factor BF01 for ``lambda = null_value`` by the Savage-Dickey ratio.

    The posterior density at the null comes from :func:`kde_at` over the
    lambda draws; the prior density is evaluated exactly.
    """
    values = _column(chain, "lambda")
    prior = float(lambda_prior.density(null_value))
    if not (prior > 0 and math.isfinite(prior)):
        raise DomainError("prior density at the null value must be finite and positive")
    return kde_at(values, null_value) / prior


@dataclass
class FitReport:
    """Posterior summary of a fitted chain."""

    median: dict
    map: dict
    interval: dict
    level: float
    bayes_factor_01: float | None
    acceptance: dict
    retained: int
    prior: str = ""
    family: str = ""

    def to_dict(self):
        return {
            "family": self.family,
            "prior": self.prior,
            "level": self.level,
            "parameters": {
                p: {
                    "median": self.median[p],
                    "map": self.map[p],
                    "interval": list(self.interval[p]),
                }
                for p in PARAMETERS
            },
            "bayes_factor_01": self.bayes_factor_01,
            "diagnostics": {"acceptance": self.acceptance, "retained_draws": self.retained},
        }


def summarize(chain: PosteriorChain, lambda_prior: LambdaPrior | None = None, level=0.95, family="") -> FitReport:
    mapped = map_estimate(chain)
    bf = None
    if lambda_prior is not None:
        try:
            bf = savage_dickey_bf(chain, lambda_prior)
        except DomainError:
            bf = None
    return FitReport(
        median={p: posterior_median(chain, p) for p in PARAMETERS},
        map=dict(zip(PARAMETERS, mapped)),
        interval={p: credible_interval(chain, p, level) for p in PARAMETERS},
        level=level,
        bayes_factor_01=bf,
        acceptance=dict(zip(PARAMETERS, (float(a) for a in chain.acceptance))),
        retained=len(chain),
        prior=str(lambda_prior) if lambda_prior is not None else "",
        family=str(family),
    )


# -- maximum likelihood ------------------------------------------------------


@dataclass
class MleResult:
    mu: float
    sigma: float
    lam: float
    loglik: float
    lambda_infinite: int = 0  # +1 / -1 when |lambda| diverges
    extra: dict = field(default_factory=dict)

    def as_tuple(self):
        return self.mu, self.sigma, self.lam


def _negloglik(family: SkewFamily, data):
    """Negative log-likelihood in ``(mu, log sigma, asinh lambda)``."""
    f, G = family.f, family.G
    n = data.size

    def nll(theta, lam=None):
        mu, logsig = theta[0], theta[1]
        if lam is None:
            if not abs(theta[2]) < _MAX_ETA:
                return math.inf
            lam = math.sinh(theta[2])
        if not (abs(logsig) < 700 and math.isfinite(lam)):
            return math.inf
        z = (data - mu) / math.exp(logsig)
        val = n * (math.log(2.0) - logsig) + np.sum(f._logpdf(z) + G._logcdf(lam * family.omega(z)))
        return -float(val) if math.isfinite(val) else math.inf

    return nll


# asinh(lambda) bound of the search; far beyond INFINITE_LAMBDA
_MAX_ETA = 40.0


def mle_fit(family, data, fixed_lambda=None, starts=(-2.0, 0.0, 2.0)) -> MleResult:
    """Maximum-likelihood estimate of ``(mu, sigma, lambda)``.

    Nelder-Mead on ``(mu, log sigma, asinh lambda)`` from several lambda
    starts; the best optimum wins.  The asinh scale lets the simplex reach a
    diverging ``lambda`` in few steps.  When ``|lambda|`` exceeds 1e4 the
    likelihood is taken to increase without bound and ``lam`` is reported as
    signed infinity.  With ``fixed_lambda`` only ``(mu, sigma)`` are optimised.
    """
    fam = family_from_name(family) if isinstance(family, str) else family
    data = np.asarray(data, dtype=float).ravel()
    if data.size < 3:
        raise FitError("MLE needs at least 3 observations")
    if not np.all(np.isfinite(data)) or np.all(data == data[0]):
        raise FitError("degenerate data")
    nll = _negloglik(fam, data)
    mu0 = float(np.median(data))
    sig0 = float(np.std(data))
    opts = {"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000, "maxfev": 40000}

    best = None
    if fixed_lambda is not None:
        lam = float(fixed_lambda)
        res = optimize.minimize(lambda th: nll(th, lam), [mu0, math.log(sig0)], method="Nelder-Mead", options=opts)
        if res.success:
            best = (res.fun, np.array([res.x[0], res.x[1], math.asinh(lam)]))
    else:
        for lam0 in starts:
            # shift the start toward the side the skewness points to
            shift = sig0 * 0.8 * math.copysign(1.0, lam0) if lam0 else 0.0
            x0 = [mu0 - shift, math.log(sig0), math.asinh(lam0)]
            res = optimize.minimize(nll, x0, method="Nelder-Mead", options=opts)
            # polish from the simplex optimum
            res = optimize.minimize(nll, res.x, method="Nelder-Mead", options=opts)
            # a diverging lambda never meets the tolerances; accept it anyway
            ok = res.success or abs(math.sinh(res.x[2])) > INFINITE_LAMBDA
            if ok and math.isfinite(res.fun) and (best is None or res.fun < best[0]):
                best = (res.fun, res.x)
    if best is None:
        raise FitError("Nelder-Mead failed to converge from every start")
    fun, x = best
    lam = float(fixed_lambda) if fixed_lambda is not None else math.sinh(float(x[2]))
    flag = 0
    if abs(lam) > INFINITE_LAMBDA:
        flag = int(math.copysign(1, lam))
        lam = math.copysign(math.inf, lam)
    return MleResult(float(x[0]), math.exp(float(x[1])), lam, -float(fun), flag)


def bootstrap_ci(family, data, B=1000, level=0.95, seed=0, estimate=None):
    """Percentile bootstrap intervals for the MLE of each parameter.

    Returns a dict ``{parameter: (lower, upper)}``; lambda endpoints may be
    infinite.  Resample ``b`` uses stream ``b`` of the seed.
    """
    if B < 100:
        raise DomainError("need at least 100 bootstrap resamples")
    fam = family_from_name(family) if isinstance(family, str) else family
    data = np.asarray(data, dtype=float).ravel()
    n = data.size
    fits = np.empty((B, 3))
    for b in range(B):
        rng = make_rng(seed, b)
        resample = data[rng.integers(0, n, n)]
        try:
            fits[b] = mle_fit(fam, resample).as_tuple()
        except FitError:
            fits[b] = np.nan
    fits = fits[np.all(~np.isnan(fits), axis=1)]
    if fits.shape[0] == 0:
        raise FitError("every bootstrap refit failed")
    tail = 0.5 * (1.0 - level)
    out = {}
    for j, p in enumerate(PARAMETERS):
        col = np.clip(fits[:, j], -1e300, 1e300)
        lo, hi = np.quantile(col, [tail, 1.0 - tail])
        out[p] = tuple(math.copysign(math.inf, v) if abs(v) > INFINITE_LAMBDA and j == 2 else float(v)
                       for v in (lo, hi))
    return out
