"""Pure-Python/numpy implementation of the sampler's inner loop.

``run_block`` advances a chain over ``len(normals)`` iterations, mutating the
state arrays in place.  The compiled ``_chain_kernel`` implements exactly the
same contract; ``_backend`` chooses between them at import time.

Arguments shared by both backends
---------------------------------
state : float64[3]
    Current ``(mu, log sigma, lambda)``.
cur : float64[2]
    Log-likelihood and log-prior at ``state``.
log_scale : float64[3]
    Log proposal standard deviations, adapted in place.
counters : int64[10]
    ``[iteration, adaptation batch, batch accepts x3, post-burn-in accepts x3,
    retained draws, scale-trace rows]``.
normals, logu : float64[b, 3]
    Standard normal increments and log-uniforms for ``b`` iterations.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

BACKEND = "python"

LOG2 = 0.6931471805599453
LOG_SQRT_2PI = 0.9189385332046727
TINY = 1e-300
# |log sigma| beyond this gives zero likelihood (keeps exp(log sigma) finite)
MAX_LOGSIG = 700.0


def _t_logconst(nu):
    return math.lgamma(0.5 * (nu + 1.0)) - math.lgamma(0.5 * nu) - 0.5 * math.log(nu * math.pi)


def _t_logcdf(nu, u):
    p = special.stdtr(nu, u)
    with np.errstate(divide="ignore"):
        out = np.log(p)
    bad = p <= 0
    if np.any(bad):
        tail = (
            math.lgamma(0.5 * (nu + 1.0)) - math.lgamma(0.5 * nu) - 0.5 * math.log(math.pi)
            + (0.5 * nu - 1.0) * math.log(nu)
            - nu * np.log(np.abs(u))
        )
        out = np.where(bad, tail, out)
    return out


def _loglik(x, fam, dof, mu, logsig, lam):
    if not abs(logsig) < MAX_LOGSIG:
        return -math.inf
    sig = math.exp(logsig)
    z = (x - mu) / sig
    if fam == 0:
        terms = LOG2 - logsig + (-0.5 * z * z - LOG_SQRT_2PI) + special.log_ndtr(lam * z)
    elif fam == 1:
        az = np.abs(z)
        u = lam * z
        w = -np.logaddexp(0.0, -u)
        terms = LOG2 - logsig + (-az - 2.0 * np.log1p(np.exp(-az))) + w
    elif fam == 2:
        u = lam * z
        w = np.where(u < 0, np.minimum(u, 0.0) - LOG2, np.log1p(-0.5 * np.exp(-np.maximum(u, 0.0))))
        terms = LOG2 - logsig + (-np.abs(z) - LOG2) + w
    else:
        u = lam * z * np.sqrt((dof + 1.0) / (dof + z * z))
        terms = LOG2 - logsig + (_t_logconst(dof) - 0.5 * (dof + 1.0) * np.log1p(z * z / dof)) + _t_logcdf(dof + 1.0, u)
    return float(np.sum(terms))


def _log_prior(code, p, fn, lam):
    a = abs(lam)
    if code == 0:
        gap = 0.5 if a == 0 else math.atan(p[2] / a) / math.pi
        lower, upper = (1.0 - gap, gap) if lam >= 0 else (gap, 1.0 - gap)
        out = -p[3] - math.log(math.pi * p[2]) - math.log1p((a / p[2]) * (a / p[2]))
        if p[0] != 1.0:
            out += (p[0] - 1.0) * math.log(max(lower, TINY))
        if p[1] != 1.0:
            out += (p[1] - 1.0) * math.log(max(upper, TINY))
        return out
    if code == 1:
        gap = 0.5 / (1.0 + a)
        lower, upper = (1.0 - gap, gap) if lam >= 0 else (gap, 1.0 - gap)
        out = -p[2] + math.log(0.5) - 2.0 * math.log1p(a)
        if p[0] != 1.0:
            out += (p[0] - 1.0) * math.log(max(lower, TINY))
        if p[1] != 1.0:
            out += (p[1] - 1.0) * math.log(max(upper, TINY))
        return out
    if code == 2:
        z = lam / p[1]
        return p[2] - 0.5 * (p[0] + 1.0) * math.log1p(z * z / p[0])
    if code == 3:
        return -math.log(4.0 * p[0]) - 1.5 * math.log1p(a / p[0])
    if code == 4:
        z = (lam - p[0]) / p[1]
        return math.log(2.0 / p[1]) - 0.5 * z * z - LOG_SQRT_2PI + float(special.log_ndtr(p[2] * z))
    return float(fn(lam))


def loglik(data, family, dof, mu, sigma, lam):
    """Log-likelihood of ``data`` (exposed for cross-backend tests)."""
    if not sigma > 0:
        return -math.inf
    return _loglik(np.asarray(data, dtype=float), family, dof, mu, math.log(sigma), lam)


def log_prior(code, params, fn, lam):
    return _log_prior(code, params, fn, lam)


def run_block(data, family, dof, prior_code, prior_params, prior_fn, use_lik,
              state, cur, log_scale, counters, normals, logu,
              burn_in, thin, adapt_horizon, target, batch_size,
              out_draws, out_logpost, scale_trace):
    c0 = 0 if use_lik else 2
    pp = [float(v) for v in prior_params]
    mu, logsig, lam = (float(v) for v in state)
    ll_cur, lp_cur = float(cur[0]), float(cur[1])
    for j in range(normals.shape[0]):
        for c in range(c0, 3):
            prop = (mu, logsig, lam)[c] + math.exp(log_scale[c]) * normals[j, c]
            if c == 0:
                ll = _loglik(data, family, dof, prop, logsig, lam)
                lp = lp_cur
            elif c == 1:
                ll = _loglik(data, family, dof, mu, prop, lam)
                lp = lp_cur
            else:
                ll = _loglik(data, family, dof, mu, logsig, prop) if use_lik else 0.0
                lp = _log_prior(prior_code, pp, prior_fn, prop)
            if logu[j, c] < (ll + lp) - (ll_cur + lp_cur):
                if c == 0:
                    mu = prop
                elif c == 1:
                    logsig = prop
                else:
                    lam = prop
                ll_cur, lp_cur = ll, lp
                counters[2 + c] += 1
                if counters[0] >= burn_in:
                    counters[5 + c] += 1
        counters[0] += 1
        it = int(counters[0])
        if it % batch_size == 0:
            if it <= adapt_horizon:
                counters[1] += 1
                bi = float(counters[1])
                for c in range(c0, 3):
                    log_scale[c] += (float(counters[2 + c]) / batch_size - target) / math.sqrt(bi)
            row = int(counters[9])
            for c in range(3):
                counters[2 + c] = 0
                scale_trace[row, c] = math.exp(log_scale[c])
            counters[9] += 1
        if it > burn_in and (it - burn_in) % thin == 0:
            k = int(counters[8])
            out_draws[k, 0] = mu
            out_draws[k, 1] = math.exp(logsig)
            out_draws[k, 2] = lam
            out_logpost[k] = ll_cur + lp_cur - logsig
            counters[8] += 1
    state[:] = (mu, logsig, lam)
    cur[:] = (ll_cur, lp_cur)
