# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled core of the adaptive random-walk Metropolis sampler.

Mirrors ``_chain_fallback`` operation for operation; see that module for the
meaning of every argument.  Family codes: 0 skew-normal, 1 skew-logistic,
2 skew-Laplace, 3 skew-t.  Prior codes follow ``priors.PRIOR_CODES``; -1
calls back into Python.
"""

from libc.math cimport atan, exp, fabs, isfinite, lgamma, log, log1p, sqrt, INFINITY
from scipy.special.cython_special cimport log_ndtr, stdtr

cdef double LOG2 = 0.6931471805599453
cdef double LOG_SQRT_2PI = 0.9189385332046727
cdef double PI = 3.141592653589793
cdef double TINY = 1e-300
# |log sigma| beyond this gives zero likelihood (keeps exp(log sigma) finite)
cdef double MAX_LOGSIG = 700.0

BACKEND = "compiled"


cdef inline double _t_logconst(double nu) nogil:
    return lgamma(0.5 * (nu + 1.0)) - lgamma(0.5 * nu) - 0.5 * log(nu * PI)


cdef inline double _t_logcdf(double nu, double u) nogil:
    cdef double p = stdtr(nu, u)
    if p > 0.0:
        return log(p)
    return (lgamma(0.5 * (nu + 1.0)) - lgamma(0.5 * nu) - 0.5 * log(PI)
            + (0.5 * nu - 1.0) * log(nu) - nu * log(fabs(u)))


cdef double _loglik(const double[::1] x, int fam, double dof, double tconst,
                    double mu, double logsig, double lam) nogil:
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double sig, total = 0.0, z, az, u, w
    if not fabs(logsig) < MAX_LOGSIG:
        return -INFINITY
    sig = exp(logsig)
    for i in range(n):
        z = (x[i] - mu) / sig
        if fam == 0:
            u = lam * z
            total += LOG2 - logsig + (-0.5 * z * z - LOG_SQRT_2PI) + log_ndtr(u)
        elif fam == 1:
            az = fabs(z)
            u = lam * z
            if u >= 0:
                w = -log1p(exp(-u))
            else:
                w = u - log1p(exp(u))
            total += LOG2 - logsig + (-az - 2.0 * log1p(exp(-az))) + w
        elif fam == 2:
            u = lam * z
            if u < 0:
                w = u - LOG2
            else:
                w = log1p(-0.5 * exp(-u))
            total += LOG2 - logsig + (-fabs(z) - LOG2) + w
        else:
            u = lam * z * sqrt((dof + 1.0) / (dof + z * z))
            total += (LOG2 - logsig + (tconst - 0.5 * (dof + 1.0) * log1p(z * z / dof))
                      + _t_logcdf(dof + 1.0, u))
    return total


cdef double _log_prior(int code, const double[::1] p, object fn, double lam) except? -1.5e308:
    cdef double a = fabs(lam), gap, lower, upper, out, z
    if code == 0:
        # BTV with M = atan(lam / s) / pi; p = (alpha, beta, s, log B)
        gap = 0.5 if a == 0 else atan(p[2] / a) / PI
        if lam >= 0:
            lower = 1.0 - gap
            upper = gap
        else:
            lower = gap
            upper = 1.0 - gap
        out = -p[3] - log(PI * p[2]) - log1p((a / p[2]) * (a / p[2]))
        if p[0] != 1.0:
            out += (p[0] - 1.0) * log(lower if lower > TINY else TINY)
        if p[1] != 1.0:
            out += (p[1] - 1.0) * log(upper if upper > TINY else TINY)
        return out
    if code == 1:
        # BTV with M = lam / (2 (1 + |lam|)); p = (alpha, beta, log B)
        gap = 0.5 / (1.0 + a)
        if lam >= 0:
            lower = 1.0 - gap
            upper = gap
        else:
            lower = gap
            upper = 1.0 - gap
        out = -p[2] + log(0.5) - 2.0 * log1p(a)
        if p[0] != 1.0:
            out += (p[0] - 1.0) * log(lower if lower > TINY else TINY)
        if p[1] != 1.0:
            out += (p[1] - 1.0) * log(upper if upper > TINY else TINY)
        return out
    if code == 2:
        # Student-t; p = (dof, scale, log normalising constant)
        z = lam / p[1]
        return p[2] - 0.5 * (p[0] + 1.0) * log1p(z * z / p[0])
    if code == 3:
        return -log(4.0 * p[0]) - 1.5 * log1p(a / p[0])
    if code == 4:
        z = (lam - p[0]) / p[1]
        return log(2.0 / p[1]) - 0.5 * z * z - LOG_SQRT_2PI + log_ndtr(p[2] * z)
    return float(fn(lam))


def loglik(const double[::1] data, int family, double dof, double mu, double sigma, double lam):
    """Log-likelihood of ``data`` (exposed for cross-backend tests)."""
    cdef double tconst = _t_logconst(dof) if family == 3 else 0.0
    return _loglik(data, family, dof, tconst, mu, log(sigma), lam)


def log_prior(int code, const double[::1] params, object fn, double lam):
    return _log_prior(code, params, fn, lam)


def run_block(const double[::1] data, int family, double dof,
              int prior_code, const double[::1] prior_params, object prior_fn,
              bint use_lik,
              double[::1] state, double[::1] cur, double[::1] log_scale,
              long long[::1] counters,
              const double[:, ::1] normals, const double[:, ::1] logu,
              long long burn_in, long long thin, long long adapt_horizon,
              double target, long long batch_size,
              double[:, ::1] out_draws, double[::1] out_logpost,
              double[:, ::1] scale_trace):
    cdef Py_ssize_t j, nrows = normals.shape[0]
    cdef int c, c0 = 0 if use_lik else 2
    cdef double tconst = _t_logconst(dof) if family == 3 else 0.0
    cdef double prop, ll, lp, old
    cdef long long it, bi

    for j in range(nrows):
        for c in range(c0, 3):
            prop = state[c] + exp(log_scale[c]) * normals[j, c]
            if c == 0:
                ll = _loglik(data, family, dof, tconst, prop, state[1], state[2])
                lp = cur[1]
            elif c == 1:
                ll = _loglik(data, family, dof, tconst, state[0], prop, state[2])
                lp = cur[1]
            else:
                ll = _loglik(data, family, dof, tconst, state[0], state[1], prop) if use_lik else 0.0
                lp = _log_prior(prior_code, prior_params, prior_fn, prop)
            old = cur[0] + cur[1]
            if logu[j, c] < (ll + lp) - old:
                state[c] = prop
                cur[0] = ll
                cur[1] = lp
                counters[2 + c] += 1
                if counters[0] >= burn_in:
                    counters[5 + c] += 1
        counters[0] += 1
        it = counters[0]
        if it % batch_size == 0:
            if it <= adapt_horizon:
                counters[1] += 1
                bi = counters[1]
                for c in range(c0, 3):
                    log_scale[c] += (<double>counters[2 + c] / batch_size - target) / sqrt(<double>bi)
            for c in range(3):
                counters[2 + c] = 0
                scale_trace[counters[9], c] = exp(log_scale[c])
            counters[9] += 1
        if it > burn_in and (it - burn_in) % thin == 0:
            out_draws[counters[8], 0] = state[0]
            out_draws[counters[8], 1] = exp(state[1])
            out_draws[counters[8], 2] = state[2]
            out_logpost[counters[8]] = cur[0] + cur[1] - state[1]
            counters[8] += 1
