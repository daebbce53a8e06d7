"""Priors on the skewness parameter ``lambda``.

The central object is the BTV(alpha, beta) prior: a Beta(alpha, beta) law
placed on ``M_TV(lambda) + 1/2`` and pushed back to the ``lambda`` scale,

    pi(lam) = (M + 1/2)^(alpha-1) (1/2 - M)^(beta-1) M'(lam) / B(alpha, beta).

Competitors used in the simulation studies are also provided: Student-t
approximations to Jeffreys priors, the ``pi_J`` approximation for the
skew-Laplace, and the skew-normal prior with hyperparameters
``(mu0, sigma0, lambda0)``.

Every prior exposes ``log_density``, ``density`` and ``kernel_spec``; the
latter encodes the prior for the compiled sampler (``None`` means the sampler
must call back into Python).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .exceptions import DomainError, ElicitationError
from .perturbation import PerturbationMeasure, measure_for
from .skew_symmetric import SkewFamily, family_from_name

__all__ = [
    "LambdaPrior",
    "BtvPrior",
    "JeffreysApprox",
    "StudentTPrior",
    "Cs13Prior",
    "btv_density",
    "btv_log_density_from_measure",
    "jeffreys_approx_density",
    "student_t_approx_btv11_logistic",
    "cs13_density",
    "log_density",
    "elicit_beta",
    "parse_prior",
    "PRIOR_CODES",
]

# Encoding shared with the chain kernels.
PRIOR_CODES = {"btv-arctan": 0, "btv-laplace": 1, "student-t": 2, "laplace-jeffreys": 3, "cs13": 4}

LAPLACE_JEFFREYS_S0 = 0.77
_TINY = 1e-300


def _scalar_or_array(fn):
    def wrapper(self, lam):
        if np.ndim(lam) == 0:
            return fn(self, float(lam))
        arr = np.asarray(lam, dtype=float)
        return np.array([fn(self, float(v)) for v in arr.ravel()]).reshape(arr.shape)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


class LambdaPrior:
    """Interface for proper priors on ``lambda``."""

    label = "prior"

    def log_density(self, lam):
        raise NotImplementedError

    def density(self, lam):
        return np.exp(self.log_density(lam))

    def kernel_spec(self):
        """``(code, params)`` for the compiled sampler, or ``None``."""
        return None

    def __str__(self):
        return self.label


def _t_logconst(dof, scale):
    return (
        special.gammaln(0.5 * (dof + 1))
        - special.gammaln(0.5 * dof)
        - 0.5 * math.log(dof * math.pi)
        - math.log(scale)
    )


def btv_log_density_from_measure(alpha, beta, m, dm):
    """Log BTV density from a value ``m`` of the measure and its derivative ``dm``.

    Useful for measures other than the presets (e.g. after reparametrising
    ``lambda``).
    """
    lower = max(m + 0.5, _TINY)
    upper = max(0.5 - m, _TINY)
    return (
        -special.betaln(alpha, beta)
        + (alpha - 1.0) * math.log(lower)
        + (beta - 1.0) * math.log(upper)
        + math.log(dm)
    )


@dataclass(frozen=True)
class BtvPrior(LambdaPrior):
    """The BTV(alpha, beta) prior for a given skew-symmetric preset.

    ``mode`` selects how ``M_TV`` is evaluated (see
    :class:`~btvprior.perturbation.PerturbationMeasure`); by default the closed
    form is used when available and quadrature otherwise.
    """

    alpha: float
    beta_: float
    family: SkewFamily = field(default_factory=lambda: family_from_name("skew-normal"))
    mode: str | None = None

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta_ > 0):
            raise DomainError("BTV hyperparameters must be > 0")
        if isinstance(self.family, str):
            object.__setattr__(self, "family", family_from_name(self.family))
        object.__setattr__(self, "_measure", measure_for(self.family, self.mode))

    @classmethod
    def uniform_tv(cls, family, mode=None):
        return cls(1.0, 1.0, family, mode)

    @classmethod
    def jeffreys_tv(cls, family, mode=None):
        return cls(0.5, 0.5, family, mode)

    @property
    def measure(self) -> PerturbationMeasure:
        return self._measure

    @property
    def label(self):
        return f"BTV({self.alpha:g},{self.beta_:g})"

    def _sides(self, lam):
        gap = self._measure.gap(lam)
        if lam >= 0:
            return 1.0 - gap, gap
        return gap, 1.0 - gap

    @_scalar_or_array
    def log_density(self, lam):
        if not math.isfinite(lam):
            raise DomainError("lambda must be finite")
        lower, upper = self._sides(lam)
        out = -special.betaln(self.alpha, self.beta_) + math.log(self._measure.derivative(lam))
        if self.alpha != 1.0:
            out += (self.alpha - 1.0) * math.log(max(lower, _TINY))
        if self.beta_ != 1.0:
            out += (self.beta_ - 1.0) * math.log(max(upper, _TINY))
        return out

    @_scalar_or_array
    def cdf(self, lam):
        """Prior cdf, ``I_{M(lam)+1/2}(alpha, beta)``."""
        lower, upper = self._sides(lam)
        if lam >= 0:
            return float(1.0 - special.betainc(self.beta_, self.alpha, upper))
        return float(special.betainc(self.alpha, self.beta_, lower))

    def kernel_spec(self):
        logb = float(special.betaln(self.alpha, self.beta_))
        s = self._measure.arctan_scale
        if s is not None:
            return PRIOR_CODES["btv-arctan"], (self.alpha, self.beta_, s, logb)
        if self._measure.mode == "closed-form":
            return PRIOR_CODES["btv-laplace"], (self.alpha, self.beta_, logb)
        return None


@dataclass(frozen=True)
class StudentTPrior(LambdaPrior):
    """Centred Student-t density with ``dof`` degrees of freedom and ``scale``."""

    dof: float
    scale: float
    name: str | None = None

    def __post_init__(self):
        if not (self.dof > 0 and self.scale > 0):
            raise DomainError("Student-t prior needs dof > 0 and scale > 0")

    @classmethod
    def btv11_logistic(cls):
        """Cauchy(0, 0.92) stand-in for the skew-logistic BTV(1,1) prior."""
        return cls(1.0, 0.92, "BTV(1,1)~t(1,0.92)")

    @property
    def label(self):
        return self.name or f"t({self.dof:g},{self.scale:g})"

    def log_density(self, lam):
        lam = np.asarray(lam, dtype=float)
        d, s = self.dof, self.scale
        out = _t_logconst(d, s) - 0.5 * (d + 1) * np.log1p((lam / s) ** 2 / d)
        return float(out) if out.ndim == 0 else out

    def kernel_spec(self):
        return PRIOR_CODES["student-t"], (self.dof, self.scale, float(_t_logconst(self.dof, self.scale)))


@dataclass(frozen=True)
class _LaplaceJeffreys(LambdaPrior):
    s0: float = LAPLACE_JEFFREYS_S0
    label = "Jeffreys"

    def log_density(self, lam):
        lam = np.asarray(lam, dtype=float)
        out = -math.log(4.0 * self.s0) - 1.5 * np.log1p(np.abs(lam) / self.s0)
        return float(out) if out.ndim == 0 else out

    def kernel_spec(self):
        return PRIOR_CODES["laplace-jeffreys"], (self.s0,)


def JeffreysApprox(family) -> LambdaPrior:
    """Approximate Jeffreys prior for a preset.

    * skew-normal: Student-t, 1/2 dof, scale pi/2
    * skew-logistic: Student-t, 1/2 dof, scale 4/3
    * skew-Laplace: ``1 / (4 s0 (1 + |lam/s0|)^(3/2))`` with ``s0 = 0.77``
    """
    fam = family_from_name(family) if isinstance(family, str) else family
    if fam.name == "skew-normal":
        return StudentTPrior(0.5, math.pi / 2, "Jeffreys")
    if fam.name == "skew-logistic":
        return StudentTPrior(0.5, 4.0 / 3.0, "Jeffreys")
    if fam.name == "skew-laplace":
        return _LaplaceJeffreys()
    raise DomainError(f"no Jeffreys approximation available for {fam}")


@dataclass(frozen=True)
class Cs13Prior(LambdaPrior):
    """Skew-normal prior ``(2/s0) phi((lam-m0)/s0) Phi(l0 (lam-m0)/s0)``."""

    mu0: float
    sigma0: float
    lambda0: float

    def __post_init__(self):
        if not (self.sigma0 > 0):
            raise DomainError("sigma0 must be > 0")

    @property
    def label(self):
        return f"SN({self.mu0:g},{self.sigma0:g},{self.lambda0:g})"

    def log_density(self, lam):
        z = (np.asarray(lam, dtype=float) - self.mu0) / self.sigma0
        out = (
            math.log(2.0 / self.sigma0)
            - 0.5 * z * z
            - 0.5 * math.log(2.0 * math.pi)
            + special.log_ndtr(self.lambda0 * z)
        )
        return float(out) if out.ndim == 0 else out

    def kernel_spec(self):
        return PRIOR_CODES["cs13"], (self.mu0, self.sigma0, self.lambda0)


# -- functional forms --------------------------------------------------------


def btv_density(prior: BtvPrior, lam):
    return prior.density(lam)


def jeffreys_approx_density(family, lam):
    return JeffreysApprox(family).density(lam)


def student_t_approx_btv11_logistic(lam):
    return StudentTPrior.btv11_logistic().density(lam)


def cs13_density(mu0, sigma0, lambda0, lam):
    return Cs13Prior(mu0, sigma0, lambda0).density(lam)


def log_density(prior: LambdaPrior, lam):
    return prior.log_density(lam)


# -- elicitation -------------------------------------------------------------


_MAX_LOG_STEP = 2.0
_LOG_BOUND = 15.0


def _beta_quantiles(log_ab, probs):
    a, b = np.exp(log_ab)
    return special.betaincinv(a, b, probs)


def elicit_beta(p_lo, q_lo, p_hi, q_hi, tol=1e-6, max_iter=200):
    """Find ``(alpha, beta)`` so the shifted Beta law has the given quantiles.

    ``q_lo`` and ``q_hi`` are targets on the ``M_TV`` scale ``(-1/2, 1/2)``;
    the Beta(alpha, beta) quantiles at ``p_lo`` and ``p_hi`` must equal
    ``q + 1/2``.  Solved by damped Newton iteration in ``(log alpha, log beta)``
    with a finite-difference Jacobian; nested bisection is the fallback.

    Raises
    ------
    ElicitationError
        If the targets are inconsistent or no solution is found.
    """
    if not (0 < p_lo < p_hi < 1):
        raise ElicitationError("need 0 < p_lo < p_hi < 1")
    if not (-0.5 < q_lo < q_hi < 0.5):
        raise ElicitationError("need -1/2 < q_lo < q_hi < 1/2")
    probs = np.array([p_lo, p_hi])
    target = np.array([q_lo, q_hi]) + 0.5

    def resid(theta):
        with np.errstate(all="ignore"):
            return _beta_quantiles(theta, probs) - target

    theta = _initial_guess(p_lo, p_hi, target)
    r = resid(theta)
    for _ in range(max_iter):
        if np.all(np.isfinite(r)) and np.max(np.abs(r)) < 1e-13:
            break
        h = 1e-6
        jac = np.empty((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            jac[:, j] = (resid(theta + e) - resid(theta - e)) / (2 * h)
        try:
            step = np.linalg.solve(jac, r)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        # trust region in log space; keeps betaincinv away from huge parameters
        step = np.clip(step, -_MAX_LOG_STEP, _MAX_LOG_STEP)
        norm = np.max(np.abs(r))
        t = 1.0
        while t > 1e-6:
            cand = np.clip(theta - t * step, -_LOG_BOUND, _LOG_BOUND)
            rc = resid(cand)
            if np.all(np.isfinite(rc)) and np.max(np.abs(rc)) < norm:
                theta, r = cand, rc
                break
            t *= 0.5
        else:
            break
    if not (np.all(np.isfinite(r)) and np.max(np.abs(r)) < tol):
        theta = _bisection_fallback(probs, target)
        r = resid(theta)
    if not (np.all(np.isfinite(r)) and np.max(np.abs(r)) < tol):
        raise ElicitationError(
            f"no Beta law reproduces quantiles {q_lo}@{p_lo} and {q_hi}@{p_hi}"
        )
    a, b = np.exp(theta)
    return float(a), float(b)


def _initial_guess(p_lo, p_hi, target):
    z_lo, z_hi = special.ndtri([p_lo, p_hi])
    mean = 0.5 * (target[0] + target[1])
    sd = (target[1] - target[0]) / max(z_hi - z_lo, 1e-3)
    total = max(mean * (1 - mean) / sd**2 - 1.0, 0.1)
    return np.clip(np.log([mean * total, (1 - mean) * total]), -_LOG_BOUND, _LOG_BOUND)


def _bisection_fallback(probs, target, lo=-_LOG_BOUND, hi=_LOG_BOUND, iters=200):
    """Solve the lower quantile for log(beta) given log(alpha), then bisect log(alpha)."""

    def beta_for(la):
        # lower quantile decreases as beta grows
        a_, b_ = lo, hi
        for _ in range(iters):
            mid = 0.5 * (a_ + b_)
            q = special.betaincinv(math.exp(la), math.exp(mid), probs[0])
            if q > target[0]:
                a_ = mid
            else:
                b_ = mid
        return 0.5 * (a_ + b_)

    def upper_err(la):
        lb = beta_for(la)
        return special.betaincinv(math.exp(la), math.exp(lb), probs[1]) - target[1]

    a_, b_ = lo, hi
    f_lo = upper_err(a_)
    if not np.isfinite(f_lo) or f_lo * upper_err(b_) > 0:
        return np.array([np.nan, np.nan])
    for _ in range(iters):
        mid = 0.5 * (a_ + b_)
        fm = upper_err(mid)
        if fm * f_lo > 0:
            a_, f_lo = mid, fm
        else:
            b_ = mid
    la = 0.5 * (a_ + b_)
    return np.array([la, beta_for(la)])


# -- textual prior specifications -------------------------------------------


def _numbers(text, count, spec):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise DomainError(f"malformed prior specification {spec!r}") from None
    if len(vals) != count:
        raise DomainError(f"prior {spec!r} expects {count} numbers")
    return vals


def parse_prior(spec: str, family) -> LambdaPrior:
    """Build a prior from a short specification string.

    Recognised forms::

        btv:ALPHA,BETA          uniform-tv (= btv:1,1)   jeffreys-tv (= btv:0.5,0.5)
        btv-exact:ALPHA,BETA    jeffreys                  cs13:MU0,SIGMA0,LAMBDA0
        t:DOF,SCALE

    For the skew-logistic, ``btv`` uses the Cauchy(0, 0.92) approximation
    to ``M_TV``; ``btv-exact`` integrates numerically instead (much slower
    inside the sampler).
    """
    fam = family_from_name(family) if isinstance(family, str) else family
    text = spec.strip().lower()
    name, _, args = text.partition(":")
    approx = "approx" if fam.name == "skew-logistic" else None
    if name == "uniform-tv" and not args:
        return BtvPrior(1.0, 1.0, fam, approx)
    if name == "jeffreys-tv" and not args:
        return BtvPrior(0.5, 0.5, fam, approx)
    if name == "btv":
        a, b = _numbers(args, 2, spec)
        return BtvPrior(a, b, fam, approx)
    if name == "btv-exact":
        a, b = _numbers(args, 2, spec)
        return BtvPrior(a, b, fam)
    if name == "jeffreys" and not args:
        return JeffreysApprox(fam)
    if name == "cs13":
        return Cs13Prior(*_numbers(args, 3, spec))
    if name == "t":
        return StudentTPrior(*_numbers(args, 2, spec))
    if name == "matching":
        raise DomainError("the matching prior is not supported")
    raise DomainError(f"unknown prior specification {spec!r}")
