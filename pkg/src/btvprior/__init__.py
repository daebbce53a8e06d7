"""Total-variation priors and Bayesian inference for skew-symmetric models.

The perturbation parameter ``lambda`` of a skew-symmetric density
``2/sigma f(z) G(lambda omega(z))`` is mapped to the signed total-variation
distance ``M_TV(lambda)`` between the skewed and the symmetric density.  A
Beta law on ``M_TV + 1/2`` induces the BTV prior on ``lambda``.  The package
provides the densities, the priors, an adaptive Metropolis sampler with a
compiled core, posterior summaries and a simulation-study harness.
"""

from importlib.metadata import PackageNotFoundError, version

from . import _backend
from .base_dists import Laplace, Logistic, Normal, QuadratureSpec, StudentT, SymmetricBase, integrate
from .exceptions import (
    BtvError,
    ConvergenceError,
    DomainError,
    ElicitationError,
    FitError,
    InitializationError,
    ProprietyError,
)
from .inference import (
    FitReport,
    bootstrap_ci,
    credible_interval,
    map_estimate,
    mle_fit,
    savage_dickey_bf,
    summarize,
)
from .mcmc import ChainConfig, PosteriorChain, PosteriorSpec, log_posterior, run_chain
from .perturbation import PerturbationMeasure, m_tv, m_tv_derivative, m_tv_inverse, measure_for, tv_distance
from .priors import (
    BtvPrior,
    Cs13Prior,
    JeffreysApprox,
    LambdaPrior,
    StudentTPrior,
    elicit_beta,
    parse_prior,
)
from .simstudy import StudyConfig, StudyReport, emit_table, parse_table, run_study
from .skew_symmetric import (
    SKEW_LAPLACE,
    SKEW_LOGISTIC,
    SKEW_NORMAL,
    SkewFamily,
    SkewSymmetricModel,
    TwoPieceModel,
    family_from_name,
    skew_laplace,
    skew_logistic,
    skew_normal,
    skew_t,
)

try:
    __version__ = version("btvprior")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

BACKEND = _backend.ACTIVE.BACKEND
