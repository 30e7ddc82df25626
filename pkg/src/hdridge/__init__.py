"""Variance components, ridge penalty, and heritability for high-dimensional
linear, mixed, Bayesian, and generalized linear ridge models.

Everything is built on one thin SVD of the n x p design matrix, so the
estimators stay fast when p is orders of magnitude larger than n.
"""

from .bayes import (
    BayesHyper,
    EmpiricalBayesResult,
    PosteriorSigma,
    bayes_fixed_nu_sigma,
    bayes_log_ml,
    eb_estimate,
)
from .errors import (
    DataError,
    DegreesOfFreedomError,
    InstabilityError,
    NumericError,
    OptimizationError,
    RankError,
)
from .glm import (
    BinomialFamily,
    GaussianFamily,
    GlmFamily,
    LaplaceFit,
    LatentGaussianPrior,
    PoissonFamily,
    fit_latent_mode,
    glm_kfold_cv_lambda,
    glm_mml_lambda,
    laplace_log_ml,
    parse_family,
)
from .linalg import (
    DesignMatrix,
    RidgeSolution,
    SvdFactors,
    gram_pseudo_inverse,
    ridge_solve,
    standardize,
    svd_thin,
    trace_product,
)
from .linear import (
    basic_sigma2,
    gcv_lambda,
    hilmm_h2,
    kfold_cv_lambda,
    marginal_loglik,
    mml_estimate,
    mom_estimate,
    pcr_sigma2,
    press_curve,
)
from .mixed import MixedDesign, contrast_basis, mml_mixed_estimate, reml_estimate
from .optimize import OptBounds, OptResult, maximize_1d, maximize_nd
from .report import EstimateReport, VarianceComponents, convert
from .sim import SimConfig, gen_design, gen_effects, gen_response, load_config, parse_config, run_comparison

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # linalg
    "DesignMatrix",
    "SvdFactors",
    "RidgeSolution",
    "standardize",
    "svd_thin",
    "gram_pseudo_inverse",
    "ridge_solve",
    "trace_product",
    # report
    "VarianceComponents",
    "EstimateReport",
    "convert",
    # optimize
    "OptBounds",
    "OptResult",
    "maximize_1d",
    "maximize_nd",
    # linear
    "marginal_loglik",
    "mml_estimate",
    "mom_estimate",
    "basic_sigma2",
    "pcr_sigma2",
    "gcv_lambda",
    "kfold_cv_lambda",
    "press_curve",
    "hilmm_h2",
    # mixed
    "MixedDesign",
    "contrast_basis",
    "reml_estimate",
    "mml_mixed_estimate",
    # bayes
    "BayesHyper",
    "PosteriorSigma",
    "EmpiricalBayesResult",
    "bayes_log_ml",
    "bayes_fixed_nu_sigma",
    "eb_estimate",
    # glm
    "GlmFamily",
    "GaussianFamily",
    "PoissonFamily",
    "BinomialFamily",
    "LatentGaussianPrior",
    "LaplaceFit",
    "parse_family",
    "fit_latent_mode",
    "laplace_log_ml",
    "glm_mml_lambda",
    "glm_kfold_cv_lambda",
    # sim
    "SimConfig",
    "parse_config",
    "load_config",
    "gen_design",
    "gen_effects",
    "gen_response",
    "run_comparison",
    # errors
    "DataError",
    "DegreesOfFreedomError",
    "RankError",
    "NumericError",
    "OptimizationError",
    "InstabilityError",
]
