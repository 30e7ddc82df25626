"""Conjugate Bayesian ridge: beta | sigma2 ~ N(0, sigma2/nu I), sigma2 ~ IG(a, b).

The scaled prior makes the model conjugate: the posterior of sigma2 is
again inverse gamma with a* = a + n/2 and a data- and nu-dependent b*, and
the marginal likelihood of nu is available in closed form through the SVD
of X. Empirical Bayes maximizes that marginal over nu; the MAP/posterior
mean coefficients at nu equal ridge with penalty lambda = nu, so nu is
reported as the penalty.

``bayes_log_ml`` is the closed-form log marginal up to a data-independent
constant (its additive constant follows the a log b + log Gamma(a*) -
log Gamma(a) - (n/2) log pi convention); differences in nu, which are all
the empirical-Bayes search needs, are exact.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .errors import DataError, NumericError
from .linalg import SvdFactors
from .linear import _check_response
from .optimize import OptBounds, maximize_1d
from .report import EstimateReport, VarianceComponents

__all__ = [
    "BayesHyper",
    "PosteriorSigma",
    "EmpiricalBayesResult",
    "bayes_log_ml",
    "bayes_fixed_nu_sigma",
    "eb_estimate",
    "eb_report",
    "fixed_report",
]


@dataclass(frozen=True)
class BayesHyper:
    """Inverse-gamma hyperparameters (a, b) and prior precision ratio nu."""

    a: float = 1.0
    b: float = 0.001
    nu: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.nu > 0):
            raise DataError(f"hyperparameters must be positive, got a={self.a}, b={self.b}, nu={self.nu}")


@dataclass(frozen=True)
class PosteriorSigma:
    """Inverse-gamma posterior of sigma2: shape a_star, scale b_star_nu."""

    a_star: float
    b_star_nu: float

    def __post_init__(self):
        if not self.b_star_nu > 0:
            raise NumericError(f"posterior scale must be positive, got {self.b_star_nu}")
        if not self.a_star > 1:
            raise NumericError(f"posterior shape must exceed 1, got {self.a_star}")

    @property
    def sigma2_mean(self) -> float:
        return self.b_star_nu / (self.a_star - 1.0)

    @property
    def sigma_mean_sqrt(self) -> float:
        return math.sqrt(self.sigma2_mean)


def _posterior_scale(svd: SvdFactors, y: np.ndarray, nu: float, a: float, b: float) -> float:
    """b*(nu) = b + (y^T y - sum_k (u_k^T y)^2 d_k^2/(d_k^2+nu)) / 2."""
    r = svd.numeric_rank
    d2 = svd.D[:r] ** 2
    uty = svd.U[:, :r].T @ y
    explained = float(np.sum(uty**2 * d2 / (d2 + nu)))
    return b + 0.5 * (float(y @ y) - explained)


def bayes_log_ml(svd: SvdFactors, y, hyper: BayesHyper) -> float:
    """Closed-form log marginal likelihood of nu (up to a constant in the data).

    log ml(nu) = (q/2) log nu - (1/2) sum_k log(d_k^2 + nu)
                 - a* log b*(nu) + a log b + log Gamma(a*) - log Gamma(a)
                 - (n/2) log pi,
    with q = min(n, p); singular values below the rank cutoff contribute
    log(nu) and cancel against the leading term.
    """
    y = _check_response(y, svd.n)
    nu, a, b = hyper.nu, hyper.a, hyper.b
    r = svd.numeric_rank
    d2 = svd.D[:r] ** 2
    a_star = a + 0.5 * svd.n
    b_star = _posterior_scale(svd, y, nu, a, b)
    if b_star <= 0:
        raise NumericError(f"posterior scale b* = {b_star:.3e} <= 0 at nu={nu}")
    out = 0.5 * svd.q * math.log(nu)
    out -= 0.5 * (float(np.sum(np.log(d2 + nu))) + (svd.q - r) * math.log(nu))
    out -= a_star * math.log(b_star)
    out += a * math.log(b) + gammaln(a_star) - gammaln(a) - 0.5 * svd.n * math.log(math.pi)
    return out


def bayes_fixed_nu_sigma(svd: SvdFactors, y, nu: float, a: float = 1.0, b: float = 0.001) -> PosteriorSigma:
    """Posterior of sigma2 at a fixed prior precision ratio nu."""
    hyper = BayesHyper(a=a, b=b, nu=nu)  # validates positivity
    y = _check_response(y, svd.n)
    return PosteriorSigma(
        a_star=hyper.a + 0.5 * svd.n,
        b_star_nu=_posterior_scale(svd, y, hyper.nu, hyper.a, hyper.b),
    )


@dataclass(frozen=True)
class EmpiricalBayesResult:
    """nu maximizing the marginal likelihood, with posterior and components.

    components uses sigma2 = posterior mean and tau2 = sigma2 / nu, so the
    implied penalty lambda equals nu exactly.
    """

    nu: float
    posterior: PosteriorSigma
    components: VarianceComponents
    converged: bool
    log_marginal: float
    flags: tuple = ()


def eb_estimate(
    svd: SvdFactors,
    y,
    a: float = 1.0,
    b: float = 0.001,
    bounds: Optional[OptBounds] = None,
) -> EmpiricalBayesResult:
    """Empirical Bayes: maximize the closed-form marginal likelihood over nu.

    Searches log nu over a window scaled by the top eigenvalue d_1^2
    (1e-6 .. 1e8 times it by default) by scan plus golden section.
    """
    y = _check_response(y, svd.n)
    if bounds is None:
        d1sq = float(svd.D[0] ** 2) if svd.D.size and svd.D[0] > 0 else 1.0
        bounds = OptBounds(lo=math.log(1e-6 * d1sq), hi=math.log(1e8 * d1sq), max_iter=500, tol=1e-8)

    def objective(lognu: float) -> float:
        try:
            return bayes_log_ml(svd, y, BayesHyper(a=a, b=b, nu=math.exp(lognu)))
        except NumericError:
            return -np.inf

    res = maximize_1d(objective, bounds)
    nu = math.exp(float(res.x[0]))
    posterior = bayes_fixed_nu_sigma(svd, y, nu, a=a, b=b)
    sigma2 = posterior.sigma2_mean
    flags = []
    span = bounds.hi[0] - bounds.lo[0]
    if res.x[0] - bounds.lo[0] <= 1e-6 * span:
        flags.append("boundary_lo_nu")
    elif bounds.hi[0] - res.x[0] <= 1e-6 * span:
        flags.append("boundary_hi_nu")
    return EmpiricalBayesResult(
        nu=nu,
        posterior=posterior,
        components=VarianceComponents(sigma2=sigma2, tau2=sigma2 / nu, p=svd.p),
        converged=res.converged,
        log_marginal=res.value,
        flags=tuple(flags),
    )


def eb_report(result: EmpiricalBayesResult, wall_time_s: float = 0.0) -> EstimateReport:
    """Wrap an EmpiricalBayesResult as a standard report (method bayes_eb)."""
    return EstimateReport(
        method="bayes_eb",
        components=result.components,
        converged=result.converged,
        log_objective=result.log_marginal,
        wall_time_s=wall_time_s,
        flags=result.flags,
    )


def fixed_report(
    svd: SvdFactors, y, nu: float, a: float = 1.0, b: float = 0.001
) -> EstimateReport:
    """Report for the fixed-nu posterior (method bayes_fixed)."""
    t0 = time.perf_counter()
    posterior = bayes_fixed_nu_sigma(svd, y, nu, a=a, b=b)
    sigma2 = posterior.sigma2_mean
    return EstimateReport(
        method="bayes_fixed",
        components=VarianceComponents(sigma2=sigma2, tau2=sigma2 / nu, p=svd.p),
        converged=True,
        log_objective=bayes_log_ml(svd, y, BayesHyper(a=a, b=b, nu=nu)),
        wall_time_s=time.perf_counter() - t0,
    )
