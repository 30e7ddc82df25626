"""Mixed model: unpenalized fixed effects plus high-dimensional random effects.

Model: y = X_f alpha + X_r beta + eps, beta ~ N(0, tau2 I), eps ~
N(0, sigma2 I), with m = X_f columns small and p = X_r columns large.
Two estimators: REML removes alpha by projecting onto an orthonormal basis
of the complement of col(X_f) and runs plain marginal likelihood there;
joint MML keeps alpha and profiles it out by generalized least squares
inside the objective.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import DataError
from .linalg import DesignMatrix, svd_thin
from .linear import _boundary_flags, _check_response, _default_mml_bounds, _fit_gaussian_components, _GaussStats
from .optimize import OptBounds, maximize_nd
from .report import EstimateReport, VarianceComponents

__all__ = ["MixedDesign", "contrast_basis", "reml_estimate", "mml_mixed_estimate"]

_LOG2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class MixedDesign:
    """Fixed-effect columns X_f (n x m, full rank, m < n) and random X_r."""

    Xf: np.ndarray
    Xr: DesignMatrix

    def __post_init__(self):
        xf = np.asarray(self.Xf, dtype=np.float64)
        if xf.ndim != 2:
            raise DataError(f"fixed-effect design must be 2-d, got ndim={xf.ndim}")
        object.__setattr__(self, "Xf", xf)
        n, m = xf.shape
        if n != self.Xr.n:
            raise DataError(f"fixed ({n}) and random ({self.Xr.n}) designs disagree on n")
        if m >= n:
            raise DataError(f"need m < n, got m={m}, n={n}")
        if m > 0:
            if not np.all(np.isfinite(xf)):
                raise DataError("fixed-effect design contains non-finite entries")
            sv = np.linalg.svd(xf, compute_uv=False)
            if sv[-1] <= m * np.finfo(np.float64).eps * sv[0]:
                raise DataError("fixed-effect design is rank deficient")

    @property
    def n(self) -> int:
        return self.Xf.shape[0]

    @property
    def m(self) -> int:
        return self.Xf.shape[1]


def contrast_basis(Xf: np.ndarray) -> np.ndarray:
    """Orthonormal basis K (n x (n-m)) of the orthogonal complement of col(X_f).

    K^T X_f = 0 and K^T K = I; projecting y on K removes the fixed effects
    while keeping an ordinary (smaller) Gaussian model, since K K^T is the
    annihilator I - X_f (X_f^T X_f)^-1 X_f^T.
    """
    Xf = np.asarray(Xf, dtype=np.float64)
    n, m = Xf.shape
    if m == 0:
        return np.eye(n)
    U, _, _ = np.linalg.svd(Xf, full_matrices=True)
    return U[:, m:]


def reml_estimate(design: MixedDesign, y, bounds: Optional[OptBounds] = None) -> EstimateReport:
    """Restricted maximum likelihood for (sigma2, tau2) under fixed effects.

    Maximizes the marginal likelihood of the contrast data K^T y against
    the contrast design K^T X_r; with m = 0 this is exactly the plain
    linear-model path (K = I).
    """
    t0 = time.perf_counter()
    y = _check_response(y, design.n)
    if design.m == 0:
        rep = _fit_gaussian_components(svd_thin(design.Xr), y, "reml", bounds)
    else:
        K = contrast_basis(design.Xf)
        rep = _fit_gaussian_components(svd_thin(K.T @ design.Xr.values), K.T @ y, "reml", bounds)
    return replace(rep, wall_time_s=time.perf_counter() - t0)


def mml_mixed_estimate(
    design: MixedDesign, y, bounds: Optional[OptBounds] = None
) -> EstimateReport:
    """Joint maximum marginal likelihood over (sigma2, tau2, alpha).

    For each candidate (sigma2, tau2) the fixed effects alpha enter a
    Gaussian likelihood quadratically, so they are profiled out exactly by
    generalized least squares; the outer search stays two dimensional. The
    report carries alpha_hat evaluated at the optimum.
    """
    t0 = time.perf_counter()
    y = _check_response(y, design.n)
    if design.m == 0:
        rep = _fit_gaussian_components(svd_thin(design.Xr), y, "mml_mixed", bounds)
        return replace(rep, alpha_hat=np.zeros(0), wall_time_s=time.perf_counter() - t0)

    svd = svd_thin(design.Xr)
    stats = _GaussStats(svd, y)
    # Split X_f and y into the span of U (rotated) and its complement.
    f_rot = svd.U.T @ design.Xf
    y_rot = svd.U.T @ y
    f_perp = design.Xf - svd.U @ f_rot
    y_perp = y - svd.U @ y_rot
    g_perp = f_perp.T @ f_perp
    c_perp = f_perp.T @ y_perp
    ypp = float(y_perp @ y_perp)
    d2 = svd.D**2
    n = design.n

    def gls_alpha(sigma2: float, tau2: float) -> np.ndarray:
        v = tau2 * d2 + sigma2
        A = (f_rot.T / v) @ f_rot + g_perp / sigma2
        rhs = f_rot.T @ (y_rot / v) + c_perp / sigma2
        return np.linalg.solve(A, rhs)

    def loglik(sigma2: float, tau2: float) -> float:
        v = tau2 * d2 + sigma2
        alpha = gls_alpha(sigma2, tau2)
        r_rot = y_rot - f_rot @ alpha
        quad = float(np.sum(r_rot**2 / v))
        quad += (ypp - 2.0 * float(alpha @ c_perp) + float(alpha @ g_perp @ alpha)) / sigma2
        logdet = float(np.sum(np.log(v))) + (n - svd.q) * math.log(sigma2)
        return -0.5 * (logdet + quad + n * _LOG2PI)

    if bounds is None:
        bounds, init = _default_mml_bounds(stats)
    else:
        init = 0.5 * (bounds.lo + bounds.hi)

    def objective(x: np.ndarray) -> float:
        try:
            return loglik(math.exp(x[0]), math.exp(x[1]))
        except np.linalg.LinAlgError:
            return -np.inf

    res = maximize_nd(objective, init, bounds)
    sigma2, tau2 = math.exp(res.x[0]), math.exp(res.x[1])
    return EstimateReport(
        method="mml_mixed",
        components=VarianceComponents(sigma2=sigma2, tau2=tau2, p=design.Xr.p),
        converged=res.converged,
        log_objective=res.value,
        wall_time_s=time.perf_counter() - t0,
        flags=_boundary_flags(res.x, bounds, ("sigma2", "tau2")),
        alpha_hat=gls_alpha(sigma2, tau2),
    )
