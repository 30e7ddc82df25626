"""Core linear algebra for high-dimensional ridge problems.

Everything downstream works in the thin SVD of the (usually column
standardized) design matrix: with X = U diag(D) V^T and q = min(n, p), a
ridge solve, its hat-matrix traces, and the Gram pseudo-inverse are all
O(q) given the factors, no p x p object is ever formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericError

__all__ = [
    "DesignMatrix",
    "SvdFactors",
    "RidgeSolution",
    "standardize",
    "svd_thin",
    "gram_pseudo_inverse",
    "ridge_solve",
    "trace_product",
]

# Relative singular-value cutoff: d_k <= q * eps * d_1 counts as zero.
_EPS = float(np.finfo(np.float64).eps)


def _as_2d_float(values, what: str = "matrix") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"{what} must be 2-d, got ndim={arr.ndim}")
    if arr.shape[0] < 2 or arr.shape[1] < 1:
        raise DataError(f"{what} needs at least 2 rows and 1 column, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr).all(axis=1))[0])
        raise DataError(f"{what} contains non-finite entries (first bad row: {bad})")
    return arr


@dataclass(frozen=True)
class DesignMatrix:
    """An n x p design with rows = samples and columns = variables.

    ``standardized`` records (and on construction re-checks) that every
    column has mean 0 and population variance 1 (divisor n).
    """

    values: np.ndarray
    standardized: bool = False

    def __post_init__(self):
        arr = _as_2d_float(self.values, "design matrix")
        object.__setattr__(self, "values", arr)
        if self.standardized:
            mu = arr.mean(axis=0)
            if np.max(np.abs(mu)) > 1e-10:
                raise DataError("standardized design has a column mean above 1e-10")
            var = np.mean((arr - mu) ** 2, axis=0)
            if np.max(np.abs(var - 1.0)) > 1e-8:
                raise DataError("standardized design has a column variance off 1 by >1e-8")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


def standardize(values) -> DesignMatrix:
    """Center and scale columns to mean 0, population variance 1 (divisor n).

    Columns with (numerically) zero raw variance are rejected with the
    offending column index; they carry no signal and would divide by zero.
    """
    arr = _as_2d_float(values, "design matrix")
    mu = arr.mean(axis=0)
    var = np.mean((arr - mu) ** 2, axis=0)
    sd = np.sqrt(var)
    dead = sd <= 1e-12 * (1.0 + np.abs(mu))
    if np.any(dead):
        idx = np.flatnonzero(dead)
        raise DataError(
            f"column {int(idx[0])} has zero variance "
            f"({idx.size} such column(s)); drop constant columns first"
        )
    out = (arr - mu) / sd
    return DesignMatrix(values=out, standardized=True)


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD X = U diag(D) V^T with q = min(n, p) columns kept.

    ``numeric_rank`` counts singular values above q * eps * D[0]; entries at
    or below the cutoff are treated as exact zeros by consumers.
    """

    U: np.ndarray
    D: np.ndarray
    V: np.ndarray
    numeric_rank: int = field(default=-1)

    def __post_init__(self):
        if self.D.ndim != 1 or np.any(self.D < 0) or np.any(np.diff(self.D) > 0):
            raise NumericError("singular values must be non-negative, descending")
        if self.numeric_rank < 0:
            cutoff = self.q * _EPS * (self.D[0] if self.D.size else 0.0)
            object.__setattr__(self, "numeric_rank", int(np.sum(self.D > cutoff)))

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def p(self) -> int:
        return self.V.shape[0]

    @property
    def q(self) -> int:
        return self.D.shape[0]


def svd_thin(X) -> SvdFactors:
    """Thin SVD of a DesignMatrix or plain 2-d array.

    Raises NumericError with the offending shape if LAPACK fails to
    converge (rare; e.g. matrices with non-finite structure slipped in).
    """
    arr = X.values if isinstance(X, DesignMatrix) else _as_2d_float(X)
    try:
        U, D, Vt = np.linalg.svd(arr, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge for {arr.shape[0]}x{arr.shape[1]} matrix") from exc
    return SvdFactors(U=U, D=D, V=Vt.T)


def gram_pseudo_inverse(svd: SvdFactors) -> np.ndarray:
    """Moore-Penrose inverse of the Gram matrix X X^T, as an n x n array.

    (X X^T)^+ = U diag(1/d_k^2) U^T over the numeric rank, zero beyond it.
    """
    g = np.zeros(svd.q)
    r = svd.numeric_rank
    g[:r] = 1.0 / svd.D[:r] ** 2
    return (svd.U * g) @ svd.U.T


@dataclass(frozen=True)
class RidgeSolution:
    """Ridge fit at one penalty: coefficients, fitted values, hat traces."""

    beta_hat: np.ndarray
    lam: float
    fitted: np.ndarray
    hat_trace: float
    hat2_trace: float


def ridge_solve(svd: SvdFactors, y: np.ndarray, lam: float) -> RidgeSolution:
    """Ridge solution beta_hat = (X^T X + lam I)^-1 X^T y via the SVD.

    Shrinkage acts per singular direction: coefficient d_k/(d_k^2 + lam) on
    u_k^T y. tr(H) = sum d_k^2/(d_k^2+lam) and tr(H H^T) = sum of squares of
    the same ratios, so 0 <= tr(H H^T) <= tr(H) <= min(n, p) always.
    """
    if not lam > 0:
        raise ValueError(f"ridge penalty must be positive, got {lam}")
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != svd.n:
        raise DataError(f"response length {y.shape[0]} does not match n={svd.n}")
    d2 = svd.D**2
    uty = svd.U.T @ y
    shrink = d2 / (d2 + lam)
    beta = svd.V @ (svd.D / (d2 + lam) * uty)
    fitted = svd.U @ (shrink * uty)
    return RidgeSolution(
        beta_hat=beta,
        lam=float(lam),
        fitted=fitted,
        hat_trace=float(np.sum(shrink)),
        hat2_trace=float(np.sum(shrink**2)),
    )


def trace_product(A: np.ndarray, B: np.ndarray) -> float:
    """tr(A B) without forming A B, as sum(A * B^T).

    A must be p x n and B n x p (any conformable pair works).
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[0] != B.shape[1] or A.shape[1] != B.shape[0]:
        raise DataError(f"trace_product needs shapes (p,n) and (n,p), got {A.shape} and {B.shape}")
    return float(np.sum(A * B.T))
