"""Deterministic derivative-free maximizers for (log) marginal likelihoods.

Both routines follow the same recipe: a coarse scan to locate the basin,
then a local refinement. They use no randomness and only elementary float
arithmetic, so repeated calls with identical inputs are bit-identical.
Objectives are maximized; callers minimizing should negate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DataError, OptimizationError

__all__ = ["OptBounds", "OptResult", "maximize_1d", "maximize_nd"]

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0  # golden ratio step, ~0.618
_SCAN_POINTS = 64


@dataclass(frozen=True)
class OptBounds:
    """Box bounds plus iteration budget and relative argument tolerance."""

    lo: np.ndarray
    hi: np.ndarray
    max_iter: int = 500
    tol: float = 1e-8

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=np.float64))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo.shape != hi.shape or not np.all(lo < hi):
            raise DataError("bounds must satisfy lo < hi elementwise")
        if not self.tol > 0:
            raise DataError("tol must be positive")
        if self.max_iter < 10:
            raise DataError("max_iter must be at least 10")


@dataclass(frozen=True)
class OptResult:
    """Best point found, its objective value, and scan diagnostics."""

    x: np.ndarray
    value: float
    converged: bool
    n_iter: int
    scan_x: Optional[np.ndarray] = None
    scan_f: Optional[np.ndarray] = None


def _finite_or_neginf(v: float) -> float:
    v = float(v)
    return v if np.isfinite(v) else -np.inf


def maximize_1d(f: Callable[[float], float], bounds: OptBounds) -> OptResult:
    """Scan 64 equispaced points, then golden-section around the best one.

    If no scanned point yields a finite value the search is hopeless and an
    OptimizationError carrying the scan trace is raised. The returned point
    is the best of the scan and the refinement, so an endpoint optimum is
    returned as the endpoint itself.
    """
    lo, hi = float(bounds.lo[0]), float(bounds.hi[0])
    xs = np.linspace(lo, hi, _SCAN_POINTS)
    fs = np.array([_finite_or_neginf(f(x)) for x in xs])
    if not np.any(np.isfinite(fs)):
        raise OptimizationError(
            "objective is non-finite at every scanned point",
            trace=list(zip(xs.tolist(), fs.tolist())),
        )
    i_best = int(np.argmax(fs))
    best_x, best_f = float(xs[i_best]), float(fs[i_best])

    # Golden-section on the bracket spanned by the scan neighbours.
    a = float(xs[max(i_best - 1, 0)])
    b = float(xs[min(i_best + 1, _SCAN_POINTS - 1)])
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = _finite_or_neginf(f(c)), _finite_or_neginf(f(d))
    n_iter = 0
    converged = False
    while n_iter < bounds.max_iter:
        n_iter += 1
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = _finite_or_neginf(f(c))
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = _finite_or_neginf(f(d))
        mid = 0.5 * (a + b)
        if (b - a) <= bounds.tol * (1.0 + abs(mid)):
            converged = True
            break
    for x_cand, f_cand in ((c, fc), (d, fd)):
        if f_cand > best_f:
            best_x, best_f = float(x_cand), float(f_cand)
    return OptResult(
        x=np.array([best_x]),
        value=best_f,
        converged=converged,
        n_iter=n_iter,
        scan_x=xs,
        scan_f=fs,
    )


def _clip(x: np.ndarray, bounds: OptBounds) -> np.ndarray:
    return np.minimum(np.maximum(x, bounds.lo), bounds.hi)


def _nelder_mead(f, x0: np.ndarray, bounds: OptBounds, step: float, max_iter: int):
    """One Nelder-Mead run (maximization) with box projection.

    The initial simplex uses *additive* steps so that objectives expressed
    in log coordinates keep exact scale equivariance: shifting the optimum
    shifts every simplex vertex by the same amount.
    """
    k = x0.size
    verts = [x0.copy()]
    for j in range(k):
        v = x0.copy()
        v[j] = x0[j] + step
        v = _clip(v, bounds)
        if abs(v[j] - x0[j]) < 0.5 * step:  # clipped into the start point, go down instead
            v[j] = x0[j] - step
            v = _clip(v, bounds)
        verts.append(v)
    simplex = np.array(verts)
    fvals = np.array([_finite_or_neginf(f(v)) for v in simplex])

    n_iter = 0
    converged = False
    while n_iter < max_iter:
        n_iter += 1
        order = np.argsort(-fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        best, worst = fvals[0], fvals[-1]
        xdiam = np.max(np.abs(simplex - simplex[0]))
        fspread = abs(best - worst)
        if xdiam <= bounds.tol * (1.0 + np.max(np.abs(simplex[0]))) and (
            fspread <= bounds.tol * (1.0 + abs(best)) or not np.isfinite(fspread)
        ):
            converged = True
            break

        centroid = simplex[:-1].mean(axis=0)
        xr = _clip(centroid + (centroid - simplex[-1]), bounds)
        fr = _finite_or_neginf(f(xr))
        if fr > fvals[0]:
            xe = _clip(centroid + 2.0 * (centroid - simplex[-1]), bounds)
            fe = _finite_or_neginf(f(xe))
            if fe > fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
        elif fr > fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
        else:
            xc = _clip(centroid + 0.5 * (simplex[-1] - centroid), bounds)
            fc = _finite_or_neginf(f(xc))
            if fc > fvals[-1]:
                simplex[-1], fvals[-1] = xc, fc
            else:  # shrink toward the best vertex
                for i in range(1, k + 1):
                    simplex[i] = _clip(simplex[0] + 0.5 * (simplex[i] - simplex[0]), bounds)
                    fvals[i] = _finite_or_neginf(f(simplex[i]))
    i_best = int(np.argmax(fvals))
    return simplex[i_best], float(fvals[i_best]), n_iter, converged


def _quad_polish(f, x: np.ndarray, fx: float, bounds: OptBounds):
    """Finite-difference Newton refinement of an interior simplex optimum.

    Once function differences fall below evaluation noise the simplex can
    collapse anywhere on a plateau of width ~sqrt(noise/curvature), which
    limits argument accuracy to roughly 1e-8 for log-likelihood surfaces.
    Fitting the local quadratic on a stencil much wider than that plateau
    averages the noise out and pins the peak to ~noise/(curvature*h). The
    step is rejected near bounds, on non-finite stencil values, when the
    Hessian is singular, or when the move is large or costs more than noise,
    so boundary optima and flat objectives pass through unchanged.
    """
    k = x.size
    for h in (1e-4, 1e-5):
        if np.any(x - bounds.lo < h) or np.any(bounds.hi - x < h):
            return x, fx
        grad = np.zeros(k)
        hess = np.zeros((k, k))
        for i in range(k):
            e = np.zeros(k)
            e[i] = h
            fp = _finite_or_neginf(f(x + e))
            fm = _finite_or_neginf(f(x - e))
            if not (np.isfinite(fp) and np.isfinite(fm)):
                return x, fx
            grad[i] = (fp - fm) / (2.0 * h)
            hess[i, i] = (fp - 2.0 * fx + fm) / (h * h)
        for i in range(k):
            for j in range(i + 1, k):
                ei = np.zeros(k)
                ej = np.zeros(k)
                ei[i] = h
                ej[j] = h
                corners = [
                    _finite_or_neginf(f(x + ei + ej)),
                    _finite_or_neginf(f(x + ei - ej)),
                    _finite_or_neginf(f(x - ei + ej)),
                    _finite_or_neginf(f(x - ei - ej)),
                ]
                if not np.all(np.isfinite(corners)):
                    return x, fx
                hess[i, j] = hess[j, i] = (
                    corners[0] - corners[1] - corners[2] + corners[3]
                ) / (4.0 * h * h)
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            return x, fx
        if not np.all(np.isfinite(step)) or np.max(np.abs(step)) > 0.1:
            return x, fx
        x_new = _clip(x + step, bounds)
        f_new = _finite_or_neginf(f(x_new))
        if f_new < fx - 1e-10 * (1.0 + abs(fx)):
            return x, fx
        x, fx = x_new, f_new
    return x, fx


def maximize_nd(f: Callable[[np.ndarray], float], init, bounds: OptBounds) -> OptResult:
    """Nelder-Mead with a deterministic additive simplex, restarted once.

    The restart re-seeds a fresh (smaller) simplex at the first optimum,
    which guards against premature simplex collapse, and a final Newton
    polish locates the peak through the objective's evaluation noise.
    Every candidate is projected into the bounds, so the result always
    satisfies them.
    """
    x0 = _clip(np.atleast_1d(np.asarray(init, dtype=np.float64)).copy(), bounds)
    if x0.shape != bounds.lo.shape:
        raise DataError(f"init shape {x0.shape} does not match bounds {bounds.lo.shape}")
    f0 = _finite_or_neginf(f(x0))
    if not np.isfinite(f0):
        raise DataError("objective is non-finite at the initial point")

    x1, f1, it1, conv1 = _nelder_mead(f, x0, bounds, step=0.5, max_iter=bounds.max_iter)
    x2, f2, it2, conv2 = _nelder_mead(f, x1, bounds, step=0.05, max_iter=bounds.max_iter)
    if f2 >= f1:
        x_best, f_best = x2, f2
    else:
        x_best, f_best = x1, f1
    x_best, f_best = _quad_polish(f, x_best, f_best, bounds)
    return OptResult(
        x=x_best,
        value=f_best,
        converged=bool(conv1 and conv2),
        n_iter=it1 + it2,
    )
