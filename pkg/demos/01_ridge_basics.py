"""Ridge regression through the thin SVD: solutions, hat traces, and PRESS.

With p >> n, the ridge solution beta_hat = (X^T X + lam I)^{-1} X^T y never
needs a p x p solve: one thin SVD X = U diag(d) V^T gives the whole penalty
path for the cost of a few vector operations per lambda.
"""

import numpy as np

from hdridge.linalg import standardize, svd_thin, ridge_solve
from hdridge.linear import press_curve, gcv_lambda

rng = np.random.default_rng(7)
n, p = 50, 400
beta_true = rng.standard_normal(p) * 0.1
X = standardize(rng.standard_normal((n, p)))
y = X.values @ beta_true + rng.standard_normal(n)

svd = svd_thin(X)
print(f"design: n={svd.n}, p={svd.p}, numeric rank {svd.numeric_rank}")
print("(column standardization forces rank n-1: the rows sum to zero)\n")

print("penalty path (one SVD, reused for every lambda):")
print(f"{'lambda':>10} {'|beta|':>10} {'tr(H)':>8} {'train RSS':>12} {'PRESS':>12}")
lambdas = np.geomspace(0.1, 1e4, 6)
press = press_curve(svd, y, lambdas)
for lam, pr in zip(lambdas, press):
    sol = ridge_solve(svd, y, lam)
    rss = float(np.sum((y - sol.fitted) ** 2))
    print(f"{lam:>10.1f} {np.linalg.norm(sol.beta_hat):>10.4f} "
          f"{sol.hat_trace:>8.2f} {rss:>12.2f} {pr:>12.2f}")

print("\nPRESS is exact leave-one-out error, computed without refitting:")
print("training error always falls as lambda -> 0, but PRESS turns back up")
print("once the fit starts chasing noise.")

rep = gcv_lambda(svd, y)
print(f"\ngeneralized cross-validation picks lambda = {rep.lam:.1f} "
      f"(converged={rep.converged})")
