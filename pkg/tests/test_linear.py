"""Tests for the single-response linear-model estimators."""

import numpy as np
import pytest

from hdridge.errors import (
    DataError,
    DegreesOfFreedomError,
    InstabilityError,
    RankError,
)
from hdridge.linalg import DesignMatrix, ridge_solve, standardize, svd_thin
from hdridge.linear import (
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
from hdridge.report import VarianceComponents, convert


def rand(seed):
    return np.random.default_rng(seed)


class TestConvert:
    def test_standard_setting(self):
        lam, h2 = convert(VarianceComponents(sigma2=10.0, tau2=0.01, p=1000))
        assert lam == pytest.approx(1000.0)
        assert h2 == pytest.approx(0.5)

    def test_gene_expression_setting(self):
        lam, h2 = convert(VarianceComponents(sigma2=184.0, tau2=0.01, p=18391))
        assert lam == pytest.approx(18400.0)
        assert h2 == pytest.approx(183.91 / (183.91 + 184.0))

    def test_no_noise(self):
        lam, h2 = convert(VarianceComponents(sigma2=0.0, tau2=1.0, p=5))
        assert lam == 0.0
        assert h2 == 1.0

    def test_zero_tau2_sentinels(self):
        lam, h2 = convert(VarianceComponents(sigma2=2.0, tau2=0.0, p=4))
        assert lam == np.inf
        assert h2 == 0.0


class TestMmlEstimate:
    def test_dense_mvn_oracle(self):
        X = rand(30).standard_normal((10, 3))
        y = rand(31).standard_normal(10)
        svd = svd_thin(X)
        for s2, t2 in [(1.0, 1.0), (0.5, 2.0), (3.0, 0.01)]:
            C = t2 * (X @ X.T) + s2 * np.eye(10)
            sign, logdet = np.linalg.slogdet(C)
            oracle = -0.5 * (10 * np.log(2 * np.pi) + logdet + y @ np.linalg.solve(C, y))
            assert marginal_loglik(svd, y, s2, t2) == pytest.approx(oracle, abs=1e-8)

    def test_zero_response_degenerate(self):
        X = standardize(rand(32).standard_normal((12, 20)))
        rep = mml_estimate(svd_thin(X), np.zeros(12))
        assert any(f.startswith("boundary_lo") for f in rep.flags)

    def test_scale_equivariance(self):
        X = standardize(rand(33).standard_normal((25, 60)))
        svd = svd_thin(X)
        y = X.values @ rand(34).normal(0, 0.2, 60) + rand(35).normal(0, 1.0, 25)
        base = mml_estimate(svd, y)
        c = 3.7
        scaled = mml_estimate(svd, c * y)
        assert scaled.sigma2 == pytest.approx(c**2 * base.sigma2, rel=1e-6)
        assert scaled.tau2 == pytest.approx(c**2 * base.tau2, rel=1e-6)
        assert scaled.lam == pytest.approx(base.lam, rel=1e-6)
        assert scaled.h2 == pytest.approx(base.h2, rel=1e-6)

    def test_determinism(self):
        X = standardize(rand(36).standard_normal((15, 40)))
        svd = svd_thin(X)
        y = rand(37).standard_normal(15)
        r1, r2 = mml_estimate(svd, y), mml_estimate(svd, y)
        assert (r1.sigma2, r1.tau2) == (r2.sigma2, r2.tau2)

    def test_reports_log_objective(self):
        X = standardize(rand(38).standard_normal((10, 15)))
        svd = svd_thin(X)
        y = rand(39).standard_normal(10)
        rep = mml_estimate(svd, y)
        assert rep.log_objective == pytest.approx(
            marginal_loglik(svd, y, rep.sigma2, rep.tau2), abs=1e-10
        )


class TestMomEstimate:
    def test_zero_response(self):
        X = standardize(rand(40).standard_normal((8, 5)))
        rep = mom_estimate(X, np.zeros(8))
        assert rep.tau2 == 0.0 and rep.sigma2 == 0.0

    def test_n2_closed_form(self):
        c = 0.6
        L = np.linalg.cholesky(np.array([[1.0, c], [c, 1.0]]))
        X = DesignMatrix(values=L, standardized=False)
        a, b = 1.3, -0.4
        rep = mom_estimate(X, np.array([a, b]))
        assert rep.tau2 == pytest.approx(a * b / c, abs=1e-12)
        assert rep.sigma2 == pytest.approx(0.5 * (a**2 + b**2) - a * b / c, abs=1e-12)

    def test_double_loop_oracle(self):
        Xv = rand(41).standard_normal((8, 4))
        y = rand(42).standard_normal(8)
        X = DesignMatrix(values=Xv, standardized=False)
        rep = mom_estimate(X, y)
        G = Xv @ Xv.T
        num = sum(y[i] * y[k] for i in range(8) for k in range(8) if i != k)
        den = sum(G[i, k] for i in range(8) for k in range(8) if i != k)
        tau2 = num / den
        sigma2 = np.mean(y**2 - tau2 * np.diag(G))
        assert rep.tau2 == pytest.approx(tau2, abs=1e-12)
        assert rep.sigma2 == pytest.approx(sigma2, abs=1e-12)

    def test_orthogonal_rows_instability(self):
        X = DesignMatrix(values=np.eye(2, 4), standardized=False)
        with pytest.raises(InstabilityError):
            mom_estimate(X, np.array([1.0, 2.0]))

    def test_negative_flagged(self):
        # Anti-correlated response pair forces a negative moment estimate.
        Xv = rand(43).standard_normal((6, 3))
        X = DesignMatrix(values=Xv, standardized=False)
        G = Xv @ Xv.T
        off = G.sum() - np.trace(G)
        y = np.ones(6)
        if (len(y) ** 2 - len(y)) / off > 0:  # make numerator sign opposite
            y[::2] *= -1.0
        rep = mom_estimate(X, y)
        if rep.tau2 < 0:
            assert "negative_tau2" in rep.flags

    def test_moment_unbiasedness(self):
        # Fixed 10x20 design, 2000 responses with (sigma2, tau2) = (1, 0.05):
        # the mean of tau2_hat stays within 3 standard errors of 0.05.
        X = standardize(rand(44).standard_normal((10, 20)))
        rng = rand(45)
        taus = np.empty(2000)
        for i in range(2000):
            beta = rng.normal(0.0, np.sqrt(0.05), 20)
            y = X.values @ beta + rng.normal(0.0, 1.0, 10)
            taus[i] = mom_estimate(X, y).tau2
        se = taus.std(ddof=1) / np.sqrt(len(taus))
        assert abs(taus.mean() - 0.05) <= 3 * se


class TestBasicSigma2:
    def test_infinite_shrinkage(self):
        X = standardize(rand(46).standard_normal((9, 4)))
        y = rand(47).standard_normal(9)
        svd = svd_thin(X)
        assert basic_sigma2(svd, y, 1e12) == pytest.approx(np.mean(y**2), rel=1e-6)

    def test_hat_matrix_oracle(self):
        Xv = rand(48).standard_normal((6, 2))
        y = rand(49).standard_normal(6)
        svd = svd_thin(Xv)
        lam = 1.0
        H = Xv @ np.linalg.solve(Xv.T @ Xv + lam * np.eye(2), Xv.T)
        rss = float(np.sum((y - H @ y) ** 2))
        nu_resid = 6 - 2 * np.trace(H) + np.trace(H @ H.T)
        nu_trace = 6 - np.trace(H)
        assert basic_sigma2(svd, y, lam) == pytest.approx(rss / nu_resid, abs=1e-10)
        assert basic_sigma2(svd, y, lam, dof="trace") == pytest.approx(rss / nu_trace, abs=1e-10)

    def test_saturated_fit_errors(self):
        # Full row rank needed for tr(H) -> n; standardization would drop it.
        X = rand(50).standard_normal((6, 12))
        y = rand(51).standard_normal(6)
        with pytest.raises(DegreesOfFreedomError):
            basic_sigma2(svd_thin(X), y, 1e-15)

    def test_bad_args(self):
        svd = svd_thin(rand(52).standard_normal((5, 3)))
        with pytest.raises(ValueError):
            basic_sigma2(svd, np.zeros(5), 0.0)
        with pytest.raises(ValueError):
            basic_sigma2(svd, np.zeros(5), 1.0, dof="bogus")


class TestPcrSigma2:
    def test_near_saturation(self):
        X = standardize(rand(53).standard_normal((8, 30)))
        y = rand(54).standard_normal(8)
        svd = svd_thin(X)
        assert svd.numeric_rank == 7
        resid = y - svd.U[:, :7] @ (svd.U[:, :7].T @ y)
        assert pcr_sigma2(svd, y, 7) == pytest.approx(float(resid @ resid), rel=1e-10)

    def test_response_in_first_component(self):
        X = standardize(rand(55).standard_normal((10, 6)))
        svd = svd_thin(X)
        y = 2.5 * svd.U[:, 0]
        assert pcr_sigma2(svd, y, 1) == pytest.approx(0.0, abs=1e-16)

    def test_eigendecomposition_oracle(self):
        Xv = rand(56).standard_normal((20, 50))
        y = rand(57).standard_normal(20)
        svd = svd_thin(Xv)
        r = 5
        evals, evecs = np.linalg.eigh(Xv.T @ Xv)
        Q = evecs[:, np.argsort(evals)[::-1][:r]]
        Z = Xv @ Q
        alpha, *_ = np.linalg.lstsq(Z, y, rcond=None)
        oracle = float(np.sum((y - Z @ alpha) ** 2)) / (20 - r)
        assert pcr_sigma2(svd, y, r) == pytest.approx(oracle, abs=1e-8)

    def test_errors(self):
        X = standardize(rand(58).standard_normal((8, 30)))
        svd = svd_thin(X)
        y = np.zeros(8)
        with pytest.raises(RankError):
            pcr_sigma2(svd, y, svd.numeric_rank + 1)
        with pytest.raises(ValueError):
            pcr_sigma2(svd, y, 0)
        svd_full = svd_thin(rand(59).standard_normal((5, 40)))
        with pytest.raises(DegreesOfFreedomError):
            pcr_sigma2(svd_full, np.zeros(5), 5)


class TestGcvLambda:
    def test_grid_oracle(self):
        X = rand(60).standard_normal((20, 50))
        y = rand(61).standard_normal(20)
        svd = svd_thin(X)
        rep = gcv_lambda(svd, y)
        d1sq = svd.D[0] ** 2
        grid = np.linspace(np.log(1e-6 * d1sq), np.log(1e8 * d1sq), 100_000)

        def gcv(loglam):
            sol = ridge_solve(svd, y, float(np.exp(loglam)))
            rss = float(np.sum((y - sol.fitted) ** 2))
            return rss / (20 - sol.hat_trace) ** 2

        vals = np.array([gcv(g) for g in grid])
        best = grid[np.argmin(vals)]
        assert abs(np.log(rep.lam) - best) <= (grid[1] - grid[0]) + 1e-12

    def test_no_signal_upper_bound(self):
        Xv = rand(62).standard_normal((10, 3))
        svd = svd_thin(Xv)
        y = rand(63).standard_normal(10)
        y -= svd.U @ (svd.U.T @ y)  # orthogonal to the column space
        rep = gcv_lambda(svd, y)
        assert any(f.startswith("boundary_hi") for f in rep.flags)

    def test_rotation_invariance(self):
        Xv = rand(64).standard_normal((12, 30))
        y = rand(65).standard_normal(12)
        Q, _ = np.linalg.qr(rand(66).standard_normal((12, 12)))
        svd_a, svd_b = svd_thin(Xv), svd_thin(Q @ Xv)
        for lam in np.geomspace(0.01, 1e4, 9):
            sol_a = ridge_solve(svd_a, y, lam)
            sol_b = ridge_solve(svd_b, Q @ y, lam)
            gcv_a = np.sum((y - sol_a.fitted) ** 2) / (12 - sol_a.hat_trace) ** 2
            gcv_b = np.sum((Q @ y - sol_b.fitted) ** 2) / (12 - sol_b.hat_trace) ** 2
            assert gcv_a == pytest.approx(gcv_b, abs=1e-8)


class TestKfoldCv:
    def test_press_identity(self):
        Xv = rand(67).standard_normal((12, 30))
        X = DesignMatrix(values=Xv, standardized=False)
        y = rand(68).standard_normal(12)
        svd = svd_thin(Xv)
        lambdas = np.geomspace(1e-3, 1e5, 20)
        press = press_curve(svd, y, lambdas)
        explicit = np.zeros_like(press)
        for j, lam in enumerate(lambdas):
            total = 0.0
            for i in range(12):
                mask = np.arange(12) != i
                sol = ridge_solve(svd_thin(Xv[mask]), y[mask], float(lam))
                pred = Xv[i] @ sol.beta_hat
                total += (y[i] - pred) ** 2
            explicit[j] = total
        np.testing.assert_allclose(press, explicit, atol=1e-8, rtol=1e-8)

    def test_zero_noise_lower_bound(self):
        Xv = rand(69).standard_normal((15, 8))
        X = DesignMatrix(values=Xv, standardized=False)
        y = Xv @ rand(70).normal(0, 1.0, 8)
        rep = kfold_cv_lambda(X, y, k_folds=5, seed=0)
        assert any(f.startswith("boundary_lo") for f in rep.flags)
        assert rep.lam <= 1e-3

    def test_fold_sizes_balanced(self):
        from hdridge.linear import _make_folds

        folds = _make_folds(23, 5, seed=1)
        sizes = sorted(len(f) for f in folds)
        assert sizes[-1] - sizes[0] <= 1
        assert np.array_equal(np.sort(np.concatenate(folds)), np.arange(23))

    def test_seed_determinism(self):
        X = standardize(rand(71).standard_normal((20, 40)))
        y = rand(72).standard_normal(20)
        r1 = kfold_cv_lambda(X, y, k_folds=4, seed=9)
        r2 = kfold_cv_lambda(X, y, k_folds=4, seed=9)
        assert r1.lam == r2.lam

    def test_k_bounds(self):
        X = standardize(rand(73).standard_normal((10, 5)))
        y = np.zeros(10)
        with pytest.raises(DataError):
            kfold_cv_lambda(X, y, k_folds=1)
        with pytest.raises(DataError):
            kfold_cv_lambda(X, y, k_folds=11)

    def test_tiny_training_complement_rejected(self):
        X = DesignMatrix(values=rand(74).standard_normal((3, 4)), standardized=False)
        with pytest.raises(DataError):
            kfold_cv_lambda(X, np.zeros(3), k_folds=2)

    def test_press_rejects_bad_lambdas(self):
        svd = svd_thin(rand(75).standard_normal((6, 9)))
        with pytest.raises(ValueError):
            press_curve(svd, np.zeros(6), [1.0, -2.0])


class TestHilmm:
    def test_profile_equivalence_pointwise(self):
        X = rand(76).standard_normal((10, 20))
        y = rand(77).standard_normal(10)
        svd = svd_thin(X)
        p = 20
        from hdridge.linear import _GaussStats

        stats = _GaussStats(svd, y)
        ell = np.concatenate([svd.D**2 / p, np.zeros(10 - svd.q)])
        ytil2 = np.concatenate([(svd.U.T @ y) ** 2, [stats.resid2]]) if svd.q < 10 else (svd.U.T @ y) ** 2
        for h2 in (0.1, 0.4, 0.8):
            for s_star2 in (0.5, 2.0):
                tau2 = h2 * s_star2 / p
                sigma2 = (1.0 - h2) * s_star2
                mml_val = marginal_loglik(svd, y, sigma2, tau2)
                # density under the (h2, sigma*2) parametrization
                var = s_star2 * (h2 * (ell - 1.0) + 1.0)
                direct = -0.5 * (10 * np.log(2 * np.pi) + np.sum(np.log(var)) + np.sum(ytil2 / var))
                assert mml_val == pytest.approx(direct, abs=1e-8)

    def test_equals_mml_optimum(self):
        X = standardize(rand(78).standard_normal((30, 80)))
        svd = svd_thin(X)
        y = X.values @ rand(79).normal(0, 0.1, 80) + rand(80).normal(0, 1.0, 30)
        r_h, r_m = hilmm_h2(svd, y), mml_estimate(svd, y)
        assert r_h.h2 == pytest.approx(r_m.h2, rel=1e-4)
        assert r_h.lam == pytest.approx(r_m.lam, rel=1e-3)

    def test_pure_signal_boundary(self):
        X = standardize(rand(81).standard_normal((10, 25)))
        svd = svd_thin(X)
        y = 3.0 * svd.U[:, 0]
        rep = hilmm_h2(svd, y)
        assert rep.h2 > 0.99
        assert any("boundary_hi" in f for f in rep.flags)
