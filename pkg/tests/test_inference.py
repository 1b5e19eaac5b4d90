import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr

from dpboot.mechanisms import Dataset, DpBootstrapOutput, dp_bootstrap
from dpboot.inference import (
    CiResult,
    DeconvConfig,
    DeconvProblem,
    RecoveredDensity,
    choose_B,
    deconvolve_mle,
    estimate_with_se,
    is_feasible,
    moment_estimates,
    percentile_ci,
    standard_ci,
    t_ci_adjusted,
)


def noisy_normal(B, sigma, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal(B)
    return X, X + sigma * rng.standard_normal(B)


def output(estimates, sigma2, n, mu=1.0):
    est = np.asarray(estimates, dtype=float)
    return DpBootstrapOutput(est, sigma2, {"n": n, "B": len(est), "mu": mu})


class TestDeconvolution:
    def test_noise_free_density(self):
        Y = np.random.default_rng(0).standard_normal(10_000)
        d = deconvolve_mle(Y, 0.0)
        assert abs(d.mean) <= 0.05
        assert abs(d.var - 1) <= 0.1

    def test_unit_noise(self):
        # large B: the norm penalty's shrinkage bias fades as counts grow
        _, Y = noisy_normal(5000, 1.0, 1)
        d = deconvolve_mle(Y, 1.0)
        assert abs(d.var - 1) <= 0.3

    def test_normalized(self):
        _, Y = noisy_normal(200, 0.5, 2)
        d = deconvolve_mle(Y, 0.25)
        assert np.all(d.mass >= 0)
        assert d.mass.sum() == pytest.approx(1.0, abs=1e-10)
        assert d.converged

    def test_too_few(self):
        with pytest.raises(ValueError):
            deconvolve_mle(np.arange(5.0), 1.0)

    def test_degenerate(self):
        with pytest.warns(RuntimeWarning):
            d = deconvolve_mle(np.full(50, 0.3), 0.0)
        assert percentile_ci(d, 0.9).lower == percentile_ci(d, 0.9).upper == 0.3

    def test_config_validation(self):
        with pytest.raises(ValueError):
            DeconvConfig(m=5)
        with pytest.raises(ValueError):
            DeconvConfig(p=2)
        with pytest.raises(ValueError):
            DeconvConfig(c0=0)

    def test_gradient_finite_difference(self):
        _, Y = noisy_normal(300, 0.7, 3)
        prob = DeconvProblem(Y, 0.49)
        rng = np.random.default_rng(4)
        h = 1e-5
        for _ in range(20):
            a = rng.normal(0, 1, prob.cfg.p)
            fd = np.array(
                [
                    (prob.objective(a + h * e) - prob.objective(a - h * e)) / (2 * h)
                    for e in np.eye(len(a))
                ]
            )
            g = prob.gradient(a)
            assert np.linalg.norm(fd - g) <= 1e-5 * np.linalg.norm(g)

    def test_hessian_finite_difference(self):
        _, Y = noisy_normal(300, 0.7, 5)
        prob = DeconvProblem(Y, 0.49)
        a = np.random.default_rng(6).normal(0, 1, prob.cfg.p)
        h = 1e-6
        fd = np.column_stack(
            [(prob.gradient(a + h * e) - prob.gradient(a - h * e)) / (2 * h) for e in np.eye(len(a))]
        )
        assert np.allclose(fd, prob.hessian(a), rtol=1e-4, atol=1e-4 * np.abs(fd).max())

    def test_flat_optimum_at_kink(self):
        rng = np.random.default_rng(0)
        Y = rng.standard_normal(10) + 1.5 * rng.standard_normal(10)
        prob = DeconvProblem(Y, 1.5**2)
        assert prob.zero_is_optimal()
        a, iters, ok = prob.solve()
        assert ok and iters == 0 and not np.any(a)
        # no small move away from zero improves the objective
        base = prob.objective(np.zeros(prob.cfg.p))
        for d in rng.standard_normal((50, prob.cfg.p)):
            assert prob.objective(1e-4 * d / np.linalg.norm(d)) <= base

    def test_recovers_from_kink(self):
        # small sample where plain Newton from a = 1 slides into a = 0
        r = np.random.default_rng(2338)
        B = int(np.random.default_rng(2338 + 10**6).integers(10, 300))
        Y = r.standard_normal(B)
        prob = DeconvProblem(Y, 0.0)
        assert not prob.zero_is_optimal()
        a, iters, ok = prob.solve()
        assert ok and np.linalg.norm(a) > 0.1
        assert np.max(np.abs(prob.gradient(a))) <= prob.cfg.tol
        assert prob.objective(a) > prob.objective(np.zeros(prob.cfg.p))

    def test_refold_consistency(self):
        rng = np.random.default_rng(7)
        X = rng.gamma(3.0, 1.0, 1000)
        sigma = 0.8
        Y = X + sigma * rng.standard_normal(1000)
        d = deconvolve_mle(Y, sigma**2)
        prob = DeconvProblem(Y, sigma**2)
        fitted = prob.P @ d.mass * len(Y)
        # oracle: the true gamma law discretized onto the same grid
        from scipy.stats import gamma

        edges = np.concatenate([[-np.inf], (d.support[1:] + d.support[:-1]) / 2, [np.inf]])
        oracle_mass = np.diff(gamma.cdf(edges, 3.0))
        oracle = prob.P @ oracle_mass * len(Y)
        obs = prob.counts
        keep = (fitted > 1e-9) & (oracle > 1e-9)
        pearson_fit = np.sum((obs[keep] - fitted[keep]) ** 2 / fitted[keep])
        pearson_oracle = np.sum((obs[keep] - oracle[keep]) ** 2 / oracle[keep])
        assert pearson_fit <= 3 * pearson_oracle

    def test_moment_consistency(self):
        sigma = 0.5
        _, Y = noisy_normal(2000, sigma, 8)
        d = deconvolve_mle(Y, sigma**2)
        m1, m2 = moment_estimates(Y, sigma**2)
        spacing = d.support[1] - d.support[0]
        se_mean = Y.std() / math.sqrt(len(Y))
        assert abs(d.mean - m1) <= 5 * spacing + 3 * se_mean
        se_var = math.sqrt(2 / len(Y)) * Y.var()
        assert abs(d.var - (m2 - m1**2)) <= 5 * spacing + 3 * se_var


class TestPercentile:
    def test_uniform(self):
        x = np.linspace(0, 1, 101)
        d = RecoveredDensity(x, np.full(101, 1 / 101))
        ci = percentile_ci(d, 0.9)
        assert abs(ci.lower - 0.05) <= 0.01 and abs(ci.upper - 0.95) <= 0.01

    def test_point_mass(self):
        ci = percentile_ci(RecoveredDensity(np.array([2.5]), np.array([1.0])), 0.9)
        assert (ci.lower, ci.upper) == (2.5, 2.5)

    def test_width_monotone_in_level(self):
        _, Y = noisy_normal(500, 0.3, 9)
        d = deconvolve_mle(Y, 0.09)
        widths = [percentile_ci(d, lv).width for lv in (0.99, 0.95, 0.9, 0.8, 0.5, 0.1)]
        assert np.all(np.diff(widths) <= 1e-12)

    def test_cdf_quantile_agree(self):
        _, Y = noisy_normal(500, 0.3, 10)
        d = deconvolve_mle(Y, 0.09)
        q = d.quantile([0.1, 0.5, 0.9])
        assert np.allclose(d.cdf(q), [0.1, 0.5, 0.9], atol=1e-12)

    def test_end_to_end_demo_setting(self):
        data = Dataset.from_arrays(np.random.default_rng(12).random(10_000))
        out = dp_bootstrap(data, "mean", math.sqrt(2 - 2 / math.e), 1000, seed=12)
        ci = percentile_ci(deconvolve_mle(out.estimates, out.sigma2), 0.9)
        assert ci.covers(0.5)

    def test_invalid_level(self):
        d = RecoveredDensity(np.array([0.0, 1.0]), np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            percentile_ci(d, 1.0)

    def test_density_validation(self):
        with pytest.raises(ValueError):
            RecoveredDensity(np.array([0.0, 1.0]), np.array([0.5, 0.6]))
        with pytest.raises(ValueError):
            RecoveredDensity(np.array([1.0, 0.0]), np.array([0.5, 0.5]))

    def test_density_csv(self, tmp_path):
        d = RecoveredDensity(np.array([0.0, 1.0]), np.array([0.25, 0.75]))
        d.to_csv(tmp_path / "d.csv")
        assert (tmp_path / "d.csv").read_text().splitlines() == ["x,mass", "0,0.25", "1,0.75"]


class TestMoments:
    def test_noise_free(self):
        assert moment_estimates([1, 2, 3], 0) == pytest.approx((2, 14 / 3))

    def test_noisy(self):
        assert moment_estimates([1, 2, 3], 1) == pytest.approx((2, 11 / 3))

    def test_constant(self):
        assert moment_estimates([1.5] * 4, 0) == pytest.approx((1.5, 2.25))


class TestStandardError:
    def test_equal_estimates(self):
        est = estimate_with_se(output([0.4] * 10, 0.0, 100))
        assert est.se == 0.0 and est.point == pytest.approx(0.4)

    def test_clamp(self):
        est = estimate_with_se(output([0.0, 0.001, -0.001, 0.0], 1.0, 100))
        assert est.se == 0.0 and est.clamped

    def test_formula(self):
        y = np.array([0.1, 0.4, 0.35, 0.2])
        n, B, s2 = 50, 4, 0.001
        r = n / (n - 1)
        expected = math.sqrt((r + 1 / B) * y.var(ddof=1) - r * s2)
        assert estimate_with_se(output(y, s2, n)).se == pytest.approx(expected)

    @pytest.mark.slow
    def test_monte_carlo_variance(self):
        n, B, mu, reps = 3000, 200, 1.0, 500
        target = (1 + 1 / B - 1 / (n * B)) / 12 / n + (2 - 2 / math.e) / (mu**2 * n**2)
        rng = np.random.default_rng(13)
        se2 = []
        for r in range(reps):
            data = Dataset.from_arrays(rng.random(n))
            se2.append(estimate_with_se(dp_bootstrap(data, "mean", mu, B, seed=r)).se ** 2)
        assert abs(np.mean(se2) / target - 1) <= 0.15

    def test_standard_ci_symmetric(self):
        ci = standard_ci(output([0.1, 0.2, 0.3, 0.25], 0.0, 100), 0.9)
        assert ci.method == "standard"
        assert (ci.lower + ci.upper) / 2 == pytest.approx(0.2125)


class TestTInterval:
    def test_df_noise_free(self):
        rng = np.random.default_rng(14)
        n, B = 1000, 100
        ci = t_ci_adjusted(output(rng.normal(0.5, 0.01, B), 0.0, n, mu=math.inf), 0.9)
        assert ci.method == "t_adjusted"
        assert ci.flags["df"] == pytest.approx((n / (n - 1)) ** 2 * (B - 1))

    def test_feasibility(self):
        assert 3000 * 1 * (1 / 12) == pytest.approx(250)
        assert is_feasible(3000, 1.0, 1 / 12)
        assert not is_feasible(3000, 0.5, 1 / 12)
        assert 144 * (1 - 1 / math.e) == pytest.approx(91.025, abs=1e-3)

    def test_fallback(self):
        rng = np.random.default_rng(15)
        ci = t_ci_adjusted(output(rng.normal(0, 0.01, 50), 1.0, 100), 0.9)
        assert ci.flags["fallback"] == "percentile"
        assert ci.flags["feasible"] is False
        assert ci.method == "percentile"

    def test_too_few(self):
        with pytest.raises(ValueError):
            t_ci_adjusted(output([0.1, 0.2], 0.0, 10), 0.9)


class TestChooseB:
    def test_snr_rule(self):
        assert choose_B(3000, 1.0, 1 / 12, 0.1) == 197

    def test_tiny_budget(self):
        assert choose_B(3000, 0.01, 1 / 12, 0.1) == 20

    def test_no_spread(self):
        assert choose_B(3000, 1.0, 0.0, 0.05) == 40


def test_ci_result_order():
    with pytest.raises(ValueError):
        CiResult(1.0, 0.0, 0.9, "standard")


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), sigma=st.floats(0.0, 2.0), B=st.integers(10, 300))
def test_recovered_density_normalized(seed, sigma, B):
    rng = np.random.default_rng(seed)
    Y = rng.standard_normal(B) + sigma * rng.standard_normal(B)
    d = deconvolve_mle(Y, sigma**2, DeconvConfig(max_iter=50))
    assert np.all(d.mass >= 0)
    assert abs(d.mass.sum() - 1) <= 1e-10
