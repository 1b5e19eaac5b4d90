import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom, norm

from dpboot.accountant import (
    BOOT_FACTOR,
    BootComposition,
    BootCurve,
    CompositionTooLarge,
    asymptotic_total_mu,
    balle_delta,
    boot_curve,
    compose_boot_delta,
    composition_factor,
    gdp_delta,
    occupancy_probs,
    per_sample_mu,
    plan_budget,
    worst_case_pair_curve,
)
from dpboot.tradeoff import delta_profile, eval_gdp, is_symmetric

GRID = np.linspace(0.0, 1.0, 101)


class TestOccupancy:
    def test_n2(self):
        assert np.allclose(occupancy_probs(2).probs, [0.25, 0.5, 0.25])

    @pytest.mark.parametrize("n", [1, 7, 100, 5000])
    def test_normalized(self, n):
        assert occupancy_probs(n).probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_large_n(self):
        assert abs(occupancy_probs(10**6).p0 - 1 / math.e) <= 1e-6

    def test_matches_binomial(self):
        occ = occupancy_probs(30)
        assert np.allclose(occ.probs, binom.pmf(np.arange(31), 30, 1 / 30), rtol=1e-12)

    def test_zero(self):
        with pytest.raises(ValueError):
            occupancy_probs(0)

    def test_truncation_tail(self):
        occ = occupancy_probs(1000)
        i_max = occ.truncation_index()
        assert occ.probs[i_max + 1 :].sum() < 1e-15
        assert occ.probs[i_max:].sum() >= 1e-15


class TestBootCurve:
    @pytest.mark.parametrize("mu,n", [(0.5, 10), (1.0, 1000), (3.0, 2)])
    def test_endpoints(self, mu, n):
        c = boot_curve(mu, n)
        assert c(0.0) == 1.0
        assert c(1.0) == 0.0

    def test_matches_generic_construction(self):
        c = boot_curve(0.7, 50)
        assert np.max(np.abs(c(GRID) - c.generic()(GRID))) <= 1e-10

    def test_symmetric(self):
        c = boot_curve(1.0, 100)
        v = np.asarray(c(GRID))
        mask = v > 1e-6
        assert np.max(np.abs(c(v[mask]) - GRID[mask])) <= 1e-8
        assert is_symmetric(c.generic())

    def test_fixed_point(self):
        c = boot_curve(1.0, 100)
        x = c.fixed_point()
        assert abs(c(x) - x) <= 1e-10

    def test_small_mu_near_identity(self):
        assert np.max(np.abs(boot_curve(1e-6, 100)(GRID) - (1 - GRID))) < 1e-5

    def test_not_free(self):
        # the bootstrap costs privacy: the bound dips below G_1 somewhere
        c = boot_curve(1.0, 1000)
        assert np.min(c(GRID) - eval_gdp(1.0, GRID)) < -1e-3

    def test_invalid_mu(self):
        with pytest.raises(ValueError):
            boot_curve(0.0, 10)

    def test_subdiff_matches_finite_difference(self):
        c = boot_curve(1.0, 100)
        for a in (0.05, 0.2, 0.8):
            lo, hi = c.subdiff(a)
            fd = (c(a + 1e-6) - c(a - 1e-6)) / 2e-6
            assert lo == pytest.approx(fd, rel=1e-4)

    def test_profile_matches_generic(self):
        c = boot_curve(1.2, 40)
        eps = np.array([0.0, 0.3, 1.0, 2.5])
        assert np.allclose(delta_profile(c, eps), delta_profile(c.generic(), eps), atol=1e-10)


class TestFactors:
    def test_per_sample_mu_b1(self):
        assert per_sample_mu(1, 1) == pytest.approx(1 / math.sqrt(2 - 2 / math.e))
        assert per_sample_mu(1, 1) == pytest.approx(0.88937, abs=1e-5)

    def test_per_sample_mu_inverts(self):
        assert per_sample_mu(math.sqrt(2 - 2 / math.e), 1) == pytest.approx(1.0)

    def test_per_sample_mu_b1000(self):
        assert per_sample_mu(1, 1000) == pytest.approx(0.028124, abs=1e-6)

    def test_limit(self):
        assert round(composition_factor(None), 5) == 1.12438

    def test_n1(self):
        assert composition_factor(1) == pytest.approx(1.0)

    def test_monotone(self):
        f = [composition_factor(n) for n in range(1, 10_001)]
        assert np.all(np.diff(f) >= 0)

    def test_total_mu(self):
        assert asymptotic_total_mu(0.1, 100, None) == pytest.approx(BOOT_FACTOR)

    def test_plan(self):
        plan = plan_budget(1.0, 200, 3000)
        assert plan.mu_per_sample == pytest.approx(1.0 / (plan.factor * math.sqrt(200)))
        assert 1.0 < plan.factor <= BOOT_FACTOR


class TestComposition:
    @pytest.mark.parametrize("mu,n", [(0.5, 100), (1.0, 20), (2.0, 1000)])
    def test_base_case(self, mu, n):
        eps = np.array([0.0, 0.25, 0.5, 1.0, 2.0, 4.0])
        got = compose_boot_delta(mu, n, 1, eps)
        want = delta_profile(boot_curve(mu, n), eps)
        assert np.max(np.abs(got - want)) <= 1e-4

    def test_large_eps(self):
        assert compose_boot_delta(0.3, 50, 10, 40.0) < 1e-12

    def test_clt_point(self):
        mu_b = per_sample_mu(1, 500)
        d = compose_boot_delta(mu_b, 100, 500, 1.0)
        oracle = norm.cdf(-0.5) - math.e * norm.cdf(-1.5)
        assert oracle == pytest.approx(0.12694, abs=1e-5)
        assert abs(d - oracle) <= 0.01

    def test_monotone_in_eps(self):
        d = compose_boot_delta(0.2, 100, 30, np.linspace(0, 5, 60))
        assert np.all(np.diff(d) <= 1e-12)
        assert np.all((d >= 0) & (d <= 1))

    def test_monotone_in_b(self):
        d = [compose_boot_delta(0.1, 100, B, 0.5) for B in (1, 5, 20, 80)]
        assert np.all(np.diff(d) >= -1e-9)

    def test_cap(self):
        with pytest.raises(CompositionTooLarge, match="asymptotic"):
            BootComposition(0.01, 100, 6000)

    def test_self_check_small(self):
        comp = BootComposition(0.1, 100, 50)
        assert comp.grid_discrepancy < 1e-6

    def test_negative_eps(self):
        with pytest.raises(ValueError):
            compose_boot_delta(0.1, 10, 2, -1.0)


class TestIdentities:
    @pytest.mark.parametrize("mu", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("n", [10, 100])
    def test_balle(self, mu, n):
        c = boot_curve(mu, n)
        for eps in (0.1, 0.5, 1.0, 2.0):
            eps_p, d = balle_delta(mu, n, eps)
            assert delta_profile(c, eps_p) == pytest.approx(d, abs=1e-6)

    def test_gdp_delta_zero_mu(self):
        assert gdp_delta(0.0, 1.0) == 0.0

    @pytest.mark.parametrize("a", [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
    def test_worst_case_dominates(self, a):
        c = boot_curve(1.0, 1000)
        alpha, beta = worst_case_pair_curve(a, 1000, 1.0)
        assert np.max(c(alpha) - beta) <= 1e-6

    def test_worst_case_below_gdp(self):
        alpha, beta = worst_case_pair_curve(0.0, 1000, 1.0)
        assert np.min(beta - eval_gdp(1.0, alpha)) < 0


@settings(max_examples=200, deadline=None)
@given(mu=st.floats(0.05, 3.0), n=st.integers(1, 2000))
def test_boot_curve_valid(mu, n):
    c = BootCurve(mu, n)
    v = np.asarray(c(GRID))
    assert np.all(np.diff(v) <= 1e-12)
    mid = np.asarray(c((GRID[1:] + GRID[:-1]) / 2))
    assert np.all(mid <= (v[1:] + v[:-1]) / 2 + 1e-10)
    assert np.all(v <= 1 - GRID + 1e-12)
