import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rentbuy import (
    DegenerateDynamicsError,
    DivergentResaleError,
    DemandRegimeSpec,
    MarketPrimitives,
    RatioDynamics,
    characteristic_residual,
    characteristic_roots,
    expected_relocation_discount,
    reduce_to_ratio,
    resale_multiplier,
)


class TestReduceToRatio:
    def test_correlated_case(self):
        m = MarketPrimitives(mu_p=0.03, sigma_p=0.10, mu_r=0.02, sigma_r=0.05, rho=0.3)
        d = reduce_to_ratio(m)
        # mu_p - mu_r + sigma_r^2 - rho*sigma_p*sigma_r; sqrt of quadratic form.
        # Distributional correctness is pinned down by the joint-path moment
        # oracle in test_mc.py.
        assert d.mu_x == pytest.approx(0.0110, abs=1e-12)
        assert d.sigma_x == pytest.approx(0.097468, abs=1e-6)

    def test_constant_rent(self):
        m = MarketPrimitives(mu_p=0.03, sigma_p=0.10, mu_r=0.0, sigma_r=0.0, rho=0.0)
        d = reduce_to_ratio(m)
        assert (d.mu_x, d.sigma_x) == (0.03, 0.10)

    def test_perfectly_hedged(self):
        m = MarketPrimitives(mu_p=0.04, sigma_p=0.2, mu_r=0.01, sigma_r=0.2, rho=1.0)
        d = reduce_to_ratio(m)
        assert d.mu_x == pytest.approx(0.03, abs=1e-15)
        assert d.sigma_x == pytest.approx(0.0, abs=1e-12)

    def test_rejects_demand_loadings(self):
        with pytest.raises(ValueError):
            reduce_to_ratio(MarketPrimitives(0.03, 0.1, 0.02, 0.05, 0.3, alpha=0.01))
        with pytest.raises(ValueError):
            reduce_to_ratio(MarketPrimitives(0.03, 0.1, 0.02, 0.05, 0.3, beta=0.01))
        with pytest.raises(ValueError):
            reduce_to_ratio(
                MarketPrimitives(0.03, 0.1, 0.02, 0.05, 0.3, regime=DemandRegimeSpec())
            )

    def test_invariants_rejected(self):
        with pytest.raises(ValueError):
            MarketPrimitives(0.03, -0.1, 0.02, 0.05, 0.3)
        with pytest.raises(ValueError):
            MarketPrimitives(0.03, 0.1, 0.02, 0.05, 1.5)


class TestCharacteristicRoots:
    def test_golden_ratio_case(self):
        roots = characteristic_roots(RatioDynamics(0.0, math.sqrt(2.0)), 1.0)
        assert roots.gamma_neg == pytest.approx((1 - math.sqrt(5)) / 2, abs=1e-12)
        assert roots.gamma_pos == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-12)

    @pytest.mark.parametrize(
        "mu,sigma,r,expected_neg",
        [
            (0.01, 0.15, 0.05, -2.0533614),
            (0.005, 0.25, 0.05, -0.9128166),
        ],
    )
    def test_calibration_roots(self, mu, sigma, r, expected_neg):
        d = RatioDynamics(mu, sigma)
        roots = characteristic_roots(d, r)
        assert roots.gamma_neg == pytest.approx(expected_neg, abs=1e-6)
        assert abs(characteristic_residual(d, r, roots.gamma_neg)) < 1e-12
        assert abs(characteristic_residual(d, r, roots.gamma_pos)) < 1e-12

    def test_degenerate_dynamics(self):
        with pytest.raises(DegenerateDynamicsError):
            characteristic_roots(RatioDynamics(0.01, 0.0), 0.05)

    def test_requires_positive_discount(self):
        with pytest.raises(ValueError):
            characteristic_roots(RatioDynamics(0.01, 0.15), 0.0)

    @given(
        mu=st.floats(-0.2, 0.2),
        sigma=st.floats(0.01, 1.0),
        r=st.floats(1e-4, 0.5),
    )
    @settings(max_examples=200)
    def test_root_identities(self, mu, sigma, r):
        d = RatioDynamics(mu, sigma)
        roots = characteristic_roots(d, r)
        assert roots.gamma_neg < 0 < roots.gamma_pos
        s = roots.gamma_neg + roots.gamma_pos
        p = roots.gamma_neg * roots.gamma_pos
        s_expected = 1.0 - 2.0 * mu / sigma**2
        p_expected = -2.0 * r / sigma**2
        assert s == pytest.approx(s_expected, rel=1e-10, abs=1e-10)
        assert p == pytest.approx(p_expected, rel=1e-10)
        assert abs(characteristic_residual(d, r, roots.gamma_neg)) < 1e-10 * max(1.0, r)
        assert abs(characteristic_residual(d, r, roots.gamma_pos)) < 1e-10 * max(1.0, r)

    def test_gamma_neg_increasing_in_sigma(self):
        prev = None
        for sigma in np.linspace(0.05, 0.6, 30):
            g = characteristic_roots(RatioDynamics(0.01, sigma), 0.05).gamma_neg
            if prev is not None:
                assert g > prev
            prev = g

    def test_stable_for_tiny_sigma(self):
        # drift dominates the discriminant; naive formula would cancel
        d = RatioDynamics(0.05, 1e-5)
        roots = characteristic_roots(d, 0.03)
        # residuals relative to the size of the terms involved
        big = abs(d.mu_x * roots.gamma_neg)
        assert abs(characteristic_residual(d, 0.03, roots.gamma_neg)) < 1e-10 * max(1.0, big)
        assert abs(characteristic_residual(d, 0.03, roots.gamma_pos)) < 1e-10


class TestRelocationDiscount:
    def test_paper_factor(self):
        assert expected_relocation_discount(0.1, 0.05) == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_no_relocation(self):
        assert expected_relocation_discount(0.0, 0.05) == 0.0

    def test_against_exponential_draws(self):
        lam, r = 0.2, 0.05
        rng = np.random.default_rng(123)
        t = rng.exponential(1.0 / lam, 1_000_000)
        disc = np.exp(-r * t)
        se = disc.std(ddof=1) / math.sqrt(len(disc))
        assert abs(disc.mean() - expected_relocation_discount(lam, r)) < 3 * se
        assert expected_relocation_discount(lam, r) == pytest.approx(0.8, abs=1e-12)

    def test_monotone_in_hazard_and_rate(self):
        lams = np.linspace(0.0, 1.0, 21)
        vals = [expected_relocation_discount(l, 0.05) for l in lams]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        rs = np.linspace(0.01, 0.5, 21)
        vals = [expected_relocation_discount(0.1, r) for r in rs]
        assert all(b < a for a, b in zip(vals, vals[1:]))


class TestResaleMultiplier:
    def test_paper_approx_ignores_drift(self):
        for mu in (-0.05, 0.0, 0.04):
            d = RatioDynamics(mu, 0.15)
            assert resale_multiplier(d, 0.1, 0.05, "paper_approx") == pytest.approx(
                0.666667, abs=1e-6
            )

    def test_exact_value(self):
        d = RatioDynamics(0.01, 0.15)
        assert resale_multiplier(d, 0.1, 0.05, "exact") == pytest.approx(
            0.1 / 0.14, abs=1e-12
        )

    def test_exact_against_simulation(self):
        # independent oracle: exact sampling of exp(-r*T) * X_T / x0
        d = RatioDynamics(0.01, 0.15)
        lam, r = 0.1, 0.05
        rng = np.random.default_rng(7)
        t = rng.exponential(1.0 / lam, 1_000_000)
        z = rng.standard_normal(1_000_000)
        ratio = np.exp(-r * t) * np.exp((d.mu_x - 0.5 * d.sigma_x**2) * t + d.sigma_x * np.sqrt(t) * z)
        se = ratio.std(ddof=1) / math.sqrt(len(ratio))
        assert abs(ratio.mean() - resale_multiplier(d, lam, r, "exact")) < 3 * se

    def test_zero_drift_matches_approx(self):
        d = RatioDynamics(0.0, 0.2)
        assert resale_multiplier(d, 0.1, 0.05, "exact") == resale_multiplier(
            d, 0.1, 0.05, "paper_approx"
        )

    def test_divergent(self):
        with pytest.raises(DivergentResaleError):
            resale_multiplier(RatioDynamics(0.2, 0.15), 0.1, 0.05, "exact")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            resale_multiplier(RatioDynamics(0.01, 0.15), 0.1, 0.05, "bogus")
