"""Training/data power splits and achievable-rate simulation.

The oracles here are computed independently of the implementation: a
quadrature integral for the single-element rate, numeric maximization
for the optimal split, and common-random-number neighborhood checks for
the claim that the closed-form split actually maximizes the rate.
"""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from risestim.spectral_efficiency import (
    PowerSplit,
    RateConfig,
    _effective_snr,
    _optimal_beta,
    optimal_ris_size,
    optimal_split_canonical,
    optimal_split_orthogonal,
    rate_canonical,
    rate_orthogonal,
)


class TestPowerSplit:
    def test_equal_power_means_equal_per_symbol_power(self):
        split = PowerSplit.equal_power(4, 20, rho=3.0)
        assert split.rho_tau == pytest.approx(3.0)
        assert split.rho_d == pytest.approx(3.0)
        assert split.beta == pytest.approx(16 / 20)

    def test_from_beta_conserves_total_energy(self):
        n, t, rho = 6, 40, 2.0
        split = PowerSplit.from_beta(0.37, n, t, rho)
        total = split.rho_tau * n + split.rho_d * (t - n)
        assert total == pytest.approx(rho * t)

    @pytest.mark.parametrize("beta", [0.0, 1.0, -0.2, 1.4])
    def test_degenerate_beta_rejected(self, beta):
        with pytest.raises(ValueError):
            PowerSplit.from_beta(beta, 4, 20, 1.0)

    def test_block_shorter_than_training_rejected(self):
        with pytest.raises(ValueError):
            PowerSplit.equal_power(20, 20, 1.0)


class TestSingleElementRateOracle:
    def test_monte_carlo_matches_quadrature(self):
        # N=1, canonical training, equal power.  The estimate is
        # h_hat = sqrt(rho) y / (1 + rho) with y ~ CN(0, 1 + rho), so
        # |h_hat|^2 is exponential with mean rho/(1+rho) and the rate
        # integral can be done by quadrature, fully outside the package.
        rho = 2.0
        n, t = 1, 2
        var_hat = rho / (1.0 + rho)
        denom = 1.0 + n * rho / (1.0 + rho)
        a = rho / denom

        def integrand(x):
            return np.log2(1.0 + a * x) * np.exp(-x / var_hat) / var_hat

        oracle, quad_err = quad(integrand, 0.0, np.inf)
        oracle *= 1.0 - n / t
        assert quad_err < 1e-8

        split = PowerSplit.equal_power(n, t, rho)
        est = rate_canonical(RateConfig(n=n, t=t, rho=rho, trials=200000),
                             split, np.random.default_rng(123))
        assert abs(est.value - oracle) < 4 * est.std_error
        assert est.std_error < 0.01


class TestOptimalSplit:
    @pytest.mark.parametrize("family", ["canonical", "orthogonal"])
    @pytest.mark.parametrize("n,t,rho", [
        (4, 40, 0.5), (8, 100, 5.0), (32, 150, 10.0), (16, 64, 100.0),
    ])
    def test_closed_form_maximizes_surrogate(self, family, n, t, rho):
        res = minimize_scalar(
            lambda b: -_effective_snr(b, n, t, rho, family),
            bounds=(1e-9, 1 - 1e-9), method="bounded",
            options={"xatol": 1e-12})
        assert _optimal_beta(n, t, rho, family) == pytest.approx(
            res.x, abs=1e-6)

    @pytest.mark.parametrize("family,n,t", [
        ("canonical", 5, 30),    # t = n^2 + n
        ("orthogonal", 8, 16),   # t = 2 n
    ])
    def test_singular_geometry_falls_back_to_half(self, family, n, t):
        assert abs(_optimal_beta(n, t, 2.0, family) - 0.5) < 0.01

    def test_continuity_across_singular_point(self):
        near = [_optimal_beta(5, t, 2.0, "canonical") for t in (29, 30, 31)]
        assert max(near) - min(near) < 0.02

    def test_closed_form_maximizes_simulated_rate(self):
        # Common random numbers across the three split evaluations make
        # the comparison nearly noise-free.
        n, t, rho = 8, 60, 4.0
        cfg = RateConfig(n=n, t=t, rho=rho, trials=40000)
        beta_star = _optimal_beta(n, t, rho, "canonical")

        def rate_at(beta):
            split = PowerSplit.from_beta(beta, n, t, rho)
            return rate_canonical(cfg, split, np.random.default_rng(7)).value

        center = rate_at(beta_star)
        assert center >= rate_at(min(beta_star + 0.05, 0.999)) - 5e-3
        assert center >= rate_at(max(beta_star - 0.05, 0.001)) - 5e-3

    def test_split_constructors_return_consistent_beta(self):
        split = optimal_split_canonical(8, 100, 5.0)
        rebuilt = PowerSplit.from_beta(split.beta, 8, 100, 5.0)
        assert split.rho_tau == pytest.approx(rebuilt.rho_tau)
        assert split.rho_d == pytest.approx(rebuilt.rho_d)
        split_o = optimal_split_orthogonal(8, 100, 5.0)
        assert 0.0 < split_o.beta < 1.0


class TestRateSimulation:
    def test_orthogonal_beats_canonical_at_equal_power(self):
        n, t, rho = 16, 100, 10.0
        split = PowerSplit.equal_power(n, t, rho)
        cfg = RateConfig(n=n, t=t, rho=rho, trials=20000)
        can = rate_canonical(cfg, split, np.random.default_rng(0))
        orth = rate_orthogonal(cfg, split, np.random.default_rng(1))
        assert orth.value > can.value + 3 * (can.std_error + orth.std_error)

    @pytest.mark.parametrize("family,rate_fn,split_fn", [
        ("canonical", rate_canonical, optimal_split_canonical),
        ("orthogonal", rate_orthogonal, optimal_split_orthogonal),
    ])
    def test_optimal_split_not_worse_than_equal(self, family, rate_fn, split_fn):
        n, t, rho = 32, 150, 10.0
        cfg = RateConfig(n=n, t=t, rho=rho, trials=20000)
        eq = rate_fn(cfg, PowerSplit.equal_power(n, t, rho),
                     np.random.default_rng(2))
        opt = rate_fn(cfg, split_fn(n, t, rho), np.random.default_rng(3))
        assert opt.value >= eq.value - 3 * (eq.std_error + opt.std_error)

    def test_rate_reproducible(self):
        cfg = RateConfig(n=4, t=20, rho=1.0, trials=500)
        split = PowerSplit.equal_power(4, 20, 1.0)
        a = rate_canonical(cfg, split, np.random.default_rng(5)).value
        b = rate_canonical(cfg, split, np.random.default_rng(5)).value
        assert a == b


class TestOptimalSize:
    def test_long_block_low_snr_saturates_at_max(self):
        # With T >> N the training tax is negligible and the rate is
        # increasing in N over this range, for both training families.
        for family in ("canonical", "orthogonal"):
            best = optimal_ris_size(8, 1000, 0.1, family, trials=300, seed=0)
            assert best == 8

    def test_deterministic_in_seed(self):
        a = optimal_ris_size(6, 100, 1.0, "canonical", trials=200, seed=3)
        b = optimal_ris_size(6, 100, 1.0, "canonical", trials=200, seed=3)
        assert a == b

    def test_size_must_fit_in_block(self):
        with pytest.raises(ValueError):
            optimal_ris_size(100, 100, 1.0, "canonical", trials=10)
