"""Pilot-domain estimators: general LS/LMMSE and orthogonal closed forms."""

import numpy as np
import pytest

from risestim.channels import complex_normal, gen_narrowband_set
from risestim.exceptions import RankDeficientError, UnsupportedFamilyError
from risestim.linear_estimators import (
    lmmse_estimate,
    ls_closed_form,
    ls_estimate,
    mmse_closed_form,
)
from risestim.model import SystemConfig, build_cascaded
from risestim.training import make_training_plan, stack_training


def _training_setup(family, m_t, m_r, n, rho, direct_path=False):
    plan = make_training_plan(family, n, m_t=m_t, direct_path=direct_path)
    cfg = SystemConfig(m_t=m_t, m_r=m_r, n=n, rho=rho, direct_path=direct_path)
    z = stack_training(plan, cfg)
    return plan, cfg, z


class TestLeastSquares:
    def test_noiseless_recovery_with_direct_path(self):
        rng = np.random.default_rng(0)
        plan, cfg, z = _training_setup("dft", 2, 2, 4, rho=3.0, direct_path=True)
        channels = gen_narrowband_set(cfg, rng)
        h = build_cascaded(channels).h_c
        y = np.sqrt(cfg.rho) * z @ h
        np.testing.assert_allclose(ls_estimate(z, y, cfg.rho), h, atol=1e-10)

    def test_two_dimensional_batches(self):
        rng = np.random.default_rng(1)
        plan, cfg, z = _training_setup("canonical", 1, 2, 3, rho=1.0)
        h = complex_normal(rng, (z.shape[1], 7))
        y = z @ h
        out = ls_estimate(z, y, 1.0)
        assert out.shape == (z.shape[1], 7)
        np.testing.assert_allclose(out, h, atol=1e-10)

    def test_rank_deficient_training_raises(self):
        z = np.ones((6, 3), dtype=complex)  # rank one
        with pytest.raises(RankDeficientError) as exc:
            ls_estimate(z, np.ones(6, dtype=complex), 1.0)
        assert exc.value.rank == 1


class TestClosedForms:
    @pytest.mark.parametrize("family,n", [
        ("canonical", 5), ("dft", 5), ("hadamard", 4),
    ])
    def test_closed_form_matches_general_ls(self, family, n):
        rng = np.random.default_rng(2)
        plan, cfg, z = _training_setup(family, 2, 2, n, rho=2.0)
        y = complex_normal(rng, z.shape[0])
        np.testing.assert_allclose(
            ls_closed_form(plan, z, y, cfg.rho),
            ls_estimate(z, y, cfg.rho),
            atol=1e-10,
        )

    def test_unsupported_family_for_closed_form(self):
        plan = make_training_plan("quantized-dft", 4, m_t=1, phase_count=8)
        cfg = SystemConfig(m_t=1, m_r=1, n=4, rho=1.0, direct_path=False)
        z = stack_training(plan, cfg)
        with pytest.raises(UnsupportedFamilyError):
            ls_closed_form(plan, z, np.zeros(z.shape[0]), 1.0)

    def test_mmse_is_scaled_ls(self):
        rng = np.random.default_rng(3)
        plan, cfg, z = _training_setup("dft", 1, 1, 4, rho=0.5)
        y = complex_normal(rng, z.shape[0])
        ls = ls_closed_form(plan, z, y, cfg.rho)
        mmse = mmse_closed_form(plan, z, y, cfg.rho)
        shrink = 1.0 / (1.0 + 1.0 / (cfg.rho * 1 * 4))
        np.testing.assert_allclose(mmse, shrink * ls, atol=1e-12)


class TestErrorStatistics:
    # Orthogonal designs have exactly diagonal error covariance; the
    # per-entry variances below are the two closed-form levels.

    def _empirical_mse(self, family, m_t, m_r, n, rho, estimator, trials=40000):
        plan, cfg, z = _training_setup(family, m_t, m_r, n, rho)
        rng = np.random.default_rng(99)
        dim = z.shape[1]
        h = complex_normal(rng, (dim, trials))
        w = complex_normal(rng, (z.shape[0], trials))
        y = np.sqrt(rho) * z @ h + w
        h_hat = estimator(plan, z, y, rho)
        return float(np.mean(np.abs(h_hat - h) ** 2))

    def test_canonical_ls_variance(self):
        rho, m_t = 1.0, 2
        mse = self._empirical_mse("canonical", m_t, 1, 4, rho, ls_closed_form)
        assert abs(mse - 1.0 / (rho * m_t)) < 0.05 / (rho * m_t)

    def test_orthogonal_ls_variance_gains_factor_n(self):
        rho, m_t, n = 1.0, 2, 8
        mse = self._empirical_mse("dft", m_t, 1, n, rho, ls_closed_form)
        assert abs(mse - 1.0 / (rho * m_t * n)) < 0.05 / (rho * m_t * n)

    def test_mmse_beats_ls_at_low_snr(self):
        rho = 0.1
        ls_mse = self._empirical_mse("dft", 1, 1, 4, rho, ls_closed_form,
                                     trials=20000)
        mmse_mse = self._empirical_mse("dft", 1, 1, 4, rho, mmse_closed_form,
                                       trials=20000)
        assert mmse_mse < ls_mse
        expected = 1.0 / (1.0 + rho * 4)
        assert abs(mmse_mse - expected) < 0.05 * expected


class TestLmmse:
    def test_identity_prior_matches_closed_form(self):
        rng = np.random.default_rng(4)
        plan, cfg, z = _training_setup("dft", 1, 2, 4, rho=1.5)
        y = complex_normal(rng, z.shape[0])
        general = lmmse_estimate(z, y, cfg.rho, np.eye(z.shape[1]))
        closed = mmse_closed_form(plan, z, y, cfg.rho)
        np.testing.assert_allclose(general, closed, atol=1e-10)

    def test_rejects_wrong_covariance_shape(self):
        plan, cfg, z = _training_setup("canonical", 1, 1, 3, rho=1.0)
        with pytest.raises(ValueError):
            lmmse_estimate(z, np.zeros(z.shape[0]), 1.0, np.eye(2))

    def test_rejects_indefinite_covariance(self):
        plan, cfg, z = _training_setup("canonical", 1, 1, 3, rho=1.0)
        bad = -np.eye(z.shape[1])
        with pytest.raises(ValueError):
            lmmse_estimate(z, np.zeros(z.shape[0]), 1.0, bad)
