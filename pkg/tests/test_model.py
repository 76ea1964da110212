"""Core narrowband model: cascaded channel assembly and vectorization."""

import numpy as np
import pytest

from risestim.channels import complex_normal, gen_narrowband_set
from risestim.exceptions import DimensionMismatchError
from risestim.model import (
    CascadedChannel,
    NarrowbandChannelSet,
    RisState,
    SystemConfig,
    build_cascaded,
    extended_state,
    rx_matrix_form,
    rx_vectorized,
    training_row,
)


class TestSystemConfig:
    def test_rejects_nonpositive_dims(self):
        with pytest.raises(ValueError):
            SystemConfig(m_t=0, m_r=1, n=4, rho=1.0)
        with pytest.raises(ValueError):
            SystemConfig(m_t=1, m_r=1, n=0, rho=1.0)

    def test_rejects_negative_power(self):
        with pytest.raises(ValueError):
            SystemConfig(m_t=1, m_r=1, n=4, rho=-1.0)


class TestCascadedAssembly:
    def test_columns_are_kron_of_hops(self):
        rng = np.random.default_rng(7)
        cfg = SystemConfig(m_t=2, m_r=3, n=4, rho=1.0)
        channels = gen_narrowband_set(cfg, rng)
        cascaded = build_cascaded(channels)
        assert cascaded.h_c_matrix.shape == (6, 5)
        np.testing.assert_allclose(
            cascaded.h_c_matrix[:, 0], channels.h_d.flatten(order="F"))
        for idx in range(4):
            expected = np.kron(channels.g[idx, :], channels.h[:, idx])
            np.testing.assert_allclose(cascaded.h_c_matrix[:, idx + 1], expected)

    def test_vector_drops_direct_block(self):
        rng = np.random.default_rng(3)
        cfg = SystemConfig(m_t=2, m_r=2, n=3, rho=1.0)
        cascaded = build_cascaded(gen_narrowband_set(cfg, rng))
        full = cascaded.vector(include_direct=True)
        tail = cascaded.vector(include_direct=False)
        assert full.shape == (2 * 2 * 4,)
        np.testing.assert_allclose(full[4:], tail)

    def test_scaling_ambiguity_leaves_cascade_invariant(self):
        # Only the products h_i g_i^T enter H_c, so (a G, H / a) is the
        # same cascade for any nonzero a.
        rng = np.random.default_rng(11)
        cfg = SystemConfig(m_t=2, m_r=3, n=5, rho=1.0, direct_path=False)
        channels = gen_narrowband_set(cfg, rng)
        alpha = 2.7 - 0.4j
        scaled = NarrowbandChannelSet(
            h_d=channels.h_d, g=alpha * channels.g, h=channels.h / alpha)
        np.testing.assert_allclose(
            build_cascaded(channels).h_c,
            build_cascaded(scaled).h_c,
            atol=1e-12,
        )

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DimensionMismatchError):
            NarrowbandChannelSet(
                h_d=np.zeros((2, 2)),
                g=np.zeros((4, 2)),
                h=np.zeros((2, 3)),
            )


class TestVectorizedForm:
    def test_matrix_and_vectorized_rx_agree(self):
        # The defining identity of the stacked unknown: the bilinear
        # receive equation and the linear-in-h_c form must match exactly.
        rng = np.random.default_rng(2024)
        cfg = SystemConfig(m_t=2, m_r=3, n=6, rho=2.5)
        for _ in range(50):
            channels = gen_narrowband_set(cfg, rng)
            state = RisState(np.exp(2j * np.pi * rng.random(6)))
            x = complex_normal(rng, 2)
            noise = complex_normal(rng, 3)
            direct = rx_matrix_form(channels, state, x, noise, cfg.rho)
            h_c = build_cascaded(channels).h_c
            vectorized = rx_vectorized(h_c, state, x, noise, cfg.rho, m_r=3)
            np.testing.assert_allclose(direct, vectorized, atol=1e-10)

    def test_training_row_matches_kron_definition(self):
        rng = np.random.default_rng(5)
        x = complex_normal(rng, 2)
        psi = complex_normal(rng, 4)
        row = training_row(x, RisState(psi), m_r=3)
        front = np.concatenate(([1.0 + 0.0j], psi))
        expected = np.kron(front, np.kron(x, np.eye(3)))
        np.testing.assert_allclose(row, expected)

    def test_extended_state_prepends_unit(self):
        psi = np.array([1j, -1.0])
        np.testing.assert_allclose(
            extended_state(RisState(psi)), np.array([1.0, 1j, -1.0]))


class TestCascadedChannel:
    def test_column_major_flattening(self):
        mat = np.arange(12, dtype=complex).reshape(4, 3)
        chan = CascadedChannel(h_c_matrix=mat)
        np.testing.assert_allclose(chan.h_c, mat.flatten(order="F"))
