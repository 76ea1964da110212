"""Wideband training over OFDM frames.

Per subcarrier the cascade is multiplicative, so the whole frame obeys

    y_check = sqrt(rho) * x_check o (C psit) + w_check,
    C = [hd_check, B],  B[:, i] = g_check_i o h_check_i

with ``o`` elementwise, ``psit = [1; psi]``, and checked quantities in
the frequency domain.  Signals move between domains through the unitary
DFT (F / sqrt(m_c)) so noise stays unit-variance in both; channel tap
vectors map through the unnormalized DFT, which is what makes the
circular-convolution product identity hold without stray scale factors.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .channels import WidebandChannelSet, complex_normal
from .exceptions import DimensionMismatchError, IdentifiabilityError
from .training import family_states


@dataclass
class CascadedFreqChannel:
    """Frequency response of direct path plus each per-element cascade."""

    c_matrix: np.ndarray   # (m_c, n + 1); column 0 is the direct path

    @property
    def m_c(self) -> int:
        return self.c_matrix.shape[0]

    @property
    def n(self) -> int:
        return self.c_matrix.shape[1] - 1

    def response(self, psi: np.ndarray) -> np.ndarray:
        """Composite per-subcarrier response for one surface state."""
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        if psi.shape[0] != self.n:
            raise DimensionMismatchError(
                f"state has length {psi.shape[0]}, expected {self.n}"
            )
        extended = np.concatenate(([1.0 + 0.0j], psi))
        return self.c_matrix @ extended


def build_freq_channel(channels: WidebandChannelSet) -> CascadedFreqChannel:
    """Unnormalized-DFT responses; cascades multiply per subcarrier."""
    hd_f = np.fft.fft(channels.h_d)
    g_f = np.fft.fft(channels.g_taps, axis=1)
    h_f = np.fft.fft(channels.h_taps, axis=1)
    c = np.concatenate([hd_f[:, None], (g_f * h_f).T], axis=1)
    return CascadedFreqChannel(c_matrix=c)


def composite_taps(channels: WidebandChannelSet, psi: np.ndarray) -> np.ndarray:
    """Time-domain impulse response of direct path plus phased cascades."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.shape[0] != channels.config.n:
        raise DimensionMismatchError(
            f"state has length {psi.shape[0]}, expected {channels.config.n}"
        )
    cascade_f = np.fft.fft(channels.g_taps, axis=1) * np.fft.fft(channels.h_taps, axis=1)
    return channels.h_d + np.fft.ifft(cascade_f.T @ psi)


def rx_time(channels: WidebandChannelSet, psi: np.ndarray, x_time: np.ndarray,
            noise_time: np.ndarray, rho: float) -> np.ndarray:
    """Time-domain receive: circular convolution of the composite taps."""
    taps = composite_taps(channels, psi)
    circ = scipy.linalg.circulant(taps)
    return np.sqrt(rho) * circ @ np.asarray(x_time, dtype=complex) + noise_time


def rx_freq(freq_channel: CascadedFreqChannel, psi: np.ndarray,
            x_freq: np.ndarray, noise_freq: np.ndarray, rho: float) -> np.ndarray:
    """Frequency-domain receive: per-subcarrier scalar products."""
    resp = freq_channel.response(psi)
    return np.sqrt(rho) * np.asarray(x_freq, dtype=complex) * resp + noise_freq


def to_freq(signal_time: np.ndarray) -> np.ndarray:
    """Unitary DFT along axis 0 (keeps noise variance)."""
    signal_time = np.asarray(signal_time, dtype=complex)
    return np.fft.fft(signal_time, axis=0) / np.sqrt(signal_time.shape[0])


def to_time(signal_freq: np.ndarray) -> np.ndarray:
    """Unitary inverse DFT along axis 0."""
    signal_freq = np.asarray(signal_freq, dtype=complex)
    return np.fft.ifft(signal_freq, axis=0) * np.sqrt(signal_freq.shape[0])


@dataclass
class OfdmFrame:
    """Training frame: one pilot grid column and one surface state per symbol."""

    pilots: np.ndarray   # (m_c, num_symbols) frequency-domain pilots
    states: np.ndarray   # (num_symbols, n)

    def __post_init__(self):
        if self.pilots.shape[1] != self.states.shape[0]:
            raise DimensionMismatchError(
                "pilots and states disagree on the number of OFDM symbols"
            )

    @property
    def num_symbols(self) -> int:
        return self.states.shape[0]

    def extended_states(self) -> np.ndarray:
        """[1; psi] per symbol as columns, (n + 1, num_symbols)."""
        ones = np.ones((self.num_symbols, 1), dtype=complex)
        return np.concatenate([ones, self.states], axis=1).T


def make_ofdm_frame(n: int, m_c: int, family: str = "dft",
                    rng: np.random.Generator | None = None) -> OfdmFrame:
    """Frame with n + 1 symbols whose extended state matrix is invertible.

    Pilots are all-ones unless an rng is given, in which case they are
    random unit-modulus symbols.
    """
    states = family_states(family, n, direct_path=True).T   # one state per row
    num_symbols = states.shape[0]
    if rng is None:
        pilots = np.ones((m_c, num_symbols), dtype=complex)
    else:
        pilots = np.exp(2j * np.pi * rng.random((m_c, num_symbols)))
    return OfdmFrame(pilots=pilots, states=states)


def simulate_ofdm_rx(freq_channel: CascadedFreqChannel, frame: OfdmFrame,
                     rho: float, rng: np.random.Generator | None = None) -> np.ndarray:
    """Received frequency grid over the frame, (m_c, num_symbols)."""
    psit = frame.extended_states()
    clean = np.sqrt(rho) * frame.pilots * (freq_channel.c_matrix @ psit)
    if rng is None:
        return clean
    return clean + complex_normal(rng, clean.shape)


def full_pilot_ls(received: np.ndarray, frame: OfdmFrame, rho: float) -> np.ndarray:
    """LS estimate of C from pilots on every subcarrier.

    Solves the per-subcarrier linear system against the extended state
    matrix; with n + 1 symbols and an invertible state family this is an
    exact inverse, with more symbols it is overdetermined LS.
    """
    received = np.asarray(received, dtype=complex)
    if received.shape != frame.pilots.shape:
        raise DimensionMismatchError(
            f"received grid {received.shape} does not match pilots "
            f"{frame.pilots.shape}"
        )
    psit = frame.extended_states()              # (n + 1, S)
    if frame.num_symbols < psit.shape[0]:
        raise IdentifiabilityError(
            f"{frame.num_symbols} symbols cannot identify {psit.shape[0]} "
            "cascade columns"
        )
    scaled = received / (np.sqrt(rho) * frame.pilots)
    # scaled ~ C psit, solved row by row: C^T = lstsq(psit^T, scaled^T).
    sol, *_ = np.linalg.lstsq(psit.T, scaled.T, rcond=None)
    return sol.T


def cascade_tap_count(channel_taps: int) -> int:
    """Delay support of a cascade of two length-L responses."""
    return 2 * channel_taps - 1


def interp_pilot_ls(received: np.ndarray, frame: OfdmFrame,
                    pilot_indices: np.ndarray, rho: float,
                    tap_count: int) -> np.ndarray:
    """Estimate C from pilots on a subcarrier subset.

    Per-subcarrier LS at the pilot tones gives rows of C there; each
    column is then constrained to ``tap_count`` delay taps and completed
    through the tap-domain LS fit, which is exact whenever the true
    delay support fits (use ``cascade_tap_count`` for the cascades).
    """
    received = np.asarray(received, dtype=complex)
    pilot_indices = np.asarray(pilot_indices, dtype=int)
    m_c = received.shape[0]
    if pilot_indices.size < tap_count:
        raise IdentifiabilityError(
            f"{pilot_indices.size} pilot tones cannot identify {tap_count} taps"
        )
    if tap_count < 1 or tap_count > m_c:
        raise ValueError(f"tap_count must lie in [1, {m_c}], got {tap_count}")
    psit = frame.extended_states()
    scaled = received[pilot_indices] / (np.sqrt(rho) * frame.pilots[pilot_indices])
    sol, *_ = np.linalg.lstsq(psit.T, scaled.T, rcond=None)
    c_at_pilots = sol.T                          # (n_p, n + 1)

    tap_grid = np.arange(tap_count)
    basis = np.exp(-2j * np.pi * np.outer(pilot_indices, tap_grid) / m_c)
    taps, *_ = np.linalg.lstsq(basis, c_at_pilots, rcond=None)
    padded = np.zeros((m_c, c_at_pilots.shape[1]), dtype=complex)
    padded[:tap_count] = taps
    return np.fft.fft(padded, axis=0)


def group_elements(n: int, group_size: int) -> list:
    """Contiguous equal-size index groups covering all n surface elements."""
    if group_size < 1 or group_size > n:
        raise ValueError(f"group_size must lie in [1, {n}], got {group_size}")
    if n % group_size:
        raise ValueError(
            f"group_size {group_size} does not divide the element count {n}"
        )
    return [np.arange(start, start + group_size)
            for start in range(0, n, group_size)]


def expand_group_states(group_states: np.ndarray, groups: list, n: int) -> np.ndarray:
    """Per-element states from per-group states by repetition."""
    group_states = np.asarray(group_states, dtype=complex)
    if group_states.shape[1] != len(groups):
        raise DimensionMismatchError(
            f"group states have {group_states.shape[1]} columns, expected "
            f"{len(groups)} groups"
        )
    out = np.empty((group_states.shape[0], n), dtype=complex)
    for g_idx, members in enumerate(groups):
        out[:, members] = group_states[:, g_idx][:, None]
    return out


def grouped_frame(n: int, m_c: int, group_size: int, family: str = "dft",
                  rng: np.random.Generator | None = None) -> OfdmFrame:
    """Training frame steering groups jointly: n/group_size + 1 symbols."""
    groups = group_elements(n, group_size)
    g_frame = make_ofdm_frame(len(groups), m_c, family=family, rng=rng)
    states = expand_group_states(g_frame.states, groups, n)
    return OfdmFrame(pilots=g_frame.pilots, states=states)


def grouped_channel(freq_channel: CascadedFreqChannel, groups: list) -> np.ndarray:
    """Effective (m_c, num_groups + 1) cascade matrix under grouping."""
    cols = [freq_channel.c_matrix[:, 0]]
    for members in groups:
        cols.append(freq_channel.c_matrix[:, 1 + members].sum(axis=1))
    return np.stack(cols, axis=1)
