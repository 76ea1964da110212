"""Training protocols that share the surface across users.

All uplink users see the surface through one common surface-to-receiver
channel, so user k's cascade is a per-element rescaling of user 1's:
``A_k = A_1 diag(c_k)``.  Estimating A_1 once (N slots) and then only the
scaling vectors (N scalars per extra user, M antennas per slot) cuts the
total training length to

    J = K + N + max(K - 1, ceil((K - 1) N / M))

instead of K (N + 1) for user-by-user training.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .channels import complex_normal
from .exceptions import DimensionMismatchError, RankDeficientError
from .training import dft_states

# Phase-3 systems above this condition number get redrawn.
CONDITION_LIMIT = 1e6
WEAK_COLUMN_TOL = 1e-6


def overhead_common_channel(k_users: int, n: int, m_rx: int) -> int:
    """Training slots used by the shared-cascade protocol."""
    if min(k_users, n, m_rx) < 1:
        raise ValueError("k_users, n and m_rx must all be positive")
    extra = 0
    if k_users > 1:
        extra = max(k_users - 1, math.ceil((k_users - 1) * n / m_rx))
    return k_users + n + extra


def overhead_two_timescale(k_users: int, n: int, m_rx: int, alpha: float) -> float:
    """Amortized per-block slots when the static hop is refreshed every alpha blocks.

    The slow hop costs 2(n + 1) slots spread over alpha blocks; the fast
    user links cost ceil(n / m_rx) + 1 slots per user every block.  The
    result is a real-valued average, deliberately not rounded.
    """
    if min(k_users, n, m_rx) < 1:
        raise ValueError("k_users, n and m_rx must all be positive")
    if alpha < 1.0:
        raise ValueError(f"alpha must be at least 1, got {alpha}")
    return 2 * (n + 1) / alpha + k_users * math.ceil(n / m_rx) + k_users


@dataclass
class MultiuserChannels:
    """Uplink geometry: one receiver, one surface, K single-antenna users."""

    bs_ris: np.ndarray    # (m_rx, n)
    user_ris: np.ndarray  # (n, k_users), column per user
    direct: np.ndarray    # (m_rx, k_users)

    def __post_init__(self):
        m_rx, n = self.bs_ris.shape
        if self.user_ris.shape[0] != n:
            raise DimensionMismatchError(
                "user_ris rows must match the surface size of bs_ris"
            )
        if self.direct.shape != (m_rx, self.user_ris.shape[1]):
            raise DimensionMismatchError(
                "direct must be (m_rx, k_users) matching the other blocks"
            )

    @property
    def k_users(self) -> int:
        return self.user_ris.shape[1]

    @property
    def n(self) -> int:
        return self.bs_ris.shape[1]

    @property
    def m_rx(self) -> int:
        return self.bs_ris.shape[0]

    def cascade(self, user: int) -> np.ndarray:
        """A_k from the physical hops, (m_rx, n)."""
        return self.bs_ris * self.user_ris[:, user]


def gen_multiuser_channels(k_users: int, n: int, m_rx: int,
                           rng: np.random.Generator) -> MultiuserChannels:
    return MultiuserChannels(
        bs_ris=complex_normal(rng, (m_rx, n)),
        user_ris=complex_normal(rng, (n, k_users)),
        direct=complex_normal(rng, (m_rx, k_users)),
    )


@dataclass
class MultiuserEstimate:
    """Protocol output: direct paths, cascades, and the slot ledger."""

    direct: np.ndarray        # (m_rx, k_users)
    cascades: np.ndarray      # (k_users, m_rx, n)
    slots_used: int
    notes: list = field(default_factory=list)


def simulate_common_channel(channels: MultiuserChannels, rho: float,
                            rng: np.random.Generator,
                            noise: bool = True,
                            max_redraws: int = 20,
                            genie_user1: bool = False) -> MultiuserEstimate:
    """Run the three-phase shared-cascade protocol once.

    Phase 1 (K slots): surface off, one user per slot, direct paths.
    Phase 2 (N slots): user 1 with DFT states, full first cascade.
    Phase 3: all remaining users transmit together under random
    unit-modulus weights and states; a stacked LS recovers every scaling
    vector jointly in max(K-1, ceil((K-1)N/M)) slots.

    ``genie_user1`` replaces the phase-2 estimate with the true first
    cascade after the slots are spent, isolating how much of the later
    users' error is inherited noise propagation.
    """
    k_users, n, m_rx = channels.k_users, channels.n, channels.m_rx
    scale = np.sqrt(rho)
    slots = 0

    def rx(symbol_weights: np.ndarray, psi: np.ndarray) -> np.ndarray:
        nonlocal slots
        slots += 1
        signal = np.zeros(m_rx, dtype=complex)
        for k in range(k_users):
            if symbol_weights[k] == 0:
                continue
            h_eff = channels.direct[:, k] + channels.cascade(k) @ psi
            signal = signal + symbol_weights[k] * h_eff
        out = scale * signal
        if noise:
            out = out + complex_normal(rng, m_rx)
        return out

    psi_off = np.zeros(n, dtype=complex)
    direct_hat = np.empty((m_rx, k_users), dtype=complex)
    for k in range(k_users):
        weights = np.zeros(k_users, dtype=complex)
        weights[k] = 1.0
        direct_hat[:, k] = rx(weights, psi_off) / scale

    states = dft_states(n)                     # column i is the slot-i state
    user1 = np.zeros(k_users, dtype=complex)
    user1[0] = 1.0
    y2 = np.empty((m_rx, n), dtype=complex)
    for i in range(n):
        y2[:, i] = rx(user1, states[:, i]) - scale * direct_hat[:, 0]
    a1_hat = np.linalg.solve(states.T, (y2 / scale).T).T
    if genie_user1:
        a1_hat = channels.cascade(0)

    weak = np.flatnonzero(np.linalg.norm(a1_hat, axis=0) < WEAK_COLUMN_TOL)
    notes = [
        f"cascade column {int(i)} of user 1 is near zero; scaling ratios "
        "through it are unreliable"
        for i in weak
    ]

    cascades = np.empty((k_users, m_rx, n), dtype=complex)
    cascades[0] = a1_hat
    if k_users > 1:
        j3 = max(k_users - 1, math.ceil((k_users - 1) * n / m_rx))
        unknowns = (k_users - 1) * n
        for attempt in range(max_redraws):
            slot_weights = np.exp(
                2j * np.pi * rng.random((j3, k_users - 1)))
            slot_states = np.exp(2j * np.pi * rng.random((j3, n)))
            blocks = np.empty((j3 * m_rx, unknowns), dtype=complex)
            for j in range(j3):
                base = a1_hat * slot_states[j]
                for k in range(k_users - 1):
                    blocks[j * m_rx:(j + 1) * m_rx,
                           k * n:(k + 1) * n] = slot_weights[j, k] * base
            if np.linalg.cond(blocks) <= CONDITION_LIMIT:
                break
        else:
            raise RankDeficientError(
                f"phase-3 system stayed ill-conditioned after {max_redraws} "
                "redraws",
                rank=min(blocks.shape),
            )

        stacked = np.empty(j3 * m_rx, dtype=complex)
        for j in range(j3):
            weights = np.concatenate(([0.0 + 0.0j], slot_weights[j]))
            y = rx(weights, slot_states[j])
            y = y - scale * (direct_hat[:, 1:] @ slot_weights[j])
            stacked[j * m_rx:(j + 1) * m_rx] = y / scale
        ratios, *_ = np.linalg.lstsq(blocks, stacked, rcond=None)
        for k in range(1, k_users):
            cascades[k] = a1_hat * ratios[(k - 1) * n:k * n]

    expected = overhead_common_channel(k_users, n, m_rx)
    if slots != expected:
        raise RuntimeError(
            f"protocol consumed {slots} slots, formula says {expected}"
        )
    for note in notes:
        warnings.warn(note, RuntimeWarning, stacklevel=2)
    return MultiuserEstimate(direct=direct_hat, cascades=cascades,
                             slots_used=slots, notes=notes)


def random_phase_states(count: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-modulus candidate states, one per row."""
    return np.exp(2j * np.pi * rng.random((count, n)))


def opportunistic_select(direct: complex, cascade: np.ndarray,
                         states: np.ndarray, rho: float,
                         rng: np.random.Generator,
                         noise: bool = True):
    """Pick a surface state from one noisy probe per candidate.

    Sends a unit pilot under each candidate state, keeps the one with the
    largest received energy, and returns ``(index, rate)`` where the rate
    is evaluated on the true effective channel of the winner.
    """
    states = np.asarray(states, dtype=complex)
    if states.ndim != 2 or states.shape[0] < 1:
        raise DimensionMismatchError("states must be a nonempty 2-D array")
    cascade = np.asarray(cascade, dtype=complex).reshape(-1)
    if states.shape[1] != cascade.shape[0]:
        raise DimensionMismatchError(
            f"states have {states.shape[1]} columns, cascade has "
            f"{cascade.shape[0]} elements"
        )
    h_eff = direct + states @ cascade
    probes = np.sqrt(rho) * h_eff
    if noise:
        probes = probes + complex_normal(rng, probes.shape)
    best = int(np.argmax(np.abs(probes) ** 2))
    rate = float(np.log2(1.0 + rho * np.abs(h_eff[best]) ** 2))
    return best, rate
