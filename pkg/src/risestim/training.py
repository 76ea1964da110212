"""Training-state designs for the reflecting surface and pilot stacking.

During training the surface holds one state per group of ``m_t`` slots
while the transmitter sweeps the columns of a pilot matrix ``X`` with
``X X^H = m_t I`` (unit-modulus entries, per-antenna power one).  The
stacked measurement matrix then satisfies the Gram identity

    Z~^H Z~ = m_t (Psi Psi^H)* kron I_{m_r m_t}

which makes least squares trivially invertible for the canonical, DFT
and Hadamard designs.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import hadamard as _sylvester_hadamard

from .exceptions import (
    RankDeficientError,
    UnsupportedFamilyError,
    UnsupportedSizeError,
)
from .model import RisState, SystemConfig, training_row

FAMILIES = ("canonical", "dft", "hadamard", "quantized-dft")


def canonical_states(n: int) -> np.ndarray:
    """One element on per state: the identity matrix."""
    if n < 1:
        raise UnsupportedSizeError(f"n must be positive, got {n}")
    return np.eye(n, dtype=complex)


def dft_states(n: int) -> np.ndarray:
    """DFT training ``Psi[k, l] = exp(-2j pi k l / n)`` (unit modulus)."""
    if n < 1:
        raise UnsupportedSizeError(f"n must be positive, got {n}")
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n)


def hadamard_states(n: int) -> np.ndarray:
    """Sylvester Hadamard training; only powers of two are constructible."""
    if n < 1 or (n & (n - 1)) != 0:
        raise UnsupportedSizeError(f"N must be a power of 2 for Hadamard, got {n}")
    return _sylvester_hadamard(n).astype(complex)


def quantized_dft_states(n: int, phase_count: int) -> np.ndarray:
    """DFT states snapped to ``phase_count`` uniformly spaced phases.

    Each entry ``exp(-1j phi)`` is replaced by the feasible phase
    ``2 pi k / phase_count`` minimizing the chordal distance; exact ties
    go to the smaller phase index k.  The result is generally not
    orthogonal, which is the point: it models low-resolution phase
    shifters.
    """
    if phase_count < 2:
        raise UnsupportedSizeError(f"phase_count must be >= 2, got {phase_count}")
    k = np.arange(n)
    target = np.mod(2.0 * np.pi * np.outer(k, k) / n, 2.0 * np.pi)
    levels = 2.0 * np.pi * np.arange(phase_count) / phase_count
    # chordal distance |e^{-j a} - e^{-j b}| = 2 |sin((a-b)/2)|
    dist = np.abs(np.sin((target[..., None] - levels[None, None, :]) / 2.0))
    chosen = np.argmin(dist, axis=-1)  # argmin takes the first (smaller) index on ties
    return np.exp(-1j * levels[chosen])


def family_states(family: str, n: int, direct_path: bool = False,
                  phase_count: int | None = None) -> np.ndarray:
    """States matrix (n x S) for a family, S = n, or n+1 with a direct path.

    The direct-path extensions keep the family's hardware alphabet and an
    invertible extended matrix ``[1^T; Psi]``:

    - canonical: an all-off state followed by the identity,
    - dft: the last n rows of the (n+1)-point DFT matrix,
    - hadamard: the all-minus-one state followed by the Hadamard columns.
    """
    if family == "canonical":
        base = canonical_states(n)
        if direct_path:
            return np.hstack([np.zeros((n, 1), dtype=complex), base])
        return base
    if family == "dft":
        if direct_path:
            return dft_states(n + 1)[1:, :]
        return dft_states(n)
    if family == "hadamard":
        base = hadamard_states(n)
        if direct_path:
            return np.hstack([-np.ones((n, 1), dtype=complex), base])
        return base
    if family == "quantized-dft":
        if phase_count is None:
            raise UnsupportedFamilyError("quantized-dft requires phase_count")
        if direct_path:
            raise UnsupportedFamilyError(
                "quantized-dft training is defined here without a direct path"
            )
        return quantized_dft_states(n, phase_count)
    raise UnsupportedFamilyError(
        f"unknown training family {family!r}; expected one of {FAMILIES}"
    )


def pilot_matrix(m_t: int) -> np.ndarray:
    """Unit-modulus pilot matrix with ``X X^H = m_t I`` (the m_t-point DFT)."""
    k = np.arange(m_t)
    return np.exp(-2j * np.pi * np.outer(k, k) / m_t)


@dataclass
class TrainingPlan:
    """A concrete training schedule: pilots, surface states, family label."""

    family: str
    pilots: np.ndarray       # (m_t, m_t), columns are per-slot pilot vectors
    states: np.ndarray       # (n, S), columns are per-group surface states
    phase_count: int | None = None

    @property
    def m_t(self) -> int:
        return self.pilots.shape[0]

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def num_states(self) -> int:
        return self.states.shape[1]

    @property
    def num_slots(self) -> int:
        """Total pilot slots J = m_t * S."""
        return self.m_t * self.num_states


def make_training_plan(family: str, n: int, m_t: int = 1,
                       direct_path: bool = False,
                       phase_count: int | None = None) -> TrainingPlan:
    """Build the default plan for a family (DFT pilots, family states)."""
    states = family_states(family, n, direct_path=direct_path, phase_count=phase_count)
    return TrainingPlan(family=family, pilots=pilot_matrix(m_t),
                        states=states, phase_count=phase_count)


def stack_training(plan: TrainingPlan, config: SystemConfig) -> np.ndarray:
    """Stack per-slot measurement rows into Z~ (J*m_r rows).

    Slot order is state-major: the surface holds each state for m_t
    consecutive slots while the pilots sweep.  With a direct path each
    state is extended by the constant leading one; without it the direct
    column is absent and the unknown has length m_r*m_t*n.
    """
    n, num_states = plan.states.shape
    required = n + 1 if config.direct_path else n
    if num_states < required:
        raise RankDeficientError(
            f"underdetermined training: {num_states} states cannot identify "
            f"{required} cascaded columns", rank=num_states
        )
    blocks = []
    for j in range(num_states):
        state = RisState(plan.states[:, j])
        for m in range(plan.m_t):
            blocks.append(training_row(plan.pilots[:, m], state, config.m_r,
                                       include_direct=config.direct_path))
    return np.vstack(blocks)
