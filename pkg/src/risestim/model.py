"""Narrowband signal model for a RIS-aided MIMO link.

A link with ``m_t`` transmit antennas, ``m_r`` receive antennas and an
``n``-element reflecting surface is described by three blocks: the direct
channel ``H_d`` (m_r x m_t), the transmitter-to-surface channel ``G``
(n x m_t) and the surface-to-receiver channel ``H`` (m_r x n).  With the
surface set to the reflection vector ``psi`` the received slot is

    y = sqrt(rho) * (H_d + H diag(psi) G) x + w .

Everything observable about the link during training is carried by the
cascaded matrix ``H_c = [vec(H_d), G^T kr H]`` (``kr`` = column-wise
Kronecker product), so that ``vec(H_d + H diag(psi) G) = H_c [1; psi]``.
All vectorizations are column-major.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatchError


@dataclass
class SystemConfig:
    """Static description of one narrowband link.

    ``rho`` is the average transmit power with unit-variance noise, so it
    doubles as the SNR.  ``direct_path=False`` keeps the direct column in
    every layout but pins it to zero.
    """

    m_t: int
    m_r: int
    n: int
    rho: float
    direct_path: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.m_t < 1 or self.m_r < 1 or self.n < 1:
            raise DimensionMismatchError(
                f"antenna/element counts must be positive, got "
                f"m_t={self.m_t}, m_r={self.m_r}, n={self.n}"
            )
        if self.rho < 0:
            raise ValueError(f"rho must be nonnegative, got {self.rho}")


@dataclass
class NarrowbandChannelSet:
    """One realization of the three channel blocks.

    Shapes: ``h_d`` (m_r, m_t), ``g`` (n, m_t), ``h`` (m_r, n).  A link
    without a direct path carries an all-zero ``h_d``.
    """

    h_d: np.ndarray
    g: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        self.h_d = np.asarray(self.h_d, dtype=complex)
        self.g = np.asarray(self.g, dtype=complex)
        self.h = np.asarray(self.h, dtype=complex)
        if self.h_d.ndim != 2 or self.g.ndim != 2 or self.h.ndim != 2:
            raise DimensionMismatchError("channel blocks must all be 2-D matrices")
        m_r, n = self.h.shape
        if self.g.shape[0] != n:
            raise DimensionMismatchError(
                f"g has {self.g.shape[0]} rows but h has {n} columns; both count "
                "the surface elements"
            )
        if self.h_d.shape != (m_r, self.g.shape[1]):
            raise DimensionMismatchError(
                f"h_d shape {self.h_d.shape} inconsistent with (m_r, m_t)="
                f"({m_r}, {self.g.shape[1]}) implied by h and g"
            )

    @property
    def m_t(self) -> int:
        return self.g.shape[1]

    @property
    def m_r(self) -> int:
        return self.h.shape[0]

    @property
    def n(self) -> int:
        return self.h.shape[1]


@dataclass
class RisState:
    """Reflection coefficients of the surface for one slot.

    Entries are complex; training designs here use unit-modulus or zero
    (element off) values.
    """

    psi: np.ndarray

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex).reshape(-1)


@dataclass
class CascadedChannel:
    """Cascaded matrix ``H_c`` and its column-major vectorization."""

    h_c_matrix: np.ndarray
    direct_path: bool = True

    @property
    def h_c(self) -> np.ndarray:
        """vec(H_c), column-major."""
        return self.h_c_matrix.flatten(order="F")

    def vector(self, include_direct: bool | None = None) -> np.ndarray:
        """Stacked unknown for estimation.

        With ``include_direct=False`` the leading m_r*m_t entries (the
        direct column) are dropped.
        """
        if include_direct is None:
            include_direct = self.direct_path
        vec = self.h_c
        if include_direct:
            return vec
        return vec[self.h_c_matrix.shape[0]:]


def build_cascaded(channels: NarrowbandChannelSet,
                   direct_path: bool = True) -> CascadedChannel:
    """Assemble ``H_c = [vec(H_d), G^T kr H]`` from one channel realization.

    Column ``1+n`` equals ``kron(G[n, :], H[:, n])``, i.e. the vectorized
    rank-one contribution of surface element ``n``.

    Parameters
    ----------
    channels : NarrowbandChannelSet
    direct_path : bool
        When False the first column is forced to zero regardless of ``h_d``.

    Returns
    -------
    CascadedChannel
        ``h_c_matrix`` has shape (m_r*m_t, n+1).
    """
    m_r, m_t, n = channels.m_r, channels.m_t, channels.n
    h_c = np.empty((m_r * m_t, n + 1), dtype=complex)
    if direct_path:
        h_c[:, 0] = channels.h_d.flatten(order="F")
    else:
        h_c[:, 0] = 0.0
    for idx in range(n):
        h_c[:, idx + 1] = np.kron(channels.g[idx, :], channels.h[:, idx])
    return CascadedChannel(h_c, direct_path=direct_path)


def extended_state(state: RisState) -> np.ndarray:
    """Prepend the constant direct-path entry: ``[1, psi_1, ..., psi_n]``."""
    return np.concatenate(([1.0 + 0.0j], state.psi))


def rx_matrix_form(channels: NarrowbandChannelSet, state: RisState,
                   x: np.ndarray, noise: np.ndarray, rho: float) -> np.ndarray:
    """Received slot computed directly from the matrix model.

    ``y = sqrt(rho) (H_d + H diag(psi) G) x + w``.  Noise is supplied by
    the caller (unit-variance circular complex Gaussian in the harness).
    """
    x = np.asarray(x, dtype=complex).reshape(-1)
    if x.shape[0] != channels.m_t:
        raise DimensionMismatchError(
            f"pilot x has length {x.shape[0]}, expected m_t={channels.m_t}"
        )
    if state.psi.shape[0] != channels.n:
        raise DimensionMismatchError(
            f"state psi has length {state.psi.shape[0]}, expected n={channels.n}"
        )
    eff = channels.h_d + channels.h @ np.diag(state.psi) @ channels.g
    return np.sqrt(rho) * eff @ x + np.asarray(noise, dtype=complex).reshape(-1)


def training_row(x: np.ndarray, state: RisState, m_r: int,
                 include_direct: bool = True) -> np.ndarray:
    """Measurement block ``Z = psi~^T kron x^T kron I_{m_r}`` for one slot.

    Applied to ``h_c = vec(H_c)`` it reproduces the noiseless received
    slot divided by sqrt(rho).  With ``include_direct=False`` the leading
    ``1`` of the extended state is dropped, matching a cascaded vector
    without the direct column.
    """
    x = np.asarray(x, dtype=complex).reshape(-1)
    front = extended_state(state) if include_direct else state.psi
    return np.kron(front, np.kron(x, np.eye(m_r, dtype=complex)))


def rx_vectorized(h_c: np.ndarray, state: RisState, x: np.ndarray,
                  noise: np.ndarray, rho: float, m_r: int) -> np.ndarray:
    """Received slot from the vectorized model ``y = sqrt(rho) Z h_c + w``."""
    h_c = np.asarray(h_c, dtype=complex).reshape(-1)
    z = training_row(x, state, m_r)
    if z.shape[1] != h_c.shape[0]:
        raise DimensionMismatchError(
            f"h_c has length {h_c.shape[0]}, measurement row expects {z.shape[1]}"
        )
    return np.sqrt(rho) * z @ h_c + np.asarray(noise, dtype=complex).reshape(-1)
