"""Channel generators: i.i.d. Rayleigh, Rician, geometric and wideband taps.

All generators take an explicit ``numpy.random.Generator`` so that every
Monte Carlo trial can run on its own reproducible stream.  Complex normal
CN(0, 1) entries are drawn as ``(randn + 1j randn)/sqrt(2)`` (unit
variance split evenly between the quadratures).
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatchError, UnsupportedSizeError
from .model import NarrowbandChannelSet, SystemConfig


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) array of the given shape."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def gen_iid_rayleigh(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Matrix with i.i.d. CN(0, 1) entries."""
    return complex_normal(rng, (rows, cols))


@dataclass
class RicianParams:
    """Rician fading description.

    ``k_factor`` is the LOS-to-scatter power ratio (linear, not dB);
    ``los`` is the deterministic component, scaled so the total per-entry
    power stays 1.
    """

    k_factor: float
    los: np.ndarray

    def __post_init__(self):
        if self.k_factor < 0:
            raise ValueError(f"k_factor must be nonnegative, got {self.k_factor}")
        self.los = np.asarray(self.los, dtype=complex)


def gen_rician(params: RicianParams, rng: np.random.Generator) -> np.ndarray:
    """Rician matrix ``sqrt(K/(K+1)) los + sqrt(1/(K+1)) W`` with W i.i.d. CN(0,1)."""
    k = params.k_factor
    scatter = complex_normal(rng, params.los.shape)
    return np.sqrt(k / (k + 1.0)) * params.los + np.sqrt(1.0 / (k + 1.0)) * scatter


def steering(size: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA steering vector ``exp(1j pi m sin(angle))``, unnormalized."""
    m = np.arange(size)
    return np.exp(1j * np.pi * m * np.sin(angle))


@dataclass
class GeometricParams:
    """Planar geometric channel with a small number of propagation paths.

    Angles live in [-pi/2, pi/2); ``gains=None`` asks the generator to
    draw i.i.d. CN(0, 1) path gains.
    """

    departure_angles: np.ndarray
    arrival_angles: np.ndarray
    gains: np.ndarray | None = None

    def __post_init__(self):
        self.departure_angles = np.atleast_1d(np.asarray(self.departure_angles, dtype=float))
        self.arrival_angles = np.atleast_1d(np.asarray(self.arrival_angles, dtype=float))
        if self.departure_angles.shape != self.arrival_angles.shape:
            raise DimensionMismatchError(
                "departure_angles and arrival_angles must pair up one per path"
            )
        for name, arr in (("departure_angles", self.departure_angles),
                          ("arrival_angles", self.arrival_angles)):
            if np.any(arr < -np.pi / 2) or np.any(arr >= np.pi / 2):
                raise ValueError(f"{name} must lie in [-pi/2, pi/2)")
        if self.gains is not None:
            self.gains = np.atleast_1d(np.asarray(self.gains, dtype=complex))
            if self.gains.shape != self.departure_angles.shape:
                raise DimensionMismatchError("gains must supply one value per path")

    @property
    def num_paths(self) -> int:
        return self.departure_angles.shape[0]


def gen_geometric(params: GeometricParams, rows: int, cols: int,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Sum of rank-one path contributions ``sum_l a_rx(phi_l) g_l a_tx(theta_l)^H``.

    Parameters
    ----------
    params : GeometricParams
    rows, cols : int
        Receive-side and transmit-side array sizes.
    rng : Generator, optional
        Required only when ``params.gains`` is None.
    """
    gains = params.gains
    if gains is None:
        if rng is None:
            raise ValueError("rng is required when gains are not supplied")
        gains = complex_normal(rng, params.num_paths)
    out = np.zeros((rows, cols), dtype=complex)
    for gain, dep, arr in zip(gains, params.departure_angles, params.arrival_angles):
        out += gain * np.outer(steering(rows, arr), steering(cols, dep).conj())
    return out


def gen_narrowband_set(config: SystemConfig,
                       rng: np.random.Generator) -> NarrowbandChannelSet:
    """Draw one i.i.d. Rayleigh realization of all three blocks.

    With ``config.direct_path=False`` the direct block is all zeros but
    keeps its (m_r, m_t) shape.
    """
    h_d = gen_iid_rayleigh(config.m_r, config.m_t, rng)
    if not config.direct_path:
        h_d = np.zeros_like(h_d)
    g = gen_iid_rayleigh(config.n, config.m_t, rng)
    h = gen_iid_rayleigh(config.m_r, config.n, rng)
    return NarrowbandChannelSet(h_d=h_d, g=g, h=h)


@dataclass
class WidebandConfig:
    """Dimensions of the OFDM link: subcarriers, taps, CP and surface size."""

    m_c: int
    taps: int
    cp_len: int
    n: int

    def __post_init__(self):
        if self.taps < 1:
            raise ValueError(f"taps must be positive, got {self.taps}")
        if self.taps > self.m_c:
            raise UnsupportedSizeError(
                f"taps={self.taps} exceeds the DFT size m_c={self.m_c}"
            )
        if not (self.taps <= self.cp_len <= self.m_c):
            raise UnsupportedSizeError(
                f"need taps <= cp_len <= m_c, got taps={self.taps}, "
                f"cp_len={self.cp_len}, m_c={self.m_c}"
            )
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")


@dataclass
class WidebandChannelSet:
    """Tap-domain impulse responses, zero padded to the DFT size.

    ``h_d`` is the direct response (m_c,); ``g_taps`` and ``h_taps`` hold
    one row per surface element (n, m_c).  Only the first ``taps``
    entries of each response are nonzero.
    """

    config: WidebandConfig
    h_d: np.ndarray
    g_taps: np.ndarray
    h_taps: np.ndarray


def gen_wideband(config: WidebandConfig, rng: np.random.Generator,
                 direct_path: bool = True) -> WidebandChannelSet:
    """Draw i.i.d. CN(0, 1/taps) taps, total unit power per response."""
    scale = np.sqrt(1.0 / config.taps)

    def draw(shape):
        full = np.zeros(shape[:-1] + (config.m_c,), dtype=complex)
        full[..., :config.taps] = scale * complex_normal(rng, shape[:-1] + (config.taps,))
        return full

    h_d = draw((config.m_c,))
    if not direct_path:
        h_d = np.zeros(config.m_c, dtype=complex)
    g_taps = draw((config.n, config.m_c))
    h_taps = draw((config.n, config.m_c))
    return WidebandChannelSet(config=config, h_d=h_d, g_taps=g_taps, h_taps=h_taps)
