"""Least-squares and LMMSE estimators for the stacked cascaded channel.

The general estimators accept any stacked measurement matrix.  The
closed forms exploit the Gram identity of the canonical/DFT/Hadamard
designs (no direct path) and reduce to a scaled matched filter
``Z~^H y``; they are equal to the general estimators to numerical
precision, which the tests pin.

Observations may be a vector or a matrix whose columns are independent
realizations sharing the same Z~; estimators are applied column-wise.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import DimensionMismatchError, RankDeficientError, UnsupportedFamilyError
from .training import TrainingPlan

# Relative singular-value cutoff for rank decisions in the pseudo-inverse.
RANK_CUTOFF = 1e-10


@dataclass
class EstimationResult:
    """Aggregate of one Monte Carlo estimation run."""

    h_hat: np.ndarray
    per_entry_mse: float
    pilots_used: int


def ls_estimate(z: np.ndarray, y: np.ndarray, rho: float) -> np.ndarray:
    """LS solution ``(1/sqrt(rho)) pinv(Z~) y``.

    Uses a complete orthogonal decomposition (LAPACK gelsy) with relative
    cutoff 1e-10; a numerically rank-deficient stack is rejected with the
    reported rank rather than silently regularized.
    """
    z = np.asarray(z, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if y.shape[0] != z.shape[0]:
        raise DimensionMismatchError(
            f"y has {y.shape[0]} rows, Z~ has {z.shape[0]}"
        )
    sol, _, rank, _ = scipy.linalg.lstsq(z, y, cond=RANK_CUTOFF,
                                         lapack_driver="gelsy")
    if rank < z.shape[1]:
        raise RankDeficientError(
            f"measurement stack is rank deficient: numerical rank {rank} "
            f"< {z.shape[1]} unknowns", rank=int(rank)
        )
    return sol / np.sqrt(rho)


def lmmse_estimate(z: np.ndarray, y: np.ndarray, rho: float,
                   r_cov: np.ndarray) -> np.ndarray:
    """LMMSE estimate ``sqrt(rho) R Z~^H (rho Z~ R Z~^H + I)^{-1} y``.

    ``r_cov`` is the prior covariance of the unknown; it must be
    Hermitian positive semidefinite (smallest eigenvalue >= -1e-10).
    """
    z = np.asarray(z, dtype=complex)
    y = np.asarray(y, dtype=complex)
    r_cov = np.asarray(r_cov, dtype=complex)
    if r_cov.shape != (z.shape[1], z.shape[1]):
        raise DimensionMismatchError(
            f"prior covariance shape {r_cov.shape} does not match "
            f"{z.shape[1]} unknowns"
        )
    eigmin = float(np.linalg.eigvalsh(r_cov).min())
    if eigmin < -1e-10:
        raise ValueError(
            f"prior covariance is not positive semidefinite "
            f"(smallest eigenvalue {eigmin:.3e})"
        )
    gram = rho * z @ r_cov @ z.conj().T + np.eye(z.shape[0])
    return np.sqrt(rho) * r_cov @ z.conj().T @ np.linalg.solve(gram, y)


def _closed_form_scale(plan: TrainingPlan, rho: float, mmse: bool) -> float:
    m_t, n = plan.m_t, plan.n
    if plan.family == "canonical":
        gram = m_t
    elif plan.family in ("dft", "hadamard"):
        gram = m_t * n
    else:
        raise UnsupportedFamilyError(
            f"no closed form for family {plan.family!r}; use the general estimators"
        )
    scale = 1.0 / (gram * np.sqrt(rho))
    if mmse:
        scale /= 1.0 + 1.0 / (rho * gram)
    return scale


def ls_closed_form(plan: TrainingPlan, z: np.ndarray, y: np.ndarray,
                   rho: float) -> np.ndarray:
    """Matched-filter LS for orthogonal designs without a direct path.

    Canonical: ``(1/(m_t sqrt(rho))) Z~^H y``; DFT/Hadamard:
    ``(1/(m_t n sqrt(rho))) Z~^H y``.
    """
    scale = _closed_form_scale(plan, rho, mmse=False)
    return scale * (np.asarray(z).conj().T @ np.asarray(y, dtype=complex))


def mmse_closed_form(plan: TrainingPlan, z: np.ndarray, y: np.ndarray,
                     rho: float) -> np.ndarray:
    """MMSE shrinkage of the matched filter under a CN(0, I) prior."""
    scale = _closed_form_scale(plan, rho, mmse=True)
    return scale * (np.asarray(z).conj().T @ np.asarray(y, dtype=complex))
