"""Training-overhead-aware spectral efficiency and power/size optimization.

A coherence block of ``T`` symbols spends ``N`` on training and the rest
on data.  The achievable rate treats the channel-estimation error as
extra noise:

    R = (1 - N/T) E log2(1 + rho_d (sum_i |h_hat_i|)^2 / (1 + N rho_d sigma_e^2))

with per-entry MMSE error variance sigma_e^2 = 1/(1+rho_tau) under
canonical training and 1/(1+N rho_tau) under orthogonal (DFT/Hadamard)
training.  The total energy rho*T is split between phases subject to
rho_tau*N + rho_d*T_d = rho*T.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .channels import complex_normal
from .exceptions import UnsupportedFamilyError
from .linear_estimators import mmse_closed_form
from .model import SystemConfig
from .training import make_training_plan, stack_training


@dataclass
class PowerSplit:
    """Energy split between training and data phases.

    ``beta`` is the data-phase energy fraction: rho_d = beta rho T / T_d
    and rho_tau = (1-beta) rho T / N.
    """

    beta: float
    rho_tau: float
    rho_d: float

    @classmethod
    def from_beta(cls, beta: float, n: int, t: int, rho: float) -> "PowerSplit":
        if not 0.0 < beta < 1.0:
            raise ValueError(f"beta must lie strictly inside (0, 1), got {beta}")
        _check_block(n, t)
        return cls(beta=beta,
                   rho_tau=(1.0 - beta) * rho * t / n,
                   rho_d=beta * rho * t / (t - n))

    @classmethod
    def equal_power(cls, n: int, t: int, rho: float) -> "PowerSplit":
        """Uniform per-symbol power: rho_tau = rho_d = rho (beta = T_d/T)."""
        _check_block(n, t)
        return cls(beta=(t - n) / t, rho_tau=rho, rho_d=rho)


@dataclass
class RateConfig:
    """Single-antenna rate-simulation setup (no direct path)."""

    n: int
    t: int
    rho: float
    trials: int = 10000
    family: str = "canonical"


@dataclass
class RateEstimate:
    value: float
    std_error: float
    trials: int


def _check_block(n: int, t: int):
    if not 1 <= n < t:
        raise ValueError(f"need 1 <= N < T, got N={n}, T={t}")


def _effective_snr(beta: float, n: int, t: int, rho: float, family: str) -> float:
    """Deterministic surrogate whose maximizer is the optimal split."""
    rho_tau = (1.0 - beta) * rho * t / n
    rho_d = beta * rho * t / (t - n)
    if family == "canonical":
        return rho_tau * rho_d / (1.0 + rho_tau + n * rho_d)
    return n * rho_tau * rho_d / (1.0 + n * rho_tau + n * rho_d)


def _optimal_beta(n: int, t: int, rho: float, family: str) -> float:
    _check_block(n, t)
    rt = rho * t
    if family == "canonical":
        c = 1.0 + rt / n
        d = n * rt / (t - n) - rt / n
    elif family == "orthogonal":
        c = 1.0 + rt
        d = n * rt / (t - n) - rt
    else:
        raise UnsupportedFamilyError(f"unknown rate family {family!r}")
    # The closed form has a removable singularity where d -> 0 (the limit
    # is beta = 1/2); fall back to maximizing the surrogate numerically.
    if abs(d) < 1e-9 * c:
        res = minimize_scalar(
            lambda b: -_effective_snr(b, n, t, rho, family),
            bounds=(1e-9, 1.0 - 1e-9), method="bounded",
            options={"xatol": 1e-12},
        )
        return float(res.x)
    c_plus_d = 1.0 + n * rt / (t - n)
    return float((np.sqrt(c * c_plus_d) - c) / d)


def optimal_split_canonical(n: int, t: int, rho: float) -> PowerSplit:
    """Rate-maximizing split under canonical training."""
    return PowerSplit.from_beta(_optimal_beta(n, t, rho, "canonical"), n, t, rho)


def optimal_split_orthogonal(n: int, t: int, rho: float) -> PowerSplit:
    """Rate-maximizing split under DFT/Hadamard training."""
    return PowerSplit.from_beta(_optimal_beta(n, t, rho, "orthogonal"), n, t, rho)


def _simulate_rate(family: str, cfg: RateConfig, split: PowerSplit,
                   rng: np.random.Generator) -> RateEstimate:
    _check_block(cfg.n, cfg.t)
    n, trials = cfg.n, cfg.trials
    plan = make_training_plan("canonical" if family == "canonical" else "dft", n)
    sys_cfg = SystemConfig(m_t=1, m_r=1, n=n, rho=split.rho_tau, direct_path=False)
    z = stack_training(plan, sys_cfg)
    h = complex_normal(rng, (n, trials))
    w = complex_normal(rng, (n, trials))
    y = np.sqrt(split.rho_tau) * z @ h + w
    h_hat = mmse_closed_form(plan, z, y, split.rho_tau)
    gain = np.abs(h_hat).sum(axis=0) ** 2
    if family == "canonical":
        denom = 1.0 + n * split.rho_d / (1.0 + split.rho_tau)
    else:
        denom = 1.0 + n * split.rho_d / (1.0 + n * split.rho_tau)
    per_trial = np.log2(1.0 + split.rho_d * gain / denom)
    prefactor = 1.0 - n / cfg.t
    value = prefactor * float(per_trial.mean())
    stderr = prefactor * float(per_trial.std(ddof=1)) / np.sqrt(trials)
    return RateEstimate(value=value, std_error=stderr, trials=trials)


def rate_canonical(cfg: RateConfig, split: PowerSplit,
                   rng: np.random.Generator) -> RateEstimate:
    """Monte Carlo rate under canonical training and MMSE estimation."""
    return _simulate_rate("canonical", cfg, split, rng)


def rate_orthogonal(cfg: RateConfig, split: PowerSplit,
                    rng: np.random.Generator) -> RateEstimate:
    """Monte Carlo rate under orthogonal (DFT) training and MMSE estimation."""
    return _simulate_rate("orthogonal", cfg, split, rng)


def optimal_ris_size(n_max: int, t: int, rho: float, family: str,
                     trials: int = 10000, seed: int = 0) -> int:
    """Surface size in {1..n_max} maximizing the optimally-split rate.

    Each candidate size runs on its own deterministic stream derived
    from ``seed``; ties resolve to the smallest size.
    """
    if not 1 <= n_max < t:
        raise ValueError(f"need 1 <= n_max < T, got n_max={n_max}, T={t}")
    if family == "canonical":
        split_fn, rate_fn = optimal_split_canonical, rate_canonical
    elif family == "orthogonal":
        split_fn, rate_fn = optimal_split_orthogonal, rate_orthogonal
    else:
        raise UnsupportedFamilyError(f"unknown rate family {family!r}")
    best_rate, best_n = -np.inf, None
    for n in range(1, n_max + 1):
        split = split_fn(n, t, rho)
        rng = np.random.default_rng(np.random.SeedSequence([seed, n]))
        est = rate_fn(RateConfig(n=n, t=t, rho=rho, trials=trials), split, rng)
        if est.value > best_rate:
            best_rate, best_n = est.value, n
    return best_n
