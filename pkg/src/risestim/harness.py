"""Reproducible experiment runner behind the command-line interface.

Every experiment expands into an ordered grid of independent points, one
CSV row (or a fixed few) per point.  Point ``i`` draws all randomness
from streams keyed on ``(seed, i)`` or ``(seed, i, trial)``, never from
shared state, so results are byte-identical no matter how many worker
threads run the grid.  ``RISESTIM_THREADS`` caps the thread pool.
"""

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import multiuser as mu
from . import ofdm as ofdm_mod
from . import sparse as sparse_mod
from .channels import WidebandConfig, complex_normal, gen_narrowband_set, gen_wideband
from .exceptions import ConfigValidationError
from .linear_estimators import ls_closed_form, mmse_closed_form
from .model import SystemConfig, build_cascaded
from .spectral_efficiency import (
    PowerSplit,
    RateConfig,
    optimal_ris_size,
    optimal_split_canonical,
    optimal_split_orthogonal,
    rate_canonical,
    rate_orthogonal,
)
from .training import make_training_plan, stack_training

CSV_COLUMNS = ("experiment", "scheme", "snr_db", "N", "T", "J",
               "metric_name", "metric_value", "std_error", "trials", "seed")

EXPERIMENTS = ("narrowband-mse", "spectral-efficiency", "optimal-size",
               "sparse", "ofdm", "multiuser", "opportunistic")

_DEFAULT_PARAMS = {
    "narrowband-mse": {
        "m_t": 2, "m_r": 2, "n": 16,
        "snr_db": [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
        "families": ["canonical", "dft"],
        "estimators": ["ls", "mmse"],
    },
    "spectral-efficiency": {
        "n": 32, "t": 150,
        "snr_db": [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
    },
    "optimal-size": {
        "n_max": 64, "t": 150,
        "snr_db": [-10.0, 0.0, 10.0, 20.0, 30.0],
        "families": ["canonical", "orthogonal"],
    },
    "sparse": {
        "m_t": 2, "m_r": 4, "n": 16, "grid_g": 8, "grid_h": 8,
        "l_paths": 1, "p_paths": 1, "budget_scale": 4.0,
        "snr_db": [20.0],
        "algorithms": ["omp", "sp"],
        "budget_factors": [0.5, 0.75, 1.0, 1.5],
    },
    "ofdm": {
        "m_c": 64, "taps": 4, "n": 8, "pilot_spacing": 4,
        "snr_db": [0.0, 10.0, 20.0, 30.0],
        "schemes": ["full", "interp"],
    },
    "multiuser": {
        "k_users": 3, "n": 8, "m_rx": 4,
        "snr_db": [0.0, 10.0, 20.0, 30.0],
    },
    "opportunistic": {
        "n": 16, "snr_db": [10.0], "q_list": [1, 2, 4, 8, 16],
    },
}

_DEFAULT_TRIALS = {
    "narrowband-mse": 500,
    "spectral-efficiency": 2000,
    "optimal-size": 1000,
    "sparse": 200,
    "ofdm": 200,
    "multiuser": 100,
    "opportunistic": 2000,
}


@dataclass
class ExperimentRecord:
    """One CSV row."""

    experiment: str
    scheme: str
    snr_db: float | None
    n: int | None
    t: int | None
    j: int | None
    metric_name: str
    metric_value: float
    std_error: float | None
    trials: int
    seed: int

    def as_row(self) -> list:
        return [self.experiment, self.scheme, _fmt(self.snr_db), _fmt(self.n),
                _fmt(self.t), _fmt(self.j), self.metric_name,
                _fmt(self.metric_value), _fmt(self.std_error),
                _fmt(self.trials), _fmt(self.seed)]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.9g" % float(value)


@dataclass
class ExperimentConfig:
    """Resolved run description: experiment, seed, trial count, parameters."""

    experiment: str
    seed: int = 0
    trials: int | None = None
    out_dir: str = "results"
    params: dict = field(default_factory=dict)

    def resolved_trials(self) -> int:
        if self.trials is not None:
            return self.trials
        return _DEFAULT_TRIALS[self.experiment]

    def resolved_params(self) -> dict:
        merged = dict(_DEFAULT_PARAMS[self.experiment])
        merged.update(self.params)
        return merged

    def validate(self):
        """Collect every problem at once; raise with the full list."""
        errors = []
        if self.experiment not in EXPERIMENTS:
            raise ConfigValidationError([
                f"unknown experiment {self.experiment!r}; expected one of "
                + ", ".join(EXPERIMENTS)
            ])
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            errors.append(f"seed must be an integer in [0, 2^64), got {self.seed!r}")
        if self.trials is not None and (
                not isinstance(self.trials, int) or self.trials < 1):
            errors.append(f"trials must be a positive integer, got {self.trials!r}")
        known = set(_DEFAULT_PARAMS[self.experiment])
        unknown = sorted(set(self.params) - known)
        if unknown:
            errors.append(
                f"unknown parameter(s) for {self.experiment}: "
                + ", ".join(unknown))
        merged = self.resolved_params()
        errors.extend(_validate_params(self.experiment, merged))
        if errors:
            raise ConfigValidationError(errors)


def _check_pos_int(errors, params, *names):
    for name in names:
        val = params.get(name)
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            errors.append(f"{name} must be a positive integer, got {val!r}")


def _check_snr_list(errors, params, key="snr_db"):
    vals = params.get(key)
    if (not isinstance(vals, (list, tuple)) or len(vals) == 0
            or not all(isinstance(v, (int, float)) and math.isfinite(v)
                       for v in vals)):
        errors.append(f"{key} must be a nonempty list of finite numbers")
        return False
    return True


def _check_choice_list(errors, params, key, allowed):
    vals = params.get(key)
    if (not isinstance(vals, (list, tuple)) or len(vals) == 0
            or not set(vals) <= set(allowed)):
        errors.append(
            f"{key} must be a nonempty subset of {sorted(allowed)}, got {vals!r}")
        return False
    return True


def _validate_params(experiment: str, p: dict) -> list:
    errors: list = []
    _check_snr_list(errors, p)
    if experiment == "narrowband-mse":
        _check_pos_int(errors, p, "m_t", "m_r", "n")
        _check_choice_list(errors, p, "families", ("canonical", "dft", "hadamard"))
        _check_choice_list(errors, p, "estimators", ("ls", "mmse"))
        fams = p.get("families") or ()
        n = p.get("n")
        if "hadamard" in fams and isinstance(n, int) and (n & (n - 1)) != 0:
            errors.append(f"hadamard training needs a power-of-2 n, got {n}")
    elif experiment == "spectral-efficiency":
        _check_pos_int(errors, p, "n", "t")
        if isinstance(p.get("n"), int) and isinstance(p.get("t"), int) \
                and not p["n"] < p["t"]:
            errors.append(f"need n < t, got n={p['n']}, t={p['t']}")
    elif experiment == "optimal-size":
        _check_pos_int(errors, p, "n_max", "t")
        _check_choice_list(errors, p, "families", ("canonical", "orthogonal"))
        if isinstance(p.get("n_max"), int) and isinstance(p.get("t"), int) \
                and not p["n_max"] < p["t"]:
            errors.append(f"need n_max < t, got n_max={p['n_max']}, t={p['t']}")
    elif experiment == "sparse":
        _check_pos_int(errors, p, "m_t", "m_r", "n", "grid_g", "grid_h",
                       "l_paths", "p_paths")
        _check_choice_list(errors, p, "algorithms", ("omp", "sp"))
        factors = p.get("budget_factors")
        if (not isinstance(factors, (list, tuple)) or len(factors) == 0
                or not all(isinstance(f, (int, float)) and f > 0 for f in factors)):
            errors.append("budget_factors must be a nonempty list of positive numbers")
        scale = p.get("budget_scale")
        if not isinstance(scale, (int, float)) or not scale > 0:
            errors.append(f"budget_scale must be positive, got {scale!r}")
        for side, grid in (("l_paths", "grid_g"), ("p_paths", "grid_h")):
            if isinstance(p.get(side), int) and isinstance(p.get(grid), int) \
                    and p[side] > p[grid]:
                errors.append(f"{side} cannot exceed {grid}")
    elif experiment == "ofdm":
        _check_pos_int(errors, p, "m_c", "taps", "n", "pilot_spacing")
        _check_choice_list(errors, p, "schemes", ("full", "interp"))
        m_c, spacing, taps = p.get("m_c"), p.get("pilot_spacing"), p.get("taps")
        if all(isinstance(v, int) for v in (m_c, spacing, taps)):
            if m_c % spacing != 0:
                errors.append(f"pilot_spacing must divide m_c, got {spacing} and {m_c}")
            elif m_c // spacing < 2 * taps - 1:
                errors.append(
                    f"{m_c // spacing} pilot tones cannot identify "
                    f"{2 * taps - 1} cascade taps")
            if taps > m_c:
                errors.append(f"taps must not exceed m_c, got {taps} > {m_c}")
    elif experiment == "multiuser":
        _check_pos_int(errors, p, "k_users", "n", "m_rx")
    elif experiment == "opportunistic":
        _check_pos_int(errors, p, "n")
        q_list = p.get("q_list")
        if (not isinstance(q_list, (list, tuple)) or len(q_list) == 0
                or not all(isinstance(q, int) and not isinstance(q, bool)
                           and q >= 1 for q in q_list)):
            errors.append("q_list must be a nonempty list of positive integers")
    return errors


def _grid_rng(seed: int, grid_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, grid_index]))


def _trial_rng(seed: int, grid_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, grid_index, trial]))


def _mean_stderr(values: np.ndarray):
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    if values.size < 2:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / np.sqrt(values.size))


# --- per-experiment grid builders ------------------------------------------
# Each builder returns a list of zero-argument callables; callable i must
# derive all randomness from (seed, i[, trial]) and return ExperimentRecords.


def _narrowband_mse_tasks(cfg: ExperimentConfig):
    p = cfg.resolved_params()
    trials, seed = cfg.resolved_trials(), cfg.seed
    m_t, m_r, n = p["m_t"], p["m_r"], p["n"]
    specs = [(est, fam, snr) for est in p["estimators"]
             for fam in p["families"] for snr in p["snr_db"]]

    def run_point(idx, est, fam, snr):
        rho = 10.0 ** (snr / 10.0)
        rng = _grid_rng(seed, idx)
        plan = make_training_plan(fam, n, m_t=m_t, direct_path=False)
        sys_cfg = SystemConfig(m_t=m_t, m_r=m_r, n=n, rho=rho, direct_path=False)
        z = stack_training(plan, sys_cfg)
        dim = m_r * m_t * n
        h = np.empty((dim, trials), dtype=complex)
        for t_idx in range(trials):
            channels = gen_narrowband_set(sys_cfg, rng)
            h[:, t_idx] = build_cascaded(channels, direct_path=False).vector(False)
        w = complex_normal(rng, (z.shape[0], trials))
        y = np.sqrt(rho) * z @ h + w
        if est == "ls":
            h_hat = ls_closed_form(plan, z, y, rho)
        else:
            h_hat = mmse_closed_form(plan, z, y, rho)
        per_trial = np.mean(np.abs(h_hat - h) ** 2, axis=0)
        value, stderr = _mean_stderr(per_trial)
        return [ExperimentRecord(
            experiment=cfg.experiment, scheme=f"{est}-{fam}", snr_db=snr,
            n=n, t=None, j=plan.num_slots, metric_name="mse_per_entry",
            metric_value=value, std_error=stderr, trials=trials, seed=seed)]

    return [(lambda i=i, s=s: run_point(i, *s)) for i, s in enumerate(specs)]


def _spectral_efficiency_tasks(cfg: ExperimentConfig):
    p = cfg.resolved_params()
    trials, seed = cfg.resolved_trials(), cfg.seed
    n, t = p["n"], p["t"]
    specs = [(fam, snr, split_kind)
             for fam in ("canonical", "orthogonal")
             for snr in p["snr_db"]
             for split_kind in ("equal", "optimal")]

    def run_point(idx, fam, snr, split_kind):
        rho = 10.0 ** (snr / 10.0)
        if split_kind == "equal":
            split = PowerSplit.equal_power(n, t, rho)
        elif fam == "canonical":
            split = optimal_split_canonical(n, t, rho)
        else:
            split = optimal_split_orthogonal(n, t, rho)
        rate_fn = rate_canonical if fam == "canonical" else rate_orthogonal
        est = rate_fn(RateConfig(n=n, t=t, rho=rho, trials=trials),
                      split, _grid_rng(seed, idx))
        return [ExperimentRecord(
            experiment=cfg.experiment, scheme=fam, snr_db=snr, n=n, t=t, j=n,
            metric_name=f"rate_{split_kind}", metric_value=est.value,
            std_error=est.std_error, trials=trials, seed=seed)]

    return [(lambda i=i, s=s: run_point(i, *s)) for i, s in enumerate(specs)]


def _optimal_size_tasks(cfg: ExperimentConfig):
    p = cfg.resolved_params()
    trials, seed = cfg.resolved_trials(), cfg.seed
    n_max, t = p["n_max"], p["t"]
    specs = [(fam, snr) for fam in p["families"] for snr in p["snr_db"]]

    def run_point(idx, fam, snr):
        rho = 10.0 ** (snr / 10.0)
        best = optimal_ris_size(n_max, t, rho, fam, trials=trials, seed=seed)
        return [ExperimentRecord(
            experiment=cfg.experiment, scheme=fam, snr_db=snr, n=None, t=t,
            j=None, metric_name="optimal_n", metric_value=float(best),
            std_error=None, trials=trials, seed=seed)]

    return [(lambda i=i, s=s: run_point(i, *s)) for i, s in enumerate(specs)]


def _sparse_tasks(cfg: ExperimentConfig):
    p = cfg.resolved_params()
    trials, seed = cfg.resolved_trials(), cfg.seed
    problem = sparse_mod.make_sparse_problem(
        p["m_t"], p["m_r"], p["n"], p["grid_g"], p["grid_h"])
    k = p["l_paths"] * p["p_paths"]
    specs = []
    for alg in p["algorithms"]:
        budget = sparse_mod.pilot_budget(
            alg, p["l_paths"], p["p_paths"], p["grid_g"], p["grid_h"],
            p["m_r"], c=p["budget_scale"])
        for factor in p["budget_factors"]:
            for snr in p["snr_db"]:
                specs.append((alg, max(1, math.ceil(factor * budget)), snr))

    def run_point(idx, alg, j_slots, snr):
        rho = 10.0 ** (snr / 10.0)
        pursuit = sparse_mod.omp if alg == "omp" else sparse_mod.subspace_pursuit
        hits = np.empty(trials)
        for t_idx in range(trials):
            rng = _trial_rng(seed, idx, t_idx)
            planted = sparse_mod.plant_sparse_channels(
                problem, p["l_paths"], p["p_paths"], rng)
            pilots = np.exp(2j * np.pi * rng.random((j_slots, p["m_t"])))
            pilots /= np.sqrt(p["m_t"])
            states = np.exp(2j * np.pi * rng.random((j_slots, p["n"])))
            op = sparse_mod.StackedSparseOperator(pilots, states, problem)
            y = np.sqrt(rho) * op.matvec(planted.lam)
            y = y + complex_normal(rng, y.shape[0])
            _, support = pursuit(op, y / np.sqrt(rho), k)
            hits[t_idx] = float(np.array_equal(
                sparse_mod.canonical_support(problem, support),
                sparse_mod.canonical_support(problem, planted.support)))
        value = float(hits.mean())
        stderr = float(np.sqrt(value * (1.0 - value) / trials))
        return [ExperimentRecord(
            experiment=cfg.experiment, scheme=alg, snr_db=snr, n=p["n"],
            t=None, j=j_slots, metric_name="support_recovery",
            metric_value=value, std_error=stderr, trials=trials, seed=seed)]

    return [(lambda i=i, s=s: run_point(i, *s)) for i, s in enumerate(specs)]


def _ofdm_tasks(cfg: ExperimentConfig):
    p = cfg.resolved_params()
    trials, seed = cfg.resolved_trials(), cfg.seed
    m_c, taps, n = p["m_c"], p["taps"], p["n"]
    pilot_idx = np.arange(0, m_c, p["pilot_spacing"])
    wb_cfg = WidebandConfig(m_c=m_c, taps=taps, cp_len=taps, n=n)
    specs = [(scheme, snr) for scheme in p["schemes"] for snr in p["snr_db"]]

    def run_point(idx, scheme, snr):
        rho = 10.0 ** (snr / 10.0)
        per_trial = np.empty(trials)
        for t_idx in range(trials):
            rng = _trial_rng(seed, idx, t_idx)
            wideband = gen_wideband(wb_cfg, rng)
            freq = ofdm_mod.build_freq_channel(wideband)
            frame = ofdm_mod.make_ofdm_frame(n, m_c, family="dft", rng=rng)
            received = ofdm_mod.simulate_ofdm_rx(freq, frame, rho, rng)
            if scheme == "full":
                c_hat = ofdm_mod.full_pilot_ls(received, frame, rho)
            else:
                c_hat = ofdm_mod.interp_pilot_ls(
                    received, frame, pilot_idx, rho,
                    tap_count=ofdm_mod.cascade_tap_count(taps))
            per_trial[t_idx] = float(
                np.mean(np.abs(c_hat - freq.c_matrix) ** 2))
        value, stderr = _mean_stderr(per_trial)
        return [ExperimentRecord(
            experiment=cfg.experiment, scheme=scheme, snr_db=snr, n=n,
            t=None, j=n + 1, metric_name="mse_per_entry", metric_value=value,
            std_error=stderr, trials=trials, seed=seed)]

    return [(lambda i=i, s=s: run_point(i, *s)) for i, s in enumerate(specs)]


def _multiuser_tasks(cfg: ExperimentConfig):
    p = cfg.resolved_params()
    trials, seed = cfg.resolved_trials(), cfg.seed
    k_users, n, m_rx = p["k_users"], p["n"], p["m_rx"]
    slots = mu.overhead_common_channel(k_users, n, m_rx)
    specs = list(p["snr_db"])

    def run_point(idx, snr):
        rho = 10.0 ** (snr / 10.0)
        per_trial = np.empty(trials)
        for t_idx in range(trials):
            rng = _trial_rng(seed, idx, t_idx)
            channels = mu.gen_multiuser_channels(k_users, n, m_rx, rng)
            est = mu.simulate_common_channel(channels, rho, rng, noise=True)
            truth = np.stack([channels.cascade(k) for k in range(k_users)])
            err = np.sum(np.abs(est.cascades - truth) ** 2)
            per_trial[t_idx] = float(err / np.sum(np.abs(truth) ** 2))
        value, stderr = _mean_stderr(per_trial)
        return [ExperimentRecord(
            experiment=cfg.experiment, scheme="common-channel", snr_db=snr,
            n=n, t=None, j=slots, metric_name="cascade_nmse",
            metric_value=value, std_error=stderr, trials=trials, seed=seed)]

    return [(lambda i=i, s=s: run_point(i, s)) for i, s in enumerate(specs)]


def _opportunistic_tasks(cfg: ExperimentConfig):
    p = cfg.resolved_params()
    trials, seed = cfg.resolved_trials(), cfg.seed
    n = p["n"]
    specs = [(q, snr) for q in p["q_list"] for snr in p["snr_db"]]

    def run_point(idx, q, snr):
        rho = 10.0 ** (snr / 10.0)
        rates = np.empty(trials)
        for t_idx in range(trials):
            rng = _trial_rng(seed, idx, t_idx)
            direct = complex(complex_normal(rng, 1)[0])
            cascade = complex_normal(rng, n)
            states = mu.random_phase_states(q, n, rng)
            _, rate = mu.opportunistic_select(direct, cascade, states, rho, rng)
            rates[t_idx] = rate
        value, stderr = _mean_stderr(rates)
        return [ExperimentRecord(
            experiment=cfg.experiment, scheme="opportunistic", snr_db=snr,
            n=n, t=None, j=q, metric_name="rate", metric_value=value,
            std_error=stderr, trials=trials, seed=seed)]

    return [(lambda i=i, s=s: run_point(i, *s)) for i, s in enumerate(specs)]


_TASK_BUILDERS = {
    "narrowband-mse": _narrowband_mse_tasks,
    "spectral-efficiency": _spectral_efficiency_tasks,
    "optimal-size": _optimal_size_tasks,
    "sparse": _sparse_tasks,
    "ofdm": _ofdm_tasks,
    "multiuser": _multiuser_tasks,
    "opportunistic": _opportunistic_tasks,
}


def max_workers() -> int:
    env = os.environ.get("RISESTIM_THREADS")
    if env is None:
        return min(8, os.cpu_count() or 1)
    try:
        value = int(env)
    except ValueError:
        raise ValueError(f"RISESTIM_THREADS must be an integer, got {env!r}")
    if value < 1:
        raise ValueError(f"RISESTIM_THREADS must be >= 1, got {value}")
    return value


def run(cfg: ExperimentConfig) -> list:
    """Execute one experiment; returns records in deterministic grid order."""
    cfg.validate()
    tasks = _TASK_BUILDERS[cfg.experiment](cfg)
    workers = max_workers()
    if workers == 1 or len(tasks) == 1:
        nested = [task() for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            nested = list(pool.map(lambda task: task(), tasks))
    return [record for group in nested for record in group]


def write_csv(records: list, path: str):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for record in records:
            writer.writerow(record.as_row())


def load_config(path: str, experiment: str, seed: int | None = None,
                trials: int | None = None,
                out_dir: str | None = None) -> ExperimentConfig:
    """Merge a JSON config file with command-line overrides."""
    try:
        with open(path) as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise ConfigValidationError([f"cannot read config {path}: {exc}"])
    except json.JSONDecodeError as exc:
        raise ConfigValidationError([f"config {path} is not valid JSON: {exc}"])
    if not isinstance(raw, dict):
        raise ConfigValidationError(["config root must be a JSON object"])

    allowed = {"experiment", "seed", "trials", "out", "params"}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigValidationError(
            [f"unknown config key(s): {', '.join(unknown)}"])
    if "experiment" in raw and raw["experiment"] != experiment:
        raise ConfigValidationError([
            f"config names experiment {raw['experiment']!r} but the command "
            f"line asked for {experiment!r}"
        ])
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ConfigValidationError(["params must be a JSON object"])
    cfg = ExperimentConfig(
        experiment=experiment,
        seed=seed if seed is not None else raw.get("seed", 0),
        trials=trials if trials is not None else raw.get("trials"),
        out_dir=out_dir if out_dir is not None else raw.get("out", "results"),
        params=params,
    )
    cfg.validate()
    return cfg
