"""Seeded Monte Carlo runner and the exhaustive fixed-budget oracle."""
from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Union

import numpy as np

from . import bounds
from .env import Instance, Setting, privatized_view
from .fixed_budget import fb_loss, run_fixed_budget
from .fixed_confidence import DEFAULT_MAX_ROUNDS, fc_correct, run_fixed_confidence
from .privacy import check_eps
from .streams import UniformStream

log = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
ORACLE_MAX_T = 24


def derive_stream(master_seed: int, trial_index: int) -> UniformStream:
    """Stream for one trial: Philox-4x64 keyed by the 128-bit value (trial_index << 64) | master_seed.

    Keys are distinct for distinct (seed, index) pairs and the counter starts at
    zero, so a trial's draws never depend on how trials are scheduled.
    """
    if trial_index < 0 or trial_index > _MASK64:
        raise ValueError("trial_index must fit in 64 bits")
    key = (int(trial_index) << 64) | (int(master_seed) & _MASK64)
    return UniformStream(np.random.Generator(np.random.Philox(key=key)))


@dataclass(frozen=True)
class FixedBudgetSetting:
    T: int
    kind: str = "fb"


@dataclass(frozen=True)
class FixedConfidenceSetting:
    delta: float
    max_rounds: int = DEFAULT_MAX_ROUNDS
    radius_multiplier: float = 1.0
    kind: str = "fc"


@dataclass(frozen=True)
class ExperimentConfig:
    instance: Instance
    eps: float
    setting: Union[FixedBudgetSetting, FixedConfidenceSetting]
    n_trials: int
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        check_eps(self.eps)
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def with_axis(self, axis: str, value) -> "ExperimentConfig":
        if axis == "eps":
            return replace(self, eps=float(value))
        if axis == "T":
            return replace(self, setting=replace(self.setting, T=int(value)))
        if axis == "delta":
            return replace(self, setting=replace(self.setting, delta=float(value)))
        raise ValueError(f"unknown sweep axis {axis!r}")


@dataclass(frozen=True)
class TrialOutcome:
    outcome: int            # loss (FB) or correctness (FC)
    stopping_time: int
    stopped: bool
    pulls: tuple[int, ...]


class TrialError(RuntimeError):
    def __init__(self, trial_index: int, cause: BaseException):
        super().__init__(f"trial {trial_index} failed: {cause!r}")
        self.trial_index = trial_index


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialOutcome:
    rng = derive_stream(config.master_seed, trial_index)
    st = config.setting
    inst = config.instance
    if isinstance(st, FixedBudgetSetting):
        res = run_fixed_budget(inst, config.eps, st.T, rng)
        return TrialOutcome(fb_loss(res, inst), st.T, True, res.pulls_final)
    res = run_fixed_confidence(inst, config.eps, st.delta, rng, max_rounds=st.max_rounds,
                               radius_multiplier=st.radius_multiplier)
    return TrialOutcome(int(fc_correct(res, inst)), res.stopping_time, res.stopped, res.pulls_final)


def _run_range(config: ExperimentConfig, start: int, stop: int) -> list[TrialOutcome]:
    out = []
    for i in range(start, stop):
        try:
            out.append(run_trial(config, i))
        except Exception as exc:
            raise TrialError(i, exc) from exc
    return out


@dataclass(frozen=True)
class Report:
    setting: str
    axis_value: Optional[float]
    estimate: float
    stderr: Optional[float]      # None when n_trials == 1
    n_trials: int
    master_seed: int
    mean_pulls: tuple[float, ...]
    stopping_time_stats: Optional[dict] = None
    stopped_rate: Optional[float] = None
    bound_values: tuple = ()
    wall_time: float = field(default=0.0, compare=False)

    def to_dict(self, include_timing: bool = True) -> dict:
        d = asdict(self)
        d["bound_values"] = [b.to_dict() for b in self.bound_values]
        d["mean_pulls"] = list(self.mean_pulls)
        if not include_timing:
            d.pop("wall_time")
        return d


def binomial_stderr(p_hat: float, n: int) -> Optional[float]:
    if n < 2:
        return None
    return math.sqrt(p_hat * (1.0 - p_hat) / n)


def attached_bounds(config: ExperimentConfig) -> tuple:
    inst, eps, st = config.instance, config.eps, config.setting
    K = inst.n_arms
    out = []
    if isinstance(st, FixedBudgetSetting):
        h = privatized_view(inst, eps, Setting.FIXED_BUDGET).h_eps
        if h > 0 and st.T >= 2 * K:
            out.append(bounds.fb_upper_bound(h, K, st.T))
        if h > 0:
            out.append(bounds.fb_lower_bound(h, eps, st.T))
            out.append(bounds.fb_lower_bound(h, eps, st.T, variant="proof"))
    else:
        h = privatized_view(inst, eps, Setting.FIXED_CONFIDENCE).h_eps
        if h > 0:
            out.append(bounds.fc_upper_bound(h, K, st.delta))
            out.append(bounds.fc_lower_bound(h, eps, st.delta))
    return tuple(out)


def collect(config: ExperimentConfig) -> list[TrialOutcome]:
    """Per-trial outcomes in trial-index order, whatever the worker count."""
    n, workers = config.n_trials, config.workers
    if workers == 1 or n < 2:
        return _run_range(config, 0, n)
    n_chunks = min(n, 4 * workers)
    edges = [n * c // n_chunks for c in range(n_chunks + 1)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_run_range, [config] * n_chunks, edges[:-1], edges[1:])
        return [o for part in parts for o in part]


def summarize(config: ExperimentConfig, outcomes: list[TrialOutcome],
              axis_value: Optional[float] = None, wall_time: float = 0.0) -> Report:
    n = len(outcomes)
    K = config.instance.n_arms
    estimate = math.fsum(o.outcome for o in outcomes) / n
    mean_pulls = tuple(math.fsum(o.pulls[k] for o in outcomes) / n for k in range(K))
    stats = stopped_rate = None
    if isinstance(config.setting, FixedConfidenceSetting):
        times = np.array([o.stopping_time for o in outcomes], dtype=float)
        stats = {"mean": math.fsum(times) / n, "median": float(np.median(times)),
                 "p95": float(np.percentile(times, 95))}
        stopped_rate = sum(o.stopped for o in outcomes) / n
    return Report(
        setting=config.setting.kind,
        axis_value=axis_value,
        estimate=estimate,
        stderr=binomial_stderr(estimate, n),
        n_trials=n,
        master_seed=config.master_seed,
        mean_pulls=mean_pulls,
        stopping_time_stats=stats,
        stopped_rate=stopped_rate,
        bound_values=attached_bounds(config),
        wall_time=wall_time,
    )


def monte_carlo(config: ExperimentConfig, axis_value: Optional[float] = None) -> Report:
    t0 = time.perf_counter()
    outcomes = collect(config)
    report = summarize(config, outcomes, axis_value, time.perf_counter() - t0)
    log.debug("%s trials=%d estimate=%.6g in %.2fs", report.setting, report.n_trials,
              report.estimate, report.wall_time)
    return report


def exact_fb_oracle(inst: Instance, eps: float, T: int) -> float:
    """Exact expected fixed-budget loss by enumerating every privatized bit sequence.

    The policy is a deterministic function of the bits it sees, so walking the
    binary tree of length-T bit sequences and weighting each leaf by the
    Bernoulli likelihoods of the arms actually pulled gives E[loss] exactly.
    Written independently of the simulator on purpose.
    """
    if not inst.is_bernoulli:
        raise ValueError("the exact oracle supports Bernoulli arms only")
    eps = check_eps(eps)
    K = inst.n_arms
    if T < K:
        raise ValueError("T must be >= K")
    if T > ORACLE_MAX_T:
        raise ValueError(f"T={T} exceeds the enumeration cap of {ORACLE_MAX_T}")

    ratio = 1.0 if eps > 700 else (math.exp(eps) - 1.0) / (math.exp(eps) + 1.0)
    p_one = [0.5 + (2.0 * m - 1.0) * ratio / 2.0 for m in inst.means]
    tau, zeta = inst.threshold, inst.tolerance
    tau_eps = 0.5 + (2.0 * tau - 1.0) * ratio / 2.0
    zeta_eps = ratio * zeta

    def loss(n, s):
        for k in range(K):
            chosen = s[k] / n[k] > tau_eps
            if chosen and inst.means[k] <= tau - zeta:
                return 1
            if not chosen and inst.means[k] > tau + zeta:
                return 1
        return 0

    def next_arm(t, n, s):
        if t < K:
            return t
        return min(range(K), key=lambda k: math.sqrt(n[k]) * (abs(tau_eps - s[k] / n[k]) + zeta_eps))

    terms = []

    def walk(t, n, s, prob):
        if prob == 0.0:
            return
        if t == T:
            if loss(n, s):
                terms.append(prob)
            return
        k = next_arm(t, n, s)
        n2 = n[:]
        n2[k] += 1
        walk(t + 1, n2, s, prob * (1.0 - p_one[k]))
        s2 = s[:]
        s2[k] += 1
        walk(t + 1, n2, s2, prob * p_one[k])

    walk(0, [0] * K, [0] * K, 1.0)
    return math.fsum(terms)


def read_csv(path) -> list[dict]:
    """Parse a CSV written by the CLI back into typed rows."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({k: _parse_cell(v) for k, v in row.items()})
    return rows


def _parse_cell(v: str):
    if v == "":
        return None
    try:
        f = float(v)
    except ValueError:
        return v
    return int(f) if f.is_integer() and "." not in v and "e" not in v.lower() and "inf" not in v.lower() else f
