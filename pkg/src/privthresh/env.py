"""Bandit instances, their privatized view, complexity terms and hard-instance families."""
from __future__ import annotations

import bisect
import enum
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .privacy import check_eps, contraction, private_mean
from .streams import as_stream

MEAN_TOL = 1e-12


class Setting(str, enum.Enum):
    FIXED_BUDGET = "fb"
    FIXED_CONFIDENCE = "fc"


def _setting(setting) -> Setting:
    if isinstance(setting, Setting):
        return setting
    aliases = {"fb": Setting.FIXED_BUDGET, "fixed_budget": Setting.FIXED_BUDGET,
               "fc": Setting.FIXED_CONFIDENCE, "fixed_confidence": Setting.FIXED_CONFIDENCE}
    try:
        return aliases[str(setting).lower()]
    except KeyError:
        raise ValueError(f"unknown setting {setting!r}") from None


@dataclass(frozen=True)
class DiscreteLaw:
    """Finite reward law on [0, 1]; sampled by inverse CDF from one uniform."""

    support: tuple[float, ...]
    probs: tuple[float, ...]
    _cdf: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        support = tuple(float(x) for x in self.support)
        probs = tuple(float(p) for p in self.probs)
        if not support or len(support) != len(probs):
            raise ValueError("support and probs must be non-empty and of equal length")
        if any(not 0.0 <= x <= 1.0 for x in support):
            raise ValueError("reward support must lie in [0, 1]")
        if any(p < 0.0 for p in probs) or abs(math.fsum(probs) - 1.0) > 1e-9:
            raise ValueError("probs must be non-negative and sum to 1")
        cdf, acc = [], 0.0
        for p in probs:
            acc += p
            cdf.append(acc)
        cdf[-1] = 1.0
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "_cdf", tuple(cdf))

    @property
    def mean(self) -> float:
        return math.fsum(x * p for x, p in zip(self.support, self.probs))

    def sample(self, u: float) -> float:
        return self.support[bisect.bisect_right(self._cdf, u)]

    def to_dict(self) -> dict:
        return {"support": list(self.support), "probs": list(self.probs)}


@dataclass(frozen=True)
class Instance:
    """Ground-truth environment. ``dists[i] is None`` means Bernoulli(means[i])."""

    means: tuple[float, ...]
    threshold: float
    tolerance: float = 0.0
    dists: tuple[Optional[DiscreteLaw], ...] = ()

    @property
    def n_arms(self) -> int:
        return len(self.means)

    @property
    def is_bernoulli(self) -> bool:
        return all(d is None for d in self.dists)

    def to_dict(self) -> dict:
        d = {"means": list(self.means), "threshold": self.threshold, "tolerance": self.tolerance}
        if not self.is_bernoulli:
            d["dists"] = [None if law is None else law.to_dict() for law in self.dists]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Instance":
        for key in ("means", "threshold"):
            if key not in d:
                raise ValueError(f"instance is missing field '{key}'")
        dists = d.get("dists")
        if dists is not None:
            dists = [None if law is None else DiscreteLaw(law["support"], law["probs"]) for law in dists]
        return make_instance(d["means"], d["threshold"], d.get("tolerance", 0.0), dists)

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        return cls.from_dict(json.loads(text))


def make_instance(means: Sequence[float], threshold: float, tolerance: float = 0.0,
                  dists: Optional[Sequence[Optional[DiscreteLaw]]] = None) -> Instance:
    means = tuple(float(m) for m in means)
    if not means:
        raise ValueError("an instance needs at least one arm")
    for i, m in enumerate(means):
        if not 0.0 <= m <= 1.0:
            raise ValueError(f"mean of arm {i} must lie in [0, 1], got {m}")
    threshold = float(threshold)
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    tolerance = float(tolerance)
    if not tolerance >= 0.0:
        raise ValueError(f"tolerance must be >= 0, got {tolerance}")
    if dists is None:
        dists = (None,) * len(means)
    else:
        dists = tuple(dists)
        if len(dists) != len(means):
            raise ValueError("dists must have one entry per arm")
        for i, (m, law) in enumerate(zip(means, dists)):
            if law is not None and abs(law.mean - m) > MEAN_TOL:
                raise ValueError(f"law of arm {i} has mean {law.mean}, expected {m}")
    return Instance(means, threshold, tolerance, dists)


@dataclass(frozen=True)
class GapProfile:
    setting: Setting
    gaps: tuple[float, ...]
    h: float


def _complexity(gaps: Sequence[float]) -> float:
    sq = [g * g for g in gaps]
    if any(q == 0.0 for q in sq):
        return math.inf
    return math.fsum(1.0 / q for q in sq)


def gap_profile(inst: Instance, setting=Setting.FIXED_BUDGET) -> GapProfile:
    setting = _setting(setting)
    zeta = inst.tolerance if setting is Setting.FIXED_BUDGET else 0.0
    gaps = tuple(abs(inst.threshold - m) + zeta for m in inst.means)
    return GapProfile(setting, gaps, _complexity(gaps))


@dataclass(frozen=True)
class PrivatizedView:
    eps: float
    mu_eps: tuple[float, ...]
    tau_eps: float
    zeta_eps: float
    gaps_eps: tuple[float, ...]
    h_eps: float
    setting: Setting = Setting.FIXED_BUDGET


def privatized_view(inst: Instance, eps: float, setting=Setting.FIXED_BUDGET) -> PrivatizedView:
    """Means, threshold and tolerance mapped through the mechanism's mean map.

    In the fixed-confidence setting the tolerance is ignored.
    """
    eps = check_eps(eps)
    setting = _setting(setting)
    c = contraction(eps)
    mu_eps = tuple(private_mean(m, eps) for m in inst.means)
    tau_eps = private_mean(inst.threshold, eps)
    zeta_eps = c * inst.tolerance if setting is Setting.FIXED_BUDGET else 0.0
    gaps = tuple(abs(tau_eps - m) + zeta_eps for m in mu_eps)
    return PrivatizedView(eps, mu_eps, tau_eps, zeta_eps, gaps, _complexity(gaps), setting)


def fb_hard_env(inst: Instance, flip: Optional[int] = None) -> Instance:
    """Bernoulli environment of the fixed-budget lower bound.

    Every arm sits half its gap plus the tolerance above the threshold, except
    arm ``flip`` which is mirrored below. ``flip=None`` is the unflipped base.
    """
    tau, zeta = inst.threshold, inst.tolerance
    if flip is not None and not 0 <= flip < inst.n_arms:
        raise IndexError(f"arm {flip} out of range for {inst.n_arms} arms")
    means = []
    for j, m in enumerate(inst.means):
        half = abs(m - tau) / 2.0
        new = tau - half - zeta if j == flip else tau + half + zeta
        if not 0.0 <= new <= 1.0:
            raise ValueError(f"hard-instance mean of arm {j} leaves [0, 1]: {new}")
        means.append(new)
    return make_instance(means, tau, zeta)


def clip01(x: float) -> float:
    return min(1.0, max(0.0, x))


def fc_flip_env(inst: Instance, j: int) -> Instance:
    """Mirror arm ``j`` across the threshold, clipped to [0, 1]; other arms untouched."""
    if not 0 <= j < inst.n_arms:
        raise IndexError(f"arm {j} out of range for {inst.n_arms} arms")
    tau = inst.threshold
    m = inst.means[j]
    flipped = clip01(tau + abs(tau - m)) if m < tau else clip01(tau - abs(tau - m))
    means = list(inst.means)
    means[j] = flipped
    return make_instance(means, tau, inst.tolerance)


def sample_reward(inst: Instance, arm: int, rng) -> float:
    """One raw reward; consumes exactly one uniform."""
    if not 0 <= arm < inst.n_arms:
        raise IndexError(f"arm {arm} out of range for {inst.n_arms} arms")
    u = as_stream(rng).uniform()
    law = inst.dists[arm]
    if law is None:
        return 1.0 if u < inst.means[arm] else 0.0
    return law.sample(u)
