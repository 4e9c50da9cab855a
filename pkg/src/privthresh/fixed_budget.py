"""Fixed-budget thresholding over privatized responses (APT-style index policy)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .env import Instance, PrivatizedView, Setting, privatized_view
from .privacy import check_eps
from .streams import as_stream


@dataclass
class FBState:
    """Pull counts and integer bit sums; empirical means are derived on demand."""

    pulls: list[int]
    sum_bits: list[int]

    @classmethod
    def empty(cls, n_arms: int) -> "FBState":
        return cls([0] * n_arms, [0] * n_arms)

    @property
    def t(self) -> int:
        return sum(self.pulls)

    @property
    def mu_hat(self) -> list[float]:
        return [s / n if n else math.nan for s, n in zip(self.sum_bits, self.pulls)]

    def update(self, k: int, bit: int) -> None:
        self.pulls[k] += 1
        self.sum_bits[k] += bit


@dataclass(frozen=True)
class FBResult:
    selected: frozenset[int]
    pulls_final: tuple[int, ...]
    mu_hat_final: tuple[float, ...]
    budget: int
    below_theorem_budget: bool
    vacuous_guarantee: bool
    arms_pulled: Optional[tuple[int, ...]] = field(default=None, compare=False)


def compute_index(state: FBState, k: int, view: PrivatizedView) -> float:
    """sqrt(T_k) * (|tau_eps - mu_hat_k| + zeta_eps)."""
    n = state.pulls[k]
    if n < 1:
        raise ValueError(f"arm {k} has not been pulled yet")
    return math.sqrt(n) * (abs(view.tau_eps - state.sum_bits[k] / n) + view.zeta_eps)


def run_fixed_budget(inst: Instance, eps: float, T: int, rng, record: bool = False) -> FBResult:
    """Spend ``T`` pulls; return arms whose private empirical mean exceeds tau_eps.

    Each arm is pulled once, then the arm with the smallest index is pulled
    (lowest arm number on ties). Every pull draws a raw reward, then one
    privatized bit; each consumes one uniform from ``rng``.
    """
    eps = check_eps(eps)
    K = inst.n_arms
    T = int(T)
    if T < K:
        raise ValueError(f"budget T={T} is smaller than the number of arms K={K}")
    view = privatized_view(inst, eps, Setting.FIXED_BUDGET)
    tau_eps, zeta_eps = view.tau_eps, view.zeta_eps
    s = 1.0 / (1.0 + math.exp(-eps))
    stream = as_stream(rng)
    uniform = stream.uniform
    means, dists = inst.means, inst.dists
    bernoulli = inst.is_bernoulli

    pulls = [0] * K
    sums = [0] * K
    arms = [] if record else None

    def pull(k: int) -> None:
        u = uniform()
        if bernoulli or dists[k] is None:
            r = 1.0 if u < means[k] else 0.0
        else:
            r = dists[k].sample(u)
        p = r * s + (1.0 - r) * (1.0 - s)
        pulls[k] += 1
        if uniform() < p:
            sums[k] += 1
        if arms is not None:
            arms.append(k)

    for k in range(K):
        pull(k)
    sqrt = math.sqrt
    for _ in range(K, T):
        best, best_val = 0, math.inf
        for k in range(K):
            n = pulls[k]
            b = sqrt(n) * (abs(tau_eps - sums[k] / n) + zeta_eps)
            if b < best_val:
                best, best_val = k, b
        pull(best)

    mu_hat = tuple(sums[k] / pulls[k] for k in range(K))
    selected = frozenset(k for k in range(K) if mu_hat[k] > tau_eps)
    return FBResult(
        selected=selected,
        pulls_final=tuple(pulls),
        mu_hat_final=mu_hat,
        budget=T,
        below_theorem_budget=T < 2 * K,
        vacuous_guarantee=eps == 0.0,
        arms_pulled=tuple(arms) if arms is not None else None,
    )


def fb_loss(result: FBResult, inst: Instance) -> int:
    """1 if a selected arm has mean <= tau - zeta or a rejected arm has mean > tau + zeta."""
    if len(result.pulls_final) != inst.n_arms:
        raise ValueError("result and instance disagree on the number of arms")
    tau, zeta = inst.threshold, inst.tolerance
    for i, m in enumerate(inst.means):
        if i in result.selected:
            if m <= tau - zeta:
                return 1
        elif m > tau + zeta:
            return 1
    return 0
