"""Fixed-confidence thresholding: confidence-interval elimination on privatized responses."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .env import Instance, Setting, privatized_view
from .privacy import check_eps
from .streams import as_stream

DEFAULT_MAX_ROUNDS = 10_000_000


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in the open interval (0, 1), got {delta}")
    return delta


def radius(K: int, t: int, delta: float, pulls_i: int, multiplier: float = 1.0) -> float:
    """multiplier * sqrt(log(4 K t^3 / delta) / (8 T_i))."""
    if K < 1 or t < 1 or pulls_i < 1:
        raise ValueError("K, t and pulls_i must all be >= 1")
    delta = _check_delta(delta)
    if multiplier <= 0.0:
        raise ValueError("radius multiplier must be positive")
    return multiplier * math.sqrt(math.log(4.0 * K * float(t) ** 3 / delta) / (8.0 * pulls_i))


@dataclass
class FCState:
    pulls: list[int]
    sum_bits: list[int]

    @property
    def t(self) -> int:
        return sum(self.pulls)

    @property
    def mu_hat(self) -> list[float]:
        return [s / n for s, n in zip(self.sum_bits, self.pulls)]


@dataclass(frozen=True)
class FCResult:
    selected: frozenset[int]
    stopping_time: int
    stopped: bool
    pulls_final: tuple[int, ...]
    mu_hat_final: tuple[float, ...]
    arms_pulled: Optional[tuple[int, ...]] = field(default=None, compare=False)


def run_fixed_confidence(inst: Instance, eps: float, delta: float, rng,
                         max_rounds: int = DEFAULT_MAX_ROUNDS,
                         radius_multiplier: float = 1.0,
                         record: bool = False) -> FCResult:
    """Pull until no arm's confidence interval straddles tau_eps.

    ``t`` is the total number of pulls and enters the radius. When the cap
    ``max_rounds`` is reached without the stopping rule holding, the current
    empirical set is returned with ``stopped=False``.
    """
    eps = check_eps(eps)
    delta = _check_delta(delta)
    K = inst.n_arms
    if max_rounds < K:
        raise ValueError(f"max_rounds={max_rounds} is smaller than K={K}")
    if radius_multiplier <= 0.0:
        raise ValueError("radius multiplier must be positive")
    tau_eps = privatized_view(inst, eps, Setting.FIXED_CONFIDENCE).tau_eps
    s = 1.0 / (1.0 + math.exp(-eps))
    uniform = as_stream(rng).uniform
    means, dists = inst.means, inst.dists

    pulls = [0] * K
    sums = [0] * K
    arms = [] if record else None

    def pull(k: int) -> None:
        u = uniform()
        law = dists[k]
        r = (1.0 if u < means[k] else 0.0) if law is None else law.sample(u)
        p = r * s + (1.0 - r) * (1.0 - s)
        pulls[k] += 1
        if uniform() < p:
            sums[k] += 1
        if arms is not None:
            arms.append(k)

    for k in range(K):
        pull(k)
    t = K
    log, sqrt = math.log, math.sqrt
    while True:
        # same arithmetic as radius() so the stopping rule can be re-checked exactly
        L = log(4.0 * K * float(t) ** 3 / delta)
        best, best_rad = -1, -1.0
        for i in range(K):
            mu = sums[i] / pulls[i]
            rad = radius_multiplier * sqrt(L / (8.0 * pulls[i]))
            if mu >= tau_eps:
                flips = not (mu - rad >= tau_eps)
            else:
                flips = mu + rad >= tau_eps
            if flips and rad > best_rad:
                best, best_rad = i, rad
        if best < 0 or t >= max_rounds:
            break
        pull(best)
        t += 1

    mu_hat = tuple(sums[i] / pulls[i] for i in range(K))
    return FCResult(
        selected=frozenset(i for i in range(K) if mu_hat[i] >= tau_eps),
        stopping_time=t,
        stopped=best < 0,
        pulls_final=tuple(pulls),
        mu_hat_final=mu_hat,
        arms_pulled=tuple(arms) if arms is not None else None,
    )


def fc_correct(result: FCResult, inst: Instance) -> bool:
    """True iff the returned set is exactly {i : mu_i >= tau}."""
    if len(result.pulls_final) != inst.n_arms:
        raise ValueError("result and instance disagree on the number of arms")
    truth = frozenset(i for i, m in enumerate(inst.means) if m >= inst.threshold)
    return result.selected == truth
