"""Closed-form evaluators for the upper and lower bounds, plus the KL tools behind them.

All logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

from .privacy import check_eps

LN2 = math.log(2.0)


@dataclass(frozen=True)
class BoundValue:
    formula_id: str
    value: float
    vacuous: bool
    variant: str = "theorem"
    inputs: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def clamped(self) -> float:
        """Probability bounds clipped to [0, 1]; sample-size bounds unchanged."""
        if self.formula_id in ("fb_upper", "fb_lower"):
            return min(max(self.value, 0.0), 1.0)
        return self.value

    def to_dict(self) -> dict:
        return {"formula_id": self.formula_id, "inputs": dict(self.inputs), "value": self.value,
                "vacuous": self.vacuous, "variant": self.variant, **self.extras}


def _log_eps_plus_one_sq(eps: float) -> float:
    # log((e^eps + 1)^2) without overflow
    return 2.0 * (eps + math.log1p(math.exp(-eps)))


def _log_min4_e2eps(eps: float) -> float:
    return min(math.log(4.0), 2.0 * eps)


def fb_upper_bound(h_eps: float, K: int, T: int, variant: str = "theorem") -> BoundValue:
    """exp(-T/(4 H_eps) + 2K log(log T + 1)).

    ``variant="appendix"`` gives 2(log T + 1) K exp(-4T/H_eps), the form the
    union bound over the concentration event ends on.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if T < 2 * K:
        raise ValueError(f"the fixed-budget upper bound needs T >= 2K (T={T}, K={K})")
    if not h_eps > 0.0:
        raise ValueError("H_eps must be positive")
    inputs = {"h_eps": h_eps, "K": K, "T": T}
    if math.isinf(h_eps):
        return BoundValue("fb_upper", 1.0, True, variant, inputs)
    if variant == "theorem":
        log_value = -T / (4.0 * h_eps) + 2.0 * K * math.log(math.log(T) + 1.0)
    elif variant == "appendix":
        log_value = math.log(2.0 * (math.log(T) + 1.0) * K) - 4.0 * T / h_eps
    else:
        raise ValueError(f"unknown variant {variant!r}")
    value = math.exp(min(log_value, 700.0))
    return BoundValue("fb_upper", value, value > 1.0, variant, inputs, {"log_value": log_value})


def fb_lower_bound(h_eps: float, eps: float, T: int, variant: str = "theorem") -> BoundValue:
    """(1/4) exp(-(8T/H_eps) (e^eps+1)^2 min{4, e^{2 eps}}) for the theorem form.

    ``variant="proof"`` carries the extra factor 2 in the exponent that the
    derivation's last line keeps.
    """
    eps = check_eps(eps)
    if not h_eps > 0.0:
        raise ValueError("H_eps must be positive")
    if T < 0:
        raise ValueError("T must be >= 0")
    factor = {"theorem": 1.0, "proof": 2.0}.get(variant)
    if factor is None:
        raise ValueError(f"unknown variant {variant!r}")
    inputs = {"h_eps": h_eps, "eps": eps, "T": T}
    if math.isinf(h_eps) or T == 0:
        return BoundValue("fb_lower", 0.25, False, variant, inputs, {"exponent": 0.0})
    log_rate = math.log(8.0 * T / h_eps) + _log_eps_plus_one_sq(eps) + _log_min4_e2eps(eps) + math.log(factor)
    exponent = math.exp(log_rate) if log_rate < 700.0 else math.inf
    return BoundValue("fb_lower", bretagnolle_huber(exponent), False, variant, inputs,
                      {"exponent": exponent})


def fc_upper_bound(h_eps: float, K: int, delta: float) -> BoundValue:
    """499 H~ log(4K H~/delta) + 2K with H~ = max{H_eps/36, 1}.

    The big-O form H_eps log(4K H_eps/delta) is attached as ``stylized``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if not h_eps > 0.0:
        raise ValueError("H_eps must be positive")
    inputs = {"h_eps": h_eps, "K": K, "delta": delta}
    if math.isinf(h_eps):
        return BoundValue("fc_upper", math.inf, True, "explicit", inputs,
                          {"h_tilde": math.inf, "stylized": math.inf})
    h_tilde = max(h_eps / 36.0, 1.0)
    value = 499.0 * h_tilde * math.log(4.0 * K * h_tilde / delta) + 2.0 * K
    stylized = h_eps * math.log(4.0 * K * h_eps / delta)
    return BoundValue("fc_upper", value, False, "explicit", inputs,
                      {"h_tilde": h_tilde, "stylized": stylized})


def fc_lower_bound(h_eps: float, eps: float, delta: float) -> BoundValue:
    """H_eps ((1-delta) log(1/delta) - log 2)_+ / (2 min{4, e^{2 eps}} (e^eps+1)^2)."""
    eps = check_eps(eps)
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if not h_eps > 0.0:
        raise ValueError("H_eps must be positive")
    inputs = {"h_eps": h_eps, "eps": eps, "delta": delta}
    numerator = (1.0 - delta) * math.log(1.0 / delta) - LN2
    if numerator <= 0.0:
        return BoundValue("fc_lower", 0.0, True, "theorem", inputs, {"numerator": numerator})
    if math.isinf(h_eps):
        return BoundValue("fc_lower", math.inf, False, "theorem", inputs, {"numerator": numerator})
    log_denom = LN2 + _log_min4_e2eps(eps) + _log_eps_plus_one_sq(eps)
    value = h_eps * numerator * math.exp(-log_denom)
    return BoundValue("fc_lower", value, value <= 0.0, "theorem", inputs, {"numerator": numerator})


def bernoulli_kl(p: float, q: float) -> float:
    """kl(p, q) between Bernoulli laws, with 0 log 0 = 0; +inf when q puts zero mass where p does not."""
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError("p and q must lie in [0, 1]")
    total = 0.0
    for a, b in ((p, q), (1.0 - p, 1.0 - q)):
        if a == 0.0:
            continue
        if b == 0.0:
            return math.inf
        total += a * math.log(a / b)
    return max(total, 0.0)


class SurrogateCheck(NamedTuple):
    value: float
    exact: float
    dominates_exact: bool


def kl_surrogate_check(gap: float) -> SurrogateCheck:
    """Compare the 2 gap^2 surrogate with the exact KL between Bern(1/2 -+ gap/2).

    The exact value is gap * log((1+gap)/(1-gap)), which exceeds 2 gap^2 for
    every gap in (0, 1); ``dominates_exact`` reports whether the surrogate
    is really an upper bound.
    """
    if not 0.0 <= gap < 1.0:
        raise ValueError("gap must lie in [0, 1)")
    value = 2.0 * gap * gap
    exact = gap * (math.log1p(gap) - math.log1p(-gap))
    return SurrogateCheck(value, exact, value >= exact)


def bretagnolle_huber(kl: float) -> float:
    """Lower bound (1/4) exp(-kl) on the larger of two error probabilities."""
    if kl < 0.0:
        raise ValueError("kl must be >= 0")
    return 0.25 * math.exp(-kl)


def private_kl_factor(eps: float) -> float:
    """2 min{4, e^{2 eps}} (e^eps - 1)^2: KL contraction of any eps-LDP channel."""
    eps = check_eps(eps)
    if eps > 350.0:
        return math.inf
    return 2.0 * min(4.0, math.exp(2.0 * eps)) * math.expm1(eps) ** 2
