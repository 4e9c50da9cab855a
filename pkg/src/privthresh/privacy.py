"""PrivBern randomized response: a reward in [0, 1] becomes one biased bit."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .streams import as_stream


def check_eps(eps: float) -> float:
    eps = float(eps)
    if not math.isfinite(eps) or eps < 0.0:
        raise ValueError(f"eps must be finite and >= 0, got {eps}")
    return eps


def contraction(eps: float) -> float:
    """(e^eps - 1) / (e^eps + 1), written as tanh(eps/2) so large eps cannot overflow."""
    return math.tanh(0.5 * check_eps(eps))


def _check_unit(name: str, x: float) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {x}")
    return x


def bern_param(r: float, eps: float) -> float:
    """P{B(r) = 1} = (r e^eps + 1 - r) / (1 + e^eps).

    Evaluated as r*s + (1-r)*(1-s) with s = e^eps/(1+e^eps) = 1/(1+e^-eps),
    which is the same affine map but stays finite for any eps.
    """
    r = _check_unit("r", r)
    eps = check_eps(eps)
    s = 1.0 / (1.0 + math.exp(-eps))
    return r * s + (1.0 - r) * (1.0 - s)


def private_mean(mu: float, eps: float) -> float:
    """Mean of the released bit when the raw reward has mean ``mu``."""
    mu = _check_unit("mu", mu)
    return 0.5 + (2.0 * mu - 1.0) * contraction(eps) / 2.0


def privatize(r: float, eps: float, rng) -> int:
    """Release one bit for reward ``r``. Consumes exactly one uniform."""
    p = bern_param(r, eps)
    return 1 if as_stream(rng).uniform() < p else 0


@dataclass(frozen=True)
class AuditReport:
    eps: float
    grid_step: float
    max_ratio_one: float
    max_ratio_zero: float
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def audit_tolerance(eps: float) -> float:
    # absolute 1e-9, widened relatively once e^eps is large enough for rounding to exceed it
    return 1e-9 + 1e-12 * math.exp(min(eps, 700.0))


def dp_ratio_audit(eps: float, grid_step: float) -> AuditReport:
    """Worst-case likelihood ratio of the mechanism over all pairs of grid inputs.

    Exact: uses the closed-form output law, no sampling.
    """
    eps = check_eps(eps)
    if not 0.0 < grid_step <= 1.0:
        raise ValueError(f"grid_step must lie in (0, 1], got {grid_step}")
    n = int(math.floor(1.0 / grid_step + 1e-9))
    grid = [min(i * grid_step, 1.0) for i in range(n + 1)]
    if grid[-1] < 1.0:
        grid.append(1.0)
    p1 = np.array([bern_param(r, eps) for r in grid])
    p0 = np.array([1.0 - bern_param(r, eps) for r in grid])
    max_one = float((p1[:, None] / p1[None, :]).max())
    max_zero = float((p0[:, None] / p0[None, :]).max())
    bound = math.exp(eps) + audit_tolerance(eps)
    return AuditReport(eps, float(grid_step), max_one, max_zero,
                       max_one <= bound and max_zero <= bound)


def sampled_ratio_audit(eps: float, n: int, rng) -> AuditReport:
    """Smoke-test variant: empirical output frequencies at r=1 and r=0.

    Sampling noise makes ``passed`` meaningful only as a sanity check; the
    analytic audit is the real evidence.
    """
    eps = check_eps(eps)
    stream = as_stream(rng)
    ones_hi = sum(privatize(1.0, eps, stream) for _ in range(n))
    ones_lo = sum(privatize(0.0, eps, stream) for _ in range(n))
    # add-one smoothing keeps ratios finite for small n
    f1_hi, f1_lo = (ones_hi + 1) / (n + 2), (ones_lo + 1) / (n + 2)
    f0_hi, f0_lo = 1.0 - f1_hi, 1.0 - f1_lo
    r1 = max(f1_hi / f1_lo, f1_lo / f1_hi)
    r0 = max(f0_hi / f0_lo, f0_lo / f0_hi)
    # five relative standard errors of the rarest frequency
    slack = 5.0 * math.sqrt(2.0 / (n * min(f1_hi, f1_lo, f0_hi, f0_lo)))
    bound = math.exp(eps) * (1.0 + slack)
    return AuditReport(eps, 1.0, r1, r0, r1 <= bound and r0 <= bound)
