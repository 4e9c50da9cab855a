import math

import pytest

LN3 = math.log(3.0)


@pytest.fixture
def two_arm():
    from privthresh import make_instance
    return make_instance([0.2, 0.8], 0.5, 0.0)


def replay_bits(inst, eps, seed, arms):
    """Rebuild the privatized bits of a recorded trajectory from its seed.

    Each pull consumes two uniforms: one for the Bernoulli reward, one for the
    released bit with P(1) = (r e^eps + 1 - r) / (1 + e^eps).
    """
    import numpy as np
    gen = np.random.Generator(np.random.Philox(key=seed))
    u = gen.random(2 * len(arms))
    bits = []
    for t, k in enumerate(arms):
        r = 1.0 if u[2 * t] < inst.means[k] else 0.0
        p = (r * math.exp(eps) + 1 - r) / (1 + math.exp(eps))
        bits.append(1 if u[2 * t + 1] < p else 0)
    return bits
