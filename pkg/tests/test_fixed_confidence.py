import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privthresh.env import make_instance, privatized_view
from privthresh.fixed_confidence import FCResult, fc_correct, radius, run_fixed_confidence
from privthresh.harness import derive_stream
from privthresh.streams import UniformStream

from conftest import replay_bits

LN3 = math.log(3.0)


def test_radius_examples():
    assert radius(2, 8, 0.1, 4) == pytest.approx(math.sqrt(math.log(40960) / 32), rel=1e-14)
    assert radius(2, 8, 0.1, 4) == pytest.approx(0.57610, abs=5e-6)
    assert radius(1, 1, 0.5, 1) == pytest.approx(0.50983, abs=5e-6)


@given(st.integers(1, 20), st.integers(1, 10 ** 6), st.floats(1e-6, 0.999), st.integers(1, 10 ** 5))
def test_radius_halving_law(K, t, delta, n):
    assert radius(K, t, delta, 2 * n) == pytest.approx(radius(K, t, delta, n) / math.sqrt(2), rel=1e-12)


def test_radius_multiplier_scales():
    assert radius(3, 10, 0.05, 7, multiplier=2.0) == pytest.approx(2 * radius(3, 10, 0.05, 7))


@pytest.mark.parametrize("args", [(0, 1, 0.1, 1), (1, 0, 0.1, 1), (1, 1, 1.0, 1), (1, 1, 0.0, 1), (1, 1, 0.1, 0)])
def test_radius_domain(args):
    with pytest.raises(ValueError):
        radius(*args)


def test_rejects_bad_parameters(two_arm):
    s = UniformStream.from_seed(0)
    with pytest.raises(ValueError):
        run_fixed_confidence(two_arm, LN3, 1.0, s)
    with pytest.raises(ValueError):
        run_fixed_confidence(two_arm, -1.0, 0.1, s)
    with pytest.raises(ValueError):
        run_fixed_confidence(two_arm, LN3, 0.1, s, max_rounds=1)


def _check_trajectory(inst, eps, delta, seed, res, multiplier=1.0):
    """Re-derive every decision of a recorded run from its bits."""
    K = inst.n_arms
    bits = replay_bits(inst, eps, seed, res.arms_pulled)
    tau_eps = privatized_view(inst, eps, "fc").tau_eps
    n, s = [0] * K, [0] * K
    for k, b in zip(res.arms_pulled[:K], bits[:K]):
        n[k] += 1
        s[k] += b
    assert list(res.arms_pulled[:K]) == list(range(K))
    t = K
    for k, b in zip(res.arms_pulled[K:], bits[K:]):
        mu = [s[i] / n[i] for i in range(K)]
        rad = [radius(K, t, delta, n[i], multiplier) for i in range(K)]
        S = {i for i in range(K) if mu[i] >= tau_eps}
        S_tilde = {i for i in range(K) if (mu[i] - rad[i] if i in S else mu[i] + rad[i]) >= tau_eps}
        cand = S ^ S_tilde
        assert k in cand
        # argmax radius among candidates == argmin pulls, lowest index on ties
        assert k == min(cand, key=lambda i: (-rad[i], i))
        assert k == min(cand, key=lambda i: (n[i], i))
        n[k] += 1
        s[k] += b
        t += 1
        assert sum(n) == t
    assert tuple(n) == res.pulls_final and t == res.stopping_time
    if res.stopped:
        for i in range(K):
            mu_i = s[i] / n[i]
            assert abs(mu_i - tau_eps) >= radius(K, t, delta, n[i], multiplier)
    return tau_eps


@pytest.mark.parametrize("seed", range(8))
def test_trajectory_invariants(seed):
    inst = make_instance([0.2, 0.45, 0.7, 0.9], 0.5)
    res = run_fixed_confidence(inst, 1.5, 0.1, UniformStream.from_seed(seed), record=True)
    assert res.stopped
    _check_trajectory(inst, 1.5, 0.1, seed, res)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=4), st.floats(0.05, 0.95),
       st.floats(0.5, 4), st.floats(0.01, 0.5), st.integers(0, 2 ** 32), st.sampled_from([1.0, 2.0]))
def test_trajectory_invariants_random(means, tau, eps, delta, seed, mult):
    inst = make_instance(means, tau)
    res = run_fixed_confidence(inst, eps, delta, UniformStream.from_seed(seed), max_rounds=3000,
                               radius_multiplier=mult, record=True)
    _check_trajectory(inst, eps, delta, seed, res, mult)
    if not res.stopped:
        assert res.stopping_time == 3000


def test_capped_run_returns_current_set():
    inst = make_instance([0.5, 0.5], 0.5)
    res = run_fixed_confidence(inst, LN3, 0.1, UniformStream.from_seed(0), max_rounds=500)
    assert not res.stopped and res.stopping_time == 500
    tau_eps = 0.5
    assert res.selected == {i for i in range(2) if res.mu_hat_final[i] >= tau_eps}


def test_single_zero_gap_arm_stops_at_four_with_prob_one_eighth():
    # K=1: rad at t=4 is sqrt(log(2560)/32) < 0.5, so four identical bits stop the run;
    # at t=1,2,3 the radius exceeds the largest possible deviation of 0.5
    assert radius(1, 3, 0.1, 3) > 0.5 > radius(1, 4, 0.1, 4)
    inst = make_instance([0.5], 0.5)
    n = 4000
    early = sum(run_fixed_confidence(inst, LN3, 0.1, derive_stream(99, i), max_rounds=4).stopped
                for i in range(n))
    assert abs(early / n - 0.125) <= 3 * math.sqrt(0.125 * 0.875 / n)


def test_correct_on_easy_instance(two_arm):
    n = 300
    ok = sum(fc_correct(run_fixed_confidence(two_arm, LN3, 0.1, derive_stream(1, i)), two_arm)
             for i in range(n))
    assert ok / n >= 0.9 - 3 * math.sqrt(0.09 / n)


def test_less_privacy_stops_sooner(two_arm):
    lo, hi = [], []
    for i in range(500):
        lo.append(run_fixed_confidence(two_arm, LN3, 0.1, derive_stream(3, i)).stopping_time)
        hi.append(run_fixed_confidence(two_arm, 20.0, 0.1, derive_stream(3, i)).stopping_time)
    assert np.median(hi) < np.median(lo)


def _fc(selected, k):
    return FCResult(frozenset(selected), k, True, (1,) * k, (0.0,) * k)


def test_fc_correct_examples(two_arm):
    assert fc_correct(_fc({1}, 2), two_arm)
    assert not fc_correct(_fc({0, 1}, 2), two_arm)
    assert fc_correct(_fc({0}, 1), make_instance([0.5], 0.5))
    with pytest.raises(ValueError):
        fc_correct(_fc({0}, 3), two_arm)
