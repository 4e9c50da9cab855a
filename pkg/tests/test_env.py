import math

import pytest
from hypothesis import given, strategies as st

from privthresh.env import (DiscreteLaw, Instance, Setting, fb_hard_env, fc_flip_env, gap_profile,
                            make_instance, privatized_view, sample_reward)
from privthresh.streams import UniformStream

LN3 = math.log(3.0)

means_st = st.lists(st.floats(0, 1), min_size=1, max_size=6)


def test_make_instance_valid(two_arm):
    assert two_arm.means == (0.2, 0.8)
    assert two_arm.is_bernoulli
    assert two_arm.n_arms == 2


@pytest.mark.parametrize("means, tau, zeta", [([1.2], 0.5, 0.0), ([0.2, 0.8], 0.5, -0.1),
                                              ([0.2], 1.5, 0.0), ([], 0.5, 0.0)])
def test_make_instance_rejects(means, tau, zeta):
    with pytest.raises(ValueError):
        make_instance(means, tau, zeta)


def test_distribution_mean_must_match():
    law = DiscreteLaw((0.0, 0.5, 1.0), (0.25, 0.5, 0.25))
    make_instance([0.5], 0.4, dists=[law])
    with pytest.raises(ValueError):
        make_instance([0.6], 0.4, dists=[law])
    with pytest.raises(ValueError):
        DiscreteLaw((0.0, 1.5), (0.5, 0.5))


@pytest.mark.parametrize("zeta, setting, gaps, h", [
    (0.0, Setting.FIXED_BUDGET, (0.3, 0.3), 2 / 0.09),
    (0.05, Setting.FIXED_BUDGET, (0.35, 0.35), 2 / 0.1225),
    (0.05, Setting.FIXED_CONFIDENCE, (0.3, 0.3), 2 / 0.09),
])
def test_gap_profile(zeta, setting, gaps, h):
    prof = gap_profile(make_instance([0.2, 0.8], 0.5, zeta), setting)
    assert prof.gaps == pytest.approx(gaps, abs=1e-15)
    assert prof.h == pytest.approx(h, rel=1e-12)


def test_gap_profile_values_quoted():
    assert gap_profile(make_instance([0.2, 0.8], 0.5)).h == pytest.approx(22.2222, abs=1e-4)
    assert gap_profile(make_instance([0.2, 0.8], 0.5, 0.05)).h == pytest.approx(16.32653, abs=1e-5)


def test_zero_gap_is_infinite():
    prof = gap_profile(make_instance([0.5], 0.5), "fc")
    assert prof.gaps == (0.0,) and math.isinf(prof.h)


def test_privatized_view_examples(two_arm):
    v = privatized_view(make_instance([0.8], 0.5), LN3)
    assert v.mu_eps[0] == pytest.approx(0.65, abs=1e-15)
    v = privatized_view(make_instance([0.5], 0.5), 2.7)
    assert v.mu_eps == (0.5,) and v.tau_eps == 0.5
    v = privatized_view(two_arm, LN3)
    assert v.h_eps == pytest.approx(4 * 2 / 0.09, rel=1e-12)
    assert v.h_eps == pytest.approx(88.8889, abs=1e-4)


def test_fc_view_drops_tolerance():
    inst = make_instance([0.2, 0.8], 0.5, 0.1)
    assert privatized_view(inst, 1.0, "fc").zeta_eps == 0.0
    assert privatized_view(inst, 1.0, "fb").zeta_eps > 0.0


def test_eps_zero_view_is_degenerate(two_arm):
    v = privatized_view(two_arm, 0.0)
    assert v.mu_eps == (0.5, 0.5) and math.isinf(v.h_eps)


@given(means_st, st.floats(0, 1), st.floats(1e-3, 20))
def test_order_across_threshold_preserved(means, tau, eps):
    inst = make_instance(means, tau)
    v = privatized_view(inst, eps)
    for m, me in zip(means, v.mu_eps):
        lo, hi = 1 / (1 + math.exp(eps)), math.exp(eps) / (1 + math.exp(eps))
        assert lo - 1e-15 <= me <= hi + 1e-15
        # strict below float resolution is not representable; weak order always holds
        if m > tau:
            assert me >= v.tau_eps
            if m - tau > 1e-12:
                assert me > v.tau_eps
        elif m < tau:
            assert me <= v.tau_eps
            if tau - m > 1e-12:
                assert me < v.tau_eps
        else:
            assert me == v.tau_eps


@pytest.mark.parametrize("eps", [0.1, math.log(2), 1.0, 2.0, 5.0])
@given(means=means_st, tau=st.floats(0, 1), zeta=st.floats(0, 0.5))
def test_complexity_scaling(eps, means, tau, zeta):
    inst = make_instance(means, tau, zeta)
    h = gap_profile(inst).h
    h_eps = privatized_view(inst, eps).h_eps
    if math.isinf(h) or h > 1e12:
        return
    c = (math.exp(eps) - 1) / (math.exp(eps) + 1)
    assert h_eps * c * c == pytest.approx(h, rel=1e-9)


@given(st.permutations([0.1, 0.35, 0.6, 0.95]))
def test_complexity_permutation_invariant(perm):
    ref = gap_profile(make_instance([0.1, 0.35, 0.6, 0.95], 0.5, 0.02)).h
    assert gap_profile(make_instance(perm, 0.5, 0.02)).h == pytest.approx(ref, rel=1e-14)


def test_fb_hard_env_examples(two_arm):
    assert fb_hard_env(two_arm).means == pytest.approx((0.65, 0.65))
    assert fb_hard_env(two_arm, flip=0).means == pytest.approx((0.35, 0.65))
    assert fb_hard_env(make_instance([0.5], 0.5), flip=0).means == (0.5,)


def test_fb_hard_env_differs_in_one_arm():
    inst = make_instance([0.1, 0.4, 0.7, 0.55], 0.5, 0.03)
    base = fb_hard_env(inst)
    for i in range(inst.n_arms):
        env = fb_hard_env(inst, i)
        diff = [j for j in range(4) if env.means[j] != base.means[j]]
        assert diff == [i]


def test_fb_hard_env_rejects_out_of_range():
    with pytest.raises(ValueError):
        fb_hard_env(make_instance([0.0], 0.9, 0.2))


@pytest.mark.parametrize("mu, tau, expected", [(0.3, 0.5, 0.7), (0.9, 0.5, 0.1), (0.2, 0.9, 1.0)])
def test_fc_flip_env_examples(mu, tau, expected):
    env = fc_flip_env(make_instance([mu, 0.4], tau), 0)
    assert env.means[0] == pytest.approx(expected, abs=1e-15)
    assert env.means[1] == 0.4


@given(st.floats(0, 1), st.floats(0, 1))
def test_fc_flip_is_involution_without_clip(mu, tau):
    inst = make_instance([mu], tau)
    once = fc_flip_env(inst, 0)
    raw = tau + abs(tau - mu) if mu < tau else tau - abs(tau - mu)
    if 0 <= raw <= 1 and mu != tau:
        assert fc_flip_env(once, 0).means[0] == pytest.approx(mu, abs=1e-12)


def test_sample_reward_point_masses():
    inst = make_instance([1.0, 0.0], 0.5)
    s = UniformStream.from_seed(1)
    assert all(sample_reward(inst, 0, s) == 1.0 for _ in range(1000))
    assert all(sample_reward(inst, 1, s) == 0.0 for _ in range(1000))
    with pytest.raises(IndexError):
        sample_reward(inst, 2, s)


def test_sample_reward_mean():
    inst = make_instance([0.8], 0.5)
    s = UniformStream.from_seed(77)
    n = 10 ** 6
    total = sum(sample_reward(inst, 0, s) for _ in range(n))
    assert abs(total / n - 0.8) <= 3 * math.sqrt(0.16 / n)


def test_discrete_law_sampling():
    law = DiscreteLaw((0.0, 0.5, 1.0), (0.25, 0.5, 0.25))
    inst = make_instance([0.5], 0.4, dists=[law])
    s = UniformStream.from_seed(4)
    draws = [sample_reward(inst, 0, s) for _ in range(40_000)]
    assert set(draws) == {0.0, 0.5, 1.0}
    assert sum(draws) / len(draws) == pytest.approx(0.5, abs=0.01)


def test_instance_roundtrip():
    law = DiscreteLaw((0.0, 1.0), (0.5, 0.5))
    for inst in (make_instance([0.2, 0.8], 0.5, 0.05), make_instance([0.5, 0.3], 0.4, 0.0, [law, None])):
        back = Instance.from_json(inst.to_json())
        assert back == inst
    assert set(make_instance([0.2], 0.5).to_dict()) == {"means", "threshold", "tolerance"}


def test_from_dict_names_missing_field():
    with pytest.raises(ValueError, match="threshold"):
        Instance.from_dict({"means": [0.1]})
