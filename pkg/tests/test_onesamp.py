import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infocomp.info import Dist, statistical_distance
from infocomp.onesamp import (ABORT_K, ABORT_T, MATCH, MISMATCH, Receiver, SamplerConfig, Sender,
                              comm_bound, default_k_bits, drive, in_P, in_scaled_Q, pick_A_element,
                              pick_campaign, run_sampler, run_sampler_stepwise, s_t, sampler_campaign)
from infocomp.sharedrand import SharedSeed, TapeElement, element_at

SEED = SharedSeed.from_hex("5eed5eed5eed5eed5eed5eed5eed5eed")


def uniform_subset(sq, sp, n=None):
    n = n or sq
    P, Q = np.zeros(n), np.zeros(n)
    P[:sp] = 1 / sp
    Q[:sq] = 1 / sq
    return P, Q


# -- membership -------------------------------------------------------------

def test_in_P_examples():
    u = Dist.uniform(4)
    assert in_P(TapeElement(2, 0.0), u)
    assert not in_P(TapeElement(1, 0.0), Dist.point(4, 0))
    assert not in_P(TapeElement(1, 0.3), u)


def test_in_scaled_Q_examples():
    d = Dist([0.1, 0.9, 0.0])
    for p in (0.05, 0.1, 0.5):
        assert in_scaled_Q(TapeElement(0, p), d, 1) == in_P(TapeElement(0, p), d)
    assert not in_scaled_Q(TapeElement(2, 0.0), d, 1e9)
    assert in_scaled_Q(TapeElement(0, 0.3), d, 4)
    with pytest.raises(ValueError):
        in_scaled_Q(TapeElement(0, 0.3), d, 0.5)


def test_schedule_constants():
    assert default_k_bits(0.01) == 4          # 1 + ceil(log2 log2 100) = 1 + 3
    assert s_t(0.01, 0) == 9                  # 1 + 7 + 1
    assert s_t(0.01, 3) == 24
    assert default_k_bits(0.5) == 1
    with pytest.raises(ValueError):
        SamplerConfig(0.0)
    with pytest.raises(ValueError):
        SamplerConfig(0.6)


# -- picking ----------------------------------------------------------------

def test_pick_point_mass():
    for t in range(50):
        i, e = pick_A_element(Dist.point(6, 4), SEED.trial(t))
        assert e.x == 4
        assert e == element_at(SEED.trial(t), 6, i)


def test_pick_is_first_hit():
    P = np.array([0.75, 0.25])
    for t in range(50):
        s = SEED.trial(t)
        i, e = pick_A_element(P, s)
        assert in_P(e, P)
        assert not any(in_P(element_at(s, 2, j), P) for j in range(1, i))


@pytest.mark.parametrize("P", [np.full(8, 1 / 8), np.array([0.75, 0.25])])
def test_pick_frequencies(P):
    xs, _, _ = pick_campaign(P, SEED, 10**5)
    freq = np.bincount(xs, minlength=len(P)) / len(xs)
    assert np.all(np.abs(freq - P) <= 0.01)


# -- runs -------------------------------------------------------------------

def test_singleton_universe_always_matches():
    c = sampler_campaign([1.0], [1.0], SEED, 500)
    assert np.all(c.outcome == 0)


def test_equal_distributions_succeed_at_t0():
    rng = np.random.default_rng(0)
    P = rng.dirichlet(np.ones(10))
    c = sampler_campaign(P, P, SEED, 2000)
    matched = c.outcome == 0
    assert np.all(c.rounds_t[matched] == 0)
    assert matched.mean() >= 0.99


def test_comm_bound_examples():
    P = Q = [0.5, 0.5]
    assert comm_bound(P, Q, 0, 0.25) == pytest.approx(12.0)
    P, Q = [1.0, 0.0], [2.0 ** -16, 1 - 2.0 ** -16]
    expect = 16 + math.log2(100) + math.log2(math.log2(100)) + 20 + 9
    assert comm_bound(P, Q, 0, 0.01) == pytest.approx(expect)
    assert comm_bound([0.5, 0.5], [1.0, 0.0], 1, 0.01) == math.inf


@pytest.mark.parametrize("d", [0, 4, 8])
def test_uniform_subset_mean_bits(d):
    P, Q = uniform_subset(2 ** (d + 2), 4)
    c = sampler_campaign(P, Q, SEED, 10**4)
    assert c.bits.mean() <= d + 2 * math.log2(100) + 5 * math.sqrt(d) + 12
    assert np.mean(c.outcome != 0) <= 0.02


def test_support_gap_aborts_at_t_max():
    P, Q = np.array([0.5, 0.5]), np.array([1.0, 0.0])
    c = sampler_campaign(P, Q, SEED, 300, SamplerConfig(0.1, t_max=3))
    hit = c.a == 1
    assert np.all(c.outcome[hit] != 0)
    assert np.any(c.outcome[hit] == 3)
    assert np.all(c.rounds_t <= 3)


def test_k_overflow_counted():
    P = np.full(64, 1 / 64)
    c = sampler_campaign(P, P, SEED, 4000, SamplerConfig(0.1, k_bits=1))
    over = c.k > 2
    assert over.any()
    assert np.all(c.outcome[over] == 2)
    assert np.all(c.bits_A[over] == 1) and np.all(c.bits_B[over] == 0)


@pytest.mark.parametrize("eps", [0.1, 0.01])
def test_error_rate_within_twice_eps(eps):
    rng = np.random.default_rng(11)
    P = rng.dirichlet(np.ones(32))
    Q = rng.dirichlet(np.ones(32))
    c = sampler_campaign(P, Q, SEED, 10**5, SamplerConfig(eps))
    assert np.mean(c.outcome != 0) <= 2 * eps


def test_marginal_exactness():
    rng = np.random.default_rng(12)
    P = rng.dirichlet(np.ones(64))
    Q = rng.dirichlet(np.ones(64))
    c = sampler_campaign(P, Q, SEED, 10**5)
    emp = np.bincount(c.a, minlength=64) / len(c)
    assert statistical_distance(emp, P) <= 0.02


def test_block_index_tail():
    P = np.random.default_rng(13).dirichlet(np.ones(64))
    _, _, k = pick_campaign(P, SEED, 10**5)
    for n in (1, 2, 3):
        assert np.mean(k > n) <= 1.5 * math.exp(-n)


def test_output_independent_of_k():
    P = np.array([0.95, 0.05])
    xs, _, k = pick_campaign(P, SEED, 10**5)
    assert np.mean(k > 1) >= 0.2
    d1 = np.bincount(xs[k == 1], minlength=2) / np.sum(k == 1)
    d2 = np.bincount(xs[k > 1], minlength=2) / np.sum(k > 1)
    assert statistical_distance(d1, d2) <= 0.05


# -- the hard per-run bound and the two implementations ----------------------

dists = st.integers(1, 12).flatmap(lambda n: st.tuples(
    st.lists(st.one_of(st.just(0.0), st.floats(1e-4, 1.0)), min_size=n, max_size=n),
    st.lists(st.floats(1e-6, 1.0), min_size=n, max_size=n))).filter(lambda pq: sum(pq[0]) > 0)


@settings(max_examples=150, deadline=None)
@given(dists, st.sampled_from([0.5, 0.25, 0.1, 0.01]), st.integers(0, 2**64))
def test_per_run_bound_holds(pq, eps, seed):
    P = np.array(pq[0]) / sum(pq[0])
    Q = np.array(pq[1]) / sum(pq[1])
    c = sampler_campaign(P, Q, SharedSeed(seed), 50, SamplerConfig(eps))
    ok = c.outcome < 2
    assert np.all(c.bits[ok] <= c.bound[ok] + 1e-9)


@settings(max_examples=150, deadline=None)
@given(dists, st.sampled_from([0.5, 0.1, 0.01]), st.integers(0, 2**128 - 1),
       st.integers(1, 4), st.integers(0, 4), st.integers(0, 3))
def test_kernel_equals_stepwise(pq, eps, seed, k_bits, t_max, stream):
    P = np.array(pq[0]) / sum(pq[0])
    Q = np.array(pq[1]) / sum(pq[1])
    cfg = SamplerConfig(eps, t_max=t_max, k_bits=k_bits)
    s = SharedSeed(seed)
    assert run_sampler(P, Q, s, cfg, stream) == run_sampler_stepwise(P, Q, s, cfg, stream)


def test_message_schedule():
    P, Q = uniform_subset(64, 1)
    cfg = SamplerConfig(0.01).resolve(P, Q)
    snd, rcv = Sender(P, SEED, cfg), Receiver(Q, SEED, cfg)
    log = drive(snd, rcv)
    assert log[0][0] is snd and len(log[0][1]) == cfg.k_bits
    prev = 0
    t = 0
    for who, msg in log[1:]:
        if who is snd:
            assert len(msg) == s_t(0.01, t) - prev
            prev = s_t(0.01, t)
        else:
            assert len(msg) == 1
            t += 1
    assert log[-1][0] is rcv and log[-1][1] == (1,)
    assert snd.bits_sent + rcv.bits_sent == sum(len(m) for _, m in log)


def test_outcome_labels():
    P, Q = uniform_subset(16, 1)
    c = sampler_campaign(P, Q, SEED, 2000)
    assert set(np.unique(c.outcome)) <= {0, 1, 2, 3}
    a, b, stats = run_sampler(P, Q, SEED)
    assert stats.outcome in (MATCH, MISMATCH, ABORT_K, ABORT_T)
    assert stats.total == stats.bits_A + stats.bits_B
