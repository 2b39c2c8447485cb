"""Acceptance criteria 1-10, each at its stated scale and tolerance.

Run alone with ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line per
criterion is printed at the end of the session.
"""

import math
import time

import numpy as np
import pytest

import conftest
from infocomp import harness, onesamp
from infocomp.cpj import (correct_distribution, instance_divergence, leaf_label_distribution,
                          path_costs, product_instance, promise_instance, random_instance,
                          sample_path, solve_cpj_n)
from infocomp.info import Dist, conditional_mutual_information, statistical_distance
from infocomp.prototree import (and_protocol, comm_complexity, compress, expected_divergence,
                                internal_info_cost, noisy_reveal_protocol, parallel_protocol,
                                power_prior, random_prior, random_protocol, single_copy_from_n,
                                transcript_distribution, uniform_prior)
from infocomp.sharedrand import SharedSeed
from infocomp.wire import run_over_channel

SEED = SharedSeed.from_hex("5eed5eed5eed5eed5eed5eed5eed5eed")
EPS = 0.01


def check(n: int, ok: bool, detail: str) -> None:
    conftest.CRITERIA[n] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, detail


def corpus(count=50, seed=1):
    """Random protocols: depth <= 4, |X|, |Y| <= 8, |R| <= 4, random prior."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        depth = int(rng.integers(1, 5))
        nx, ny = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        pi = random_protocol(rng, depth, nx, ny, n_public=int(rng.integers(1, 5)),
                             branching=int(rng.choice([2, 3])) if depth <= 3 else 2,
                             first_owner=str(rng.choice(["A", "B"])))
        out.append((pi, random_prior(rng, nx, ny)))
    return out


def test_criterion_1_divergence_identity():
    t0 = time.perf_counter()
    worst = max(abs(expected_divergence(pi, mu) - internal_info_cost(pi, mu)) for pi, mu in corpus())
    elapsed = time.perf_counter() - t0
    check(1, worst < 1e-9 and elapsed < 10,
          f"max |E[div] - IC| = {worst:.2e} over 50 protocols in {elapsed:.2f}s")


def test_criterion_2_ic_cc_and_chain_rule():
    gap, chain = -math.inf, 0.0
    for pi, mu in corpus():
        gap = max(gap, internal_info_cost(pi, mu) - comm_complexity(pi))
        j = transcript_distribution(pi, mu)
        whole = conditional_mutual_information(j, (0, 1), (2,))
        for first, second in ((0, 1), (1, 0)):
            parts = (conditional_mutual_information(j, (first,), (2,))
                     + conditional_mutual_information(j, (second,), (2,), (first,)))
            chain = max(chain, abs(whole - parts))
    check(2, gap <= 1e-9 and chain < 1e-9,
          f"max IC - CC = {gap:.3f}, max chain-rule residual = {chain:.2e}")


def test_criterion_3_one_shot_sampler():
    t0 = time.perf_counter()
    lines, ok = [], True
    for d, sp in ((0, 4), (4, 4), (8, 4), (16, 1)):
        obj = harness.gen_instance("uniform-subset", {"sq": sp * 2 ** d, "sp": sp}, SEED)
        P, Q = harness.load_pq(obj)
        c = onesamp.sampler_campaign(P, Q, SEED, 10**4, onesamp.SamplerConfig(EPS))
        hard = d + math.log2(1 / EPS) + math.log2(math.log2(1 / EPS)) + 5 * math.sqrt(d) + 9
        violations = int(np.sum(c.bits > hard))
        err = float(np.mean(c.outcome != onesamp.OUTCOMES.index(onesamp.MATCH)))
        # A's output is its own tape scan; pick_campaign runs that same
        # kernel, so the 10^5-trial marginal is cheap (checked on overlap)
        xs, _, _ = onesamp.pick_campaign(P, SEED, 10**5)
        same = bool(np.array_equal(xs[:10**4], c.a))
        sd = statistical_distance(np.bincount(xs[xs >= 0], minlength=len(P)) / np.sum(xs >= 0), P)
        ok &= violations == 0 and err <= 0.02 and sd <= 0.02 and same
        lines.append(f"d={d}: violations={violations} err={err:.4f} sd={sd:.4f}")
    elapsed = time.perf_counter() - t0
    check(3, ok and elapsed < 60, "; ".join(lines) + f"; {elapsed:.1f}s")


def test_criterion_4_block_index_tail():
    obj = harness.gen_instance("uniform-subset", {"sq": 64, "sp": 4}, SEED)
    P, _ = harness.load_pq(obj)
    _, _, k = onesamp.pick_campaign(P, SEED, 10**5)
    tails = {n: float(np.mean(k > n)) for n in (1, 2, 3)}
    ok = all(tails[n] <= 1.5 * math.exp(-n) for n in tails)
    check(4, ok, ", ".join(f"P[k>{n}]={v:.4f} (cap {1.5 * math.exp(-n):.4f})" for n, v in tails.items()))


def test_criterion_5_cpj_paths():
    lines, ok = [], True
    rng = np.random.default_rng(5)
    for branching in (2, 3):
        F = random_instance(rng, 3, branching, alpha=0.7)
        correct = correct_distribution(F)
        counts, violations = {}, 0
        for t in range(10**5):
            pa, pb, st = sample_path(F, SEED.trial(t), EPS, with_costs=False)
            if st.outcome != "match":
                continue
            counts[pa.labels] = counts.get(pa.labels, 0) + 1
            D, Dc = path_costs(F, pa.labels)
            k = len(pa.labels)
            bound = D + 2 * k * math.log2(1 / EPS) + 5 * math.sqrt(k * Dc) + 9 * k
            violations += st.total > bound + 1e-9
        emp = np.array([counts.get(s, 0) for s in correct.universe.symbols], dtype=float)
        sd = statistical_distance(emp / emp.sum(), correct.probs)
        ok &= sd <= 0.03 and violations == 0
        lines.append(f"b={branching}: sd={sd:.4f} violations={violations}")
    check(5, ok, "; ".join(lines))


def test_criterion_6_compression():
    pi, mu = noisy_reveal_protocol(), uniform_prior(8, 8)
    ic, cc, k = internal_info_cost(pi, mu), comm_complexity(pi), pi.depth
    bound = ic + 2 * k * math.log2(1 / EPS) + 5 * math.sqrt(k * ic) + 9 * k + 1
    joint = transcript_distribution(pi, mu)
    keys = joint.universes[2].symbols
    exact = joint.marginal((2,))
    bits, counts = [], {}
    # the mean is taken at 10^4 trials; the distribution check runs on to
    # 10^5 so sampling noise sits well below the 0.03 tolerance
    for t in range(10**5):
        res = compress(pi, mu, EPS, SEED.trial(t))
        if res.matched:
            if t < 10**4:
                bits.append(res.stats.total)
            counts[res.transcript_A] = counts.get(res.transcript_A, 0) + 1
    mean = float(np.mean(bits))
    emp = np.array([counts.get(s, 0) for s in keys], dtype=float)
    sd = statistical_distance(emp / emp.sum(), exact)
    ok = abs(ic - 2) < 1e-6 and cc == 6 and mean <= bound and sd <= 0.03
    check(6, ok, f"IC={ic:.6f} CC={cc} mean bits={mean:.2f} (bound {bound:.2f}) sd={sd:.4f}")


def test_criterion_7_amortization():
    pi, mu = noisy_reveal_protocol(), uniform_prior(8, 8)
    ic, cc = internal_info_cost(pi, mu), comm_complexity(pi)
    cfg = harness.ExperimentConfig("amortize", EPS, 2000, SEED.hex, n_list=(1, 4, 16))
    per = harness.amortize_campaign(pi, mu, cfg).summary["per_n"]
    means = [per[str(n)]["mean_bits_per_copy"] for n in (1, 4, 16)]
    trend = all(b < a * 1.05 for a, b in zip(means, means[1:]))
    cap = ic + 2 * cc * math.log2(1 / EPS)
    rng = np.random.default_rng(7)
    resid = 0.0
    for _ in range(5):
        small = random_protocol(rng, 2, 2, 2)
        m = random_prior(rng, 2, 2, zeros=0.0)
        resid = max(resid, abs(internal_info_cost(parallel_protocol(small, 2), power_prior(m, 2))
                               - 2 * internal_info_cost(small, m)))
    ok = trend and means[-1] <= cap and resid < 1e-9
    check(7, ok, f"per-copy bits n=1,4,16: {means[0]:.2f}, {means[1]:.2f}, {means[2]:.2f} "
                 f"(n=16 cap {cap:.2f}); max |IC(pi^2) - 2 IC| = {resid:.2e}")


def test_criterion_8_single_copy_extraction():
    pi = and_protocol(2)
    p2 = parallel_protocol(pi, 2)
    rng = np.random.default_rng(8)
    lines, ok = [], True
    for name, mu in (("uniform", uniform_prior(4, 4)), ("correlated", random_prior(rng, 4, 4, zeros=0.0))):
        tau = single_copy_from_n(p2, mu, 2)
        lhs, rhs = internal_info_cost(tau, mu), internal_info_cost(p2, power_prior(mu, 2)) / 2
        ok &= lhs <= rhs + 1e-9 and comm_complexity(tau) == comm_complexity(p2)
        lines.append(f"{name}: IC(tau)={lhs:.6f} <= IC(pi^2)/2={rhs:.6f}, CC {comm_complexity(tau)}"
                     f"={comm_complexity(p2)}")
    check(8, ok, "; ".join(lines))


def test_criterion_9_products():
    rng = np.random.default_rng(9)
    resid = 0.0
    for m in (2, 3):
        for _ in range(5):
            parts = [random_instance(rng, 2, 2) for _ in range(m)]
            resid = max(resid, abs(instance_divergence(product_instance(parts))
                                   - sum(instance_divergence(F) for F in parts)))
    # zero divergence; the promise needs a majority strictly above 1 - eps
    Fs = [promise_instance(rng, 3, 0.999, max_divergence=0.0, value=v) for v in (0, 1, 1, 0)]
    truth = [max(leaf_label_distribution(F).items(), key=lambda kv: kv[1])[0] for F in Fs]
    rate = sum(solve_cpj_n(Fs, SEED.trial(t), EPS)[0] == truth for t in range(1000)) / 1000
    check(9, resid < 1e-9 and rate >= 1 - 2 * EPS,
          f"max additivity residual = {resid:.2e}; n=4 correctness = {rate:.3f}")


def test_criterion_10_wire_transparency():
    rng = np.random.default_rng(10)
    bad, runs = 0, 0
    transports = ("socketpair", "tcp")
    for t in range(100):
        s = SEED.trial(t)
        tr = transports[t % 2]
        F = random_instance(rng, 3, 2, alpha=0.5)
        pa, pb, st = sample_path(F, s, EPS, with_costs=False)
        run = run_over_channel({"engine": "cpj", "eps": EPS}, F.view("A").to_json(), F.view("B").to_json(), s, tr)
        bad += (run.A.output["labels"] != list(pa.labels) or run.B.output["labels"] != list(pb.labels)
                or (run.stats.bits_A, run.stats.bits_B) != (st.bits_A, st.bits_B)
                or (run.A.frame_bits_sent, run.B.frame_bits_sent) != (st.bits_A, st.bits_B))
        runs += 1
    cfg = onesamp.SamplerConfig(0.1, t_max=4)
    for t in range(100):
        s = SEED.trial(1000 + t)
        P, Q = rng.dirichlet(np.ones(8)), rng.dirichlet(np.ones(8) * 0.5)
        a, b, st = onesamp.run_sampler(P, Q, s, cfg)
        run = run_over_channel({"engine": "sample", "eps": 0.1, "t_max": 4}, Dist(P).to_json(),
                               Dist(Q).to_json(), s, transports[t % 2])
        bad += run.outputs != (a, b) or (run.stats.bits_A, run.stats.bits_B) != (st.bits_A, st.bits_B)
        runs += 1
    check(10, bad == 0, f"{runs - bad}/{runs} paired runs identical (cpj and sample engines)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
