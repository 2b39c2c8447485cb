"""Compiled hot loops: the shared-randomness PRF and the one-shot sampler.

These mirror :mod:`infocomp.sharedrand` and the step-wise endpoints in
:mod:`infocomp.onesamp` bit for bit; tests pin the equivalence.
"""

import numpy as np
from numba import njit

_U = np.uint64
GAMMA = _U(0x9E3779B97F4A7C15)
M1 = _U(0xBF58476D1CE4E5B9)
M2 = _U(0x94D049BB133111EB)
S30 = _U(30)
S27 = _U(27)
S31 = _U(31)
S11 = _U(11)
S32 = _U(32)
S63 = _U(63)
ONE = _U(1)
LO32 = _U(0xFFFFFFFF)
TWO = _U(2)
INV53 = 1.0 / 9007199254740992.0

TAG_TAPE = _U(0x7461706500000000)
TAG_HASH = _U(0x6861736800000000)
TAG_TRIAL = _U(0x747269616C000000)

MATCH = 0
MISMATCH = 1
ABORT_K = 2
ABORT_T = 3


@njit(cache=True, inline="always")
def mix64(z):
    z = _U(z)
    z = (z ^ (z >> S30)) * M1
    z = (z ^ (z >> S27)) * M2
    return z ^ (z >> S31)


@njit(cache=True, inline="always")
def word(base, n):
    # explicit casts: a Python int below 2**63 would otherwise arrive as int64
    return mix64(_U(base) + _U(n) * GAMMA)


@njit(cache=True)
def base(k0, k1, tag, stream):
    return mix64(mix64(mix64(_U(k0) ^ _U(tag)) + _U(k1)) + _U(stream) * GAMMA)


@njit(cache=True, inline="always")
def mulhi(w, n):
    # floor(w * n / 2**64) for n < 2**32, exact
    return ((w >> S32) * n + (((w & LO32) * n) >> S32)) >> S32


@njit(cache=True, inline="always")
def tape_x(bt, i, n):
    return np.int64(mulhi(word(bt, TWO * _U(i)), _U(n)))


@njit(cache=True, inline="always")
def tape_p(bt, i):
    return np.float64(word(bt, TWO * _U(i) + ONE) >> S11) * INV53


@njit(cache=True, inline="always")
def hbit(bh, x, j):
    return np.int64(word(bh, (_U(x) << S32) + _U(j)) >> S63)


@njit(cache=True)
def trial_words(k0, k1, start, count):
    br = base(k0, k1, TAG_TRIAL, 0)
    out = np.empty((count, 2), dtype=np.uint64)
    for t in range(count):
        n = _U(start + t)
        out[t, 0] = word(br, TWO * n)
        out[t, 1] = word(br, TWO * n + ONE)
    return out


@njit(cache=True)
def tape_block(bt, start, count, n):
    xs = np.empty(count, dtype=np.int64)
    ps = np.empty(count, dtype=np.float64)
    for r in range(count):
        xs[r] = tape_x(bt, start + r, n)
        ps[r] = tape_p(bt, start + r)
    return xs, ps


@njit(cache=True)
def hash_bits(bh, x, j_from, j_to):
    out = np.empty(j_to - j_from + 1, dtype=np.int64)
    for j in range(j_from, j_to + 1):
        out[j - j_from] = hbit(bh, x, j)
    return out


@njit(cache=True)
def pick(P, bt, cap):
    """First tape index i with P[x_i] > p_i; returns (x, i) or (-1, cap)."""
    n = P.shape[0]
    for i in range(1, cap + 1):
        x = tape_x(bt, i, n)
        px = P[x]
        if px > 0.0 and px > tape_p(bt, i):
            return x, i
    return -1, cap


@njit(cache=True)
def run_once(P, Q, bt, bh, s0, k_bits, t_max, scan_factor):
    """One run of the sampler.

    Returns (a, b, outcome, bits_sender, bits_receiver, t, k, i); ``b`` is
    -1 on abort.
    """
    na = P.shape[0]
    nb = Q.shape[0]
    a, i = pick(P, bt, scan_factor * na)
    if a < 0:
        return -1, -1, ABORT_K, k_bits, 0, 0, 0, i
    k = (i - 1) // na + 1
    if k > (1 << k_bits):
        return a, -1, ABORT_K, k_bits, 0, 0, k, i

    start = (k - 1) * nb + 1
    qmax = 0.0
    for r in range(nb):
        qmax = max(qmax, Q[r])
    n_hash = s0 + (t_max + 1) * (t_max + 1)
    hx = np.empty(n_hash, dtype=np.int64)
    for j in range(1, n_hash + 1):
        hx[j - 1] = hbit(bh, a, j)
    # One pass over B's block, equivalent to rescanning it for t = 0, 1, ...
    # Element r first enters c_t * Q at t*(r); the hash bits only extend
    # with t, so r can be picked only at t*(r), and only if it matches all
    # s_{t*(r)} bits there. The run ends at the smallest such t*, on the
    # earliest element achieving it.
    best_t = t_max + 1
    best_y = -1
    c = 2.0 ** (t_max * t_max)
    for r in range(nb):
        if best_t == 0:
            break
        p = tape_p(bt, start + r)
        if not p < c * qmax:
            continue
        y = tape_x(bt, start + r, nb)
        q = Q[y]
        if not p < c * q:
            continue
        ts = 0
        while not p < 2.0 ** (ts * ts) * q:
            ts += 1
        s = s0 + (ts + 1) * (ts + 1)
        ok = True
        for j in range(1, s + 1):
            if hbit(bh, y, j) != hx[j - 1]:
                ok = False
                break
        if ok:
            best_t, best_y = ts, y
            c = 2.0 ** ((ts - 1) * (ts - 1))
    if best_t > t_max:
        return a, -1, ABORT_T, k_bits + n_hash, t_max + 1, t_max, k, i
    s = s0 + (best_t + 1) * (best_t + 1)
    outcome = MATCH if best_y == a else MISMATCH
    return a, best_y, outcome, k_bits + s, best_t + 1, best_t, k, i


@njit(cache=True)
def run_many(P, Q, k0, k1, start, count, stream, s0, k_bits, t_max, scan_factor):
    seeds = trial_words(k0, k1, start, count)
    out = np.empty((count, 8), dtype=np.int64)
    for n in range(count):
        bt = base(seeds[n, 0], seeds[n, 1], TAG_TAPE, stream)
        bh = base(seeds[n, 0], seeds[n, 1], TAG_HASH, stream)
        res = run_once(P, Q, bt, bh, s0, k_bits, t_max, scan_factor)
        for c in range(8):
            out[n, c] = res[c]
    return out


@njit(cache=True)
def pick_many(P, k0, k1, start, count, stream, cap):
    seeds = trial_words(k0, k1, start, count)
    out = np.empty((count, 2), dtype=np.int64)
    for n in range(count):
        bt = base(seeds[n, 0], seeds[n, 1], TAG_TAPE, stream)
        x, i = pick(P, bt, cap)
        out[n, 0] = x
        out[n, 1] = i
    return out
