"""One-shot sampling: A holds P, B holds Q, both end up with (almost surely)
the same sample of P at a cost close to log P(a)/Q(a) bits.

Two equivalent executions are provided. :func:`run_sampler` uses the
compiled kernel and is what campaigns call. :class:`Sender` and
:class:`Receiver` are step-wise state machines that exchange bit messages;
the wire module drives them over real byte streams.

Message schedule: the sender first sends ``k_bits`` bits holding ``k - 1``
(big-endian, ``k`` the 1-based tape block), then per iteration ``t`` a
burst of hash bits ``h_j(a)`` for ``s_{t-1} < j <= s_t``; the receiver
answers every burst with one verdict bit (1 success, 0 failure).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels as K
from .info import Dist
from .sharedrand import SharedSeed, TAG_HASH, TAG_TAPE, element_at, hash_bit

MATCH = "match"
MISMATCH = "mismatch"
ABORT_K = "abort_k_overflow"
ABORT_T = "abort_t_max"
OUTCOMES = (MATCH, MISMATCH, ABORT_K, ABORT_T)

DEFAULT_T_CAP = 64
DEFAULT_SCAN_FACTOR = 10**6


def default_k_bits(eps: float) -> int:
    return 1 + math.ceil(math.log2(math.log2(1.0 / eps)))


def hash_offset(eps: float) -> int:
    """``s_t - (t+1)**2``, i.e. 1 + ceil(log2(1/eps))."""
    return 1 + math.ceil(math.log2(1.0 / eps))


def s_t(eps: float, t: int) -> int:
    return hash_offset(eps) + (t + 1) ** 2


def max_log_ratio(P, Q) -> float:
    """max over x with P(x) > 0 of log2 P(x)/Q(x) (inf if Q(x) = 0)."""
    p, q = _probs(P), _probs(Q)
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    return float(np.max(np.log2(p[mask] / q[mask])))


@dataclass(frozen=True)
class SamplerConfig:
    eps: float = 0.01
    t_max: int | None = None
    k_bits: int | None = None
    t_cap: int = DEFAULT_T_CAP
    scan_factor: int = DEFAULT_SCAN_FACTOR

    def __post_init__(self):
        if not 0 < self.eps <= 0.5:
            raise ValueError("eps must lie in (0, 1/2]")
        if self.k_bits is None:
            object.__setattr__(self, "k_bits", default_k_bits(self.eps))
        if self.k_bits < 1:
            raise ValueError("k_bits must be positive")
        if self.t_max is not None and self.t_max < 0:
            raise ValueError("t_max must be nonnegative")

    @property
    def s0(self) -> int:
        return hash_offset(self.eps)

    def resolve(self, P=None, Q=None) -> "SamplerConfig":
        """Fix ``t_max``: ceil(sqrt(max log ratio)) + 2 when finite, else the cap."""
        if self.t_max is not None:
            return self
        t_max = self.t_cap
        if P is not None and Q is not None:
            m = max_log_ratio(P, Q)
            if math.isfinite(m):
                t_max = math.ceil(math.sqrt(max(m, 0.0))) + 2
        return SamplerConfig(self.eps, t_max, self.k_bits, self.t_cap, self.scan_factor)


@dataclass
class RunStats:
    bits_A: int
    bits_B: int
    rounds_t: int
    k: int
    outcome: str
    index: int = 0

    @property
    def total(self) -> int:
        return self.bits_A + self.bits_B

    def as_dict(self) -> dict:
        return asdict(self)


def _probs(d) -> np.ndarray:
    if isinstance(d, Dist):
        return np.ascontiguousarray(d.probs)
    return np.ascontiguousarray(d, dtype=np.float64)


def in_P(e, d) -> bool:
    """Whether tape element ``e`` lies under the histogram of ``d``."""
    return bool(_probs(d)[e.x] > e.p)


def in_scaled_Q(e, d, C: float) -> bool:
    """Whether ``e`` lies in the C-multiple of the histogram of ``d``."""
    if C < 1:
        raise ValueError("C must be at least 1")
    q = _probs(d)[e.x]
    return bool(q > 0 and e.p < C * q)


def pick_A_element(p_dist, seed: SharedSeed, stream: int = 0, scan_factor: int = DEFAULT_SCAN_FACTOR):
    """Minimal tape index whose element falls under P; returns (i, element)."""
    p = _probs(p_dist)
    if not np.any(p > 0):
        raise ValueError("distribution has no mass")
    x, i = K.pick(p, np.uint64(seed.base(TAG_TAPE, stream)), scan_factor * len(p))
    if x < 0:
        raise RuntimeError("tape scan cap exceeded")
    return int(i), element_at(seed, len(p), int(i), stream)


def _outcome_name(code: int) -> str:
    return OUTCOMES[code]


def _run_codes(p, q, seed: SharedSeed, cfg: SamplerConfig, stream: int):
    bt = np.uint64(seed.base(TAG_TAPE, stream))
    bh = np.uint64(seed.base(TAG_HASH, stream))
    return K.run_once(p, q, bt, bh, cfg.s0, cfg.k_bits, cfg.t_max, cfg.scan_factor)


def run_sampler(P, Q, seed: SharedSeed, cfg: SamplerConfig | None = None, stream: int = 0):
    """Run the protocol with A holding P and B holding Q.

    Returns ``(a, b, stats)``; ``b`` is None when the run aborted.
    """
    p, q = _probs(P), _probs(Q)
    cfg = (cfg or SamplerConfig()).resolve(p, q)
    a, b, code, bits_s, bits_r, t, k, i = _run_codes(p, q, seed, cfg, stream)
    stats = RunStats(int(bits_s), int(bits_r), int(t), int(k), _outcome_name(code), int(i))
    return (int(a) if a >= 0 else None), (int(b) if b >= 0 else None), stats


def comm_bound(P, Q, a: int, eps: float, sqrt_coef: float = 5.0) -> float:
    """Per-run communication bound for output ``a`` (log ratio clamped at 0)."""
    p, q = _probs(P), _probs(Q)
    if q[a] <= 0:
        return math.inf
    lr = max(math.log2(p[a] / q[a]), 0.0) if p[a] > 0 else 0.0
    return lr + math.log2(1 / eps) + math.log2(math.log2(1 / eps)) + sqrt_coef * math.sqrt(lr) + 9


def _bounds_vector(p, q, eps, sqrt_coef=5.0):
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.where(p > 0, np.log2(p / q), 0.0)
    lr = np.maximum(lr, 0.0)
    b = lr + math.log2(1 / eps) + math.log2(math.log2(1 / eps)) + sqrt_coef * np.sqrt(lr) + 9
    return np.where(q > 0, b, np.inf)


@dataclass
class Campaign:
    """Per-trial columns from :func:`sampler_campaign`."""

    a: np.ndarray
    b: np.ndarray
    outcome: np.ndarray
    bits_A: np.ndarray
    bits_B: np.ndarray
    rounds_t: np.ndarray
    k: np.ndarray
    index: np.ndarray
    bound: np.ndarray

    @property
    def bits(self) -> np.ndarray:
        return self.bits_A + self.bits_B

    def __len__(self):
        return len(self.a)


def sampler_campaign(P, Q, seed: SharedSeed, trials: int, cfg: SamplerConfig | None = None,
                     start: int = 0, sqrt_coef: float = 5.0) -> Campaign:
    """``trials`` independent runs; trial ``n`` uses ``seed.trial(start + n)``."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    p, q = _probs(P), _probs(Q)
    cfg = (cfg or SamplerConfig()).resolve(p, q)
    k0, k1 = seed.words
    out = K.run_many(p, q, np.uint64(k0), np.uint64(k1), start, trials, 0,
                     cfg.s0, cfg.k_bits, cfg.t_max, cfg.scan_factor)
    bounds = _bounds_vector(p, q, cfg.eps, sqrt_coef)
    a = out[:, 0]
    bound = np.where(a >= 0, bounds[np.maximum(a, 0)], np.inf)
    return Campaign(a, out[:, 1], out[:, 2], out[:, 3], out[:, 4], out[:, 5], out[:, 6], out[:, 7], bound)


def pick_campaign(P, seed: SharedSeed, trials: int, start: int = 0,
                  scan_factor: int = DEFAULT_SCAN_FACTOR):
    """A's choice over many trials: arrays (symbol, tape index, block k)."""
    p = _probs(P)
    k0, k1 = seed.words
    out = K.pick_many(p, np.uint64(k0), np.uint64(k1), start, trials, 0, scan_factor * len(p))
    idx = out[:, 1]
    return out[:, 0], idx, (idx - 1) // len(p) + 1


# ---------------------------------------------------------------------------
# step-wise endpoints


def _to_bits(value: int, width: int) -> tuple:
    return tuple((value >> (width - 1 - n)) & 1 for n in range(width))


def _from_bits(bits) -> int:
    v = 0
    for b in bits:
        v = (v << 1) | b
    return v


class Sender:
    """The endpoint that knows P (player A in the single-shot setting)."""

    def __init__(self, P, seed: SharedSeed, cfg: SamplerConfig, stream: int = 0):
        if cfg.t_max is None:
            raise ValueError("endpoints need an explicit t_max")
        self.p = _probs(P)
        self.seed = seed
        self.cfg = cfg
        self.stream = stream
        self.done = False
        self.outcome = None
        self.output = None
        self.bits_sent = 0
        self.t = 0
        self.k = 0
        self.index = 0
        self._sent_hashes = 0

    def _scan(self):
        n = len(self.p)
        for i in range(1, self.cfg.scan_factor * n + 1):
            e = element_at(self.seed, n, i, self.stream)
            if self.p[e.x] > 0 and self.p[e.x] > e.p:
                return e.x, i
        return None, self.cfg.scan_factor * n

    def _burst(self) -> tuple:
        s = s_t(self.cfg.eps, self.t)
        bits = tuple(hash_bit(self.seed, j, self.output, self.stream)
                     for j in range(self._sent_hashes + 1, s + 1))
        self._sent_hashes = s
        return bits

    def _emit(self, msgs):
        self.bits_sent += sum(len(m) for m in msgs)
        return msgs

    def start(self) -> list:
        a, i = self._scan()
        self.output, self.index = a, i
        width = self.cfg.k_bits
        if a is None:
            self.done, self.outcome = True, ABORT_K
            return self._emit([(1,) * width])
        self.k = (i - 1) // len(self.p) + 1
        if self.k > (1 << width):
            # an arbitrary string; the run is abandoned
            self.done, self.outcome = True, ABORT_K
            return self._emit([(1,) * width])
        return self._emit([_to_bits(self.k - 1, width), self._burst()])

    def receive(self, msg) -> list:
        if self.done or len(msg) != 1:
            raise ProtocolError("sender expected a single verdict bit")
        if msg[0] == 1:
            self.done, self.outcome = True, "success"
            return []
        if self.t >= self.cfg.t_max:
            self.done, self.outcome = True, ABORT_T
            return []
        self.t += 1
        return self._emit([self._burst()])

    def peer_closed(self):
        if not self.done:
            self.done, self.outcome = True, "peer_closed"


class Receiver:
    """The endpoint that knows Q."""

    def __init__(self, Q, seed: SharedSeed, cfg: SamplerConfig, stream: int = 0):
        if cfg.t_max is None:
            raise ValueError("endpoints need an explicit t_max")
        self.q = _probs(Q)
        self.seed = seed
        self.cfg = cfg
        self.stream = stream
        self.done = False
        self.outcome = None
        self.output = None
        self.bits_sent = 0
        self.t = -1
        self.k = None
        self._hx: list[int] = []
        self._block = None

    def start(self) -> list:
        return []

    def _load_block(self):
        n = len(self.q)
        first = (self.k - 1) * n + 1
        self._block = [element_at(self.seed, n, first + r, self.stream) for r in range(n)]
        self._dead = [False] * n
        self._checked = [0] * n

    def _search(self):
        s = len(self._hx)
        c = 2.0 ** (self.t * self.t) if self.t * self.t < 1024 else math.inf
        for r, e in enumerate(self._block):
            q = self.q[e.x]
            if not (q > 0 and e.p < c * q) or self._dead[r]:
                continue
            for j in range(self._checked[r] + 1, s + 1):
                if hash_bit(self.seed, j, e.x, self.stream) != self._hx[j - 1]:
                    self._dead[r] = True
                    break
            if self._dead[r]:
                continue
            self._checked[r] = s
            return e.x
        return None

    def receive(self, msg) -> list:
        if self.done:
            raise ProtocolError("receiver already finished")
        if self.k is None:
            if len(msg) != self.cfg.k_bits:
                raise ProtocolError("block index has the wrong width")
            self.k = _from_bits(msg) + 1
            self._load_block()
            return []
        self.t += 1
        if len(self._hx) + len(msg) != s_t(self.cfg.eps, self.t):
            raise ProtocolError("hash burst has the wrong length")
        self._hx.extend(msg)
        y = self._search()
        if y is not None:
            self.done, self.outcome, self.output = True, "success", y
            verdict = (1,)
        else:
            if self.t >= self.cfg.t_max:
                self.done, self.outcome = True, ABORT_T
            verdict = (0,)
        self.bits_sent += 1
        return [verdict]

    def peer_closed(self):
        if not self.done:
            self.done, self.outcome = True, ABORT_K


class ProtocolError(RuntimeError):
    pass


def drive(first, second, first_msgs: list | None = None):
    """Run two endpoints against each other in process until both finish.

    ``first`` speaks first. Returns the list of (who, message) exchanged.
    """
    log = []
    queue = [(first, second, m) for m in (first.start() if first_msgs is None else first_msgs)]
    queue += [(second, first, m) for m in second.start()]
    while queue:
        src, dst, msg = queue.pop(0)
        log.append((src, msg))
        if dst.done:
            continue
        queue += [(dst, src, m) for m in dst.receive(msg)]
    for side in (first, second):
        if not side.done:
            side.peer_closed()
    return log


def run_sampler_stepwise(P, Q, seed: SharedSeed, cfg: SamplerConfig | None = None, stream: int = 0):
    """Same contract as :func:`run_sampler`, executed by the two state machines."""
    p, q = _probs(P), _probs(Q)
    cfg = (cfg or SamplerConfig()).resolve(p, q)
    snd, rcv = Sender(p, seed, cfg, stream), Receiver(q, seed, cfg, stream)
    drive(snd, rcv)
    return snd.output, rcv.output, combine_stats(snd, rcv)


def combine_stats(snd: Sender, rcv: Receiver) -> RunStats:
    if snd.outcome == ABORT_K:
        outcome = ABORT_K
    elif rcv.outcome == ABORT_T:
        outcome = ABORT_T
    else:
        outcome = MATCH if rcv.output == snd.output else MISMATCH
    return RunStats(snd.bits_sent, rcv.bits_sent, max(snd.t, 0), snd.k, outcome, snd.index)
