"""Correlated pointer jumping.

An instance is a rooted tree. Each inner node is owned by A or B and
carries two distributions over its children: ``dist_a`` known to A and
``dist_b`` known to B. The *correct* leaf distribution follows the owner's
distribution at every step. Nodes may be explicit (:class:`CpjNode`) or
computed on demand (products here, posterior-derived nodes in
:mod:`infocomp.prototree`); every node type exposes the same attributes:
``owner``, ``is_leaf``, ``output``, ``n_children``, ``label(i)``,
``dist_a``, ``dist_b`` and ``child(i)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterator, Sequence

import numpy as np

from .info import NORM_TOL, Dist, Universe
from . import _kernels as K
from .onesamp import (ABORT_K, ABORT_T, MATCH, MISMATCH, OUTCOMES, ProtocolError, Receiver,
                      RunStats, SamplerConfig, Sender, _run_codes, drive, s_t)
from .sharedrand import TAG_TAPE, SharedSeed

OWNERS = ("A", "B")


def other(owner: str) -> str:
    return "B" if owner == "A" else "A"


def check_prefix_free(labels: Sequence[str]) -> None:
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate child labels {labels!r}")
    ordered = sorted(labels)
    for u, v in zip(ordered, ordered[1:]):
        if v.startswith(u):
            raise ValueError(f"labels {u!r} and {v!r} are not prefix free")
    for lab in labels:
        if lab and set(lab) - {"0", "1"}:
            raise ValueError(f"label {lab!r} is not a binary string")


def _dist_vector(values, n: int, what: str) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    if len(v) != n:
        raise ValueError(f"{what} has {len(v)} entries for {n} children")
    return Dist(v).probs


class CpjNode:
    """Explicit instance node. A leaf has no children and carries ``output``."""

    def __init__(self, owner=None, labels=(), dist_a=None, dist_b=None, children=(), output=None):
        self.children = list(children)
        self.labels = tuple(labels)
        self.owner = owner
        self.output = output
        if self.children:
            if owner not in OWNERS:
                raise ValueError(f"inner node owner must be A or B, got {owner!r}")
            if len(self.labels) != len(self.children):
                raise ValueError("one label per child required")
            check_prefix_free(self.labels)
            n = len(self.children)
            self.dist_a = None if dist_a is None else _dist_vector(dist_a, n, "distA")
            self.dist_b = None if dist_b is None else _dist_vector(dist_b, n, "distB")
        else:
            self.dist_a = self.dist_b = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def n_children(self) -> int:
        return len(self.children)

    def label(self, i: int) -> str:
        return self.labels[i]

    def child(self, i: int):
        return self.children[i]


@dataclass
class CpjInstance:
    root: Any
    rounds: int = 0

    def __post_init__(self):
        if not self.rounds:
            self.rounds = depth(self.root)
        if self.rounds < 1:
            raise ValueError("an instance needs at least one round")
        if isinstance(self.root, CpjNode):
            level_owners(self.root)

    # -- json -------------------------------------------------------------
    def to_json(self) -> dict:
        return {"rounds": self.rounds, "root": _node_to_json(self.root)}

    @classmethod
    def from_json(cls, obj) -> "CpjInstance":
        if isinstance(obj, str):
            obj = json.loads(obj)
        root = _node_from_json(obj["root"])
        rounds = int(obj.get("rounds", 0)) or depth(root)
        if depth(root) > rounds:
            raise ValueError("tree is deeper than the declared round count")
        return cls(root, rounds)

    def view(self, side: str) -> "CpjInstance":
        """Copy holding only ``side``'s distributions."""
        return CpjInstance(_strip(self.root, side), self.rounds)


def _node_to_json(node) -> dict:
    if node.is_leaf:
        return {"output": node.output}
    out: dict[str, Any] = {"owner": node.owner}
    if node.dist_a is not None:
        out["distA"] = list(map(float, node.dist_a))
    if node.dist_b is not None:
        out["distB"] = list(map(float, node.dist_b))
    kids = []
    for i in range(node.n_children):
        c = _node_to_json(node.child(i))
        kids.append({"label": node.label(i), **c})
    out["children"] = kids
    return out


def _node_from_json(obj) -> CpjNode:
    if "children" not in obj:
        if "output" not in obj:
            raise ValueError("leaf node needs an 'output' field")
        return CpjNode(output=obj["output"])
    kids = obj["children"]
    if not kids:
        raise ValueError("inner node needs children")
    return CpjNode(
        owner=obj.get("owner"),
        labels=[str(k["label"]) for k in kids],
        dist_a=obj.get("distA"),
        dist_b=obj.get("distB"),
        children=[_node_from_json(k) for k in kids],
    )


def _strip(node, side: str) -> CpjNode:
    if node.is_leaf:
        return CpjNode(output=node.output)
    kids = [_strip(node.child(i), side) for i in range(node.n_children)]
    labels = [node.label(i) for i in range(node.n_children)]
    if side == "A":
        return CpjNode(node.owner, labels, node.dist_a, None, kids)
    return CpjNode(node.owner, labels, None, node.dist_b, kids)


def level_owners(root) -> list[str]:
    """Owner of each depth; all inner nodes at one depth must agree, so the
    parties know whose turn it is even after their paths diverge."""
    owners: dict[int, str] = {}
    stack = [(root, 0)]
    while stack:
        node, d = stack.pop()
        if node.is_leaf:
            continue
        if owners.setdefault(d, node.owner) != node.owner:
            raise ValueError(f"inner nodes at depth {d} have different owners")
        stack.extend((node.child(i), d + 1) for i in range(node.n_children))
    return [owners[d] for d in sorted(owners)]


def depth(node) -> int:
    if node.is_leaf:
        return 0
    return 1 + max(depth(node.child(i)) for i in range(node.n_children))


# ---------------------------------------------------------------------------
# exact quantities


def edge_divergence(v, w: int) -> float:
    """Signed divergence cost of child ``w`` of ``v`` (owner's over other's)."""
    num, den = (v.dist_a, v.dist_b) if v.owner == "A" else (v.dist_b, v.dist_a)
    pn, pd = num[w], den[w]
    if pn == 0 and pd == 0:
        return 0.0
    if pd == 0:
        return math.inf
    if pn == 0:
        return -math.inf
    return math.log2(pn / pd)


def owner_dist(v) -> np.ndarray:
    return v.dist_a if v.owner == "A" else v.dist_b


def iter_paths(F: CpjInstance) -> Iterator[tuple[tuple, float, float, Any]]:
    """All leaves reachable under the correct distribution.

    Yields (labels, probability, divergence cost, leaf output).
    """
    stack = [(F.root, (), 1.0, 0.0)]
    while stack:
        node, labels, prob, cost = stack.pop()
        if node.is_leaf:
            yield labels, prob, cost, node.output
            continue
        dist = owner_dist(node)
        for w in range(node.n_children - 1, -1, -1):
            if dist[w] <= 0:
                continue
            stack.append((node.child(w), labels + (node.label(w),), prob * dist[w],
                          cost + edge_divergence(node, w)))


def correct_distribution(F: CpjInstance) -> Dist:
    """Exact leaf distribution, keyed by the root-to-leaf label path."""
    paths = sorted((labels, prob) for labels, prob, _, _ in iter_paths(F))
    return Dist([p for _, p in paths], Universe(tuple(l for l, _ in paths)))


def instance_divergence(F: CpjInstance) -> float:
    total = 0.0
    for _, prob, cost, _ in iter_paths(F):
        if math.isinf(cost):
            return math.inf
        total += prob * cost
    return total


def leaf_label_distribution(F: CpjInstance) -> dict:
    """Probability of each leaf output value under the correct distribution."""
    out: dict = {}
    for _, prob, _, value in iter_paths(F):
        out[value] = out.get(value, 0.0) + prob
    return out


# ---------------------------------------------------------------------------
# products


class ProductNode:
    """Tuple of component nodes; children are all combinations.

    Child ``i`` unravels in mixed radix with the first component most
    significant, so its label is the concatenation of component labels.
    """

    def __init__(self, parts: Sequence):
        self.parts = tuple(parts)
        leaves = [p.is_leaf for p in self.parts]
        if any(leaves) and not all(leaves):
            raise ValueError("product components reach leaves at different depths")
        self.is_leaf = leaves[0]
        if not self.is_leaf:
            owners = {p.owner for p in self.parts}
            if len(owners) != 1:
                raise ValueError("product components disagree on the owner of a level")
            self.owner = owners.pop()
            self._radix = tuple(p.n_children for p in self.parts)
            self.n_children = int(np.prod(self._radix))
        else:
            self.owner = None
            self.n_children = 0

    @property
    def output(self):
        return tuple(p.output for p in self.parts) if self.is_leaf else None

    def _split(self, i: int) -> tuple:
        return tuple(int(v) for v in np.unravel_index(i, self._radix))

    def label(self, i: int) -> str:
        return "".join(p.label(c) for p, c in zip(self.parts, self._split(i)))

    @staticmethod
    def _kron(vectors) -> np.ndarray | None:
        if any(v is None for v in vectors):
            return None
        out = np.ones(1)
        for v in vectors:
            out = np.multiply.outer(out, v).reshape(-1)
        return out

    @cached_property
    def dist_a(self):
        return None if self.is_leaf else self._kron([p.dist_a for p in self.parts])

    @cached_property
    def dist_b(self):
        return None if self.is_leaf else self._kron([p.dist_b for p in self.parts])

    def child(self, i: int) -> "ProductNode":
        return ProductNode([p.child(c) for p, c in zip(self.parts, self._split(i))])


def product_instance(instances: Sequence[CpjInstance]) -> CpjInstance:
    if not instances:
        raise ValueError("need at least one instance")
    rounds = {F.rounds for F in instances}
    if len(rounds) != 1:
        raise ValueError("product components must share a depth")
    owners = {F.root.owner for F in instances}
    if len(owners) != 1:
        raise ValueError("product components must share the first owner")
    return CpjInstance(ProductNode([F.root for F in instances]), rounds.pop())


# ---------------------------------------------------------------------------
# sampling


@dataclass
class PathSample:
    labels: tuple
    leaf: Any = None
    divergence_cost: float | None = None
    complete: bool = False


@dataclass
class PathStats:
    bits_A: int = 0
    bits_B: int = 0
    rounds: int = 0
    outcome: str = MATCH
    per_round: list = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.bits_A + self.bits_B


def path_bound(div_signed: float, div_clamped: float, k: int, eps: float, sqrt_coef: float = 5.0) -> float:
    """Bits allowed on a matched k-round path by the multi-round sampling bound."""
    return div_signed + 2 * k * math.log2(1 / eps) + sqrt_coef * math.sqrt(k * div_clamped) + 9 * k


def path_costs(F: CpjInstance, labels: Sequence[str]) -> tuple[float, float]:
    """(signed, per-edge-clamped) divergence cost of the path ``labels``."""
    node, signed, clamped = F.root, 0.0, 0.0
    for lab in labels:
        w = next(i for i in range(node.n_children) if node.label(i) == lab)
        c = edge_divergence(node, w)
        signed += c
        clamped += max(c, 0.0)
        node = node.child(w)
    return signed, clamped


def path_config(eps: float, cfg: SamplerConfig | None = None) -> SamplerConfig:
    """Per-node sampler config; neither party knows both sides, so t_max is the cap."""
    cfg = cfg or SamplerConfig(eps)
    if cfg.eps != eps:
        cfg = SamplerConfig(eps, cfg.t_max, None, cfg.t_cap, cfg.scan_factor)
    return cfg if cfg.t_max is not None else SamplerConfig(eps, cfg.t_cap, cfg.k_bits, cfg.t_cap, cfg.scan_factor)


def sample_path(F: CpjInstance, seed: SharedSeed, eps: float, cfg: SamplerConfig | None = None,
                with_costs: bool = True):
    """Walk the tree with one sampler run per level (stream = depth).

    Each party tracks its own current node; the owner plays the sender with
    its own distribution, the other party receives with its estimate.
    Returns (path of A, path of B, stats).
    """
    cfg = path_config(eps, cfg)
    nodes = {"A": F.root, "B": F.root}
    labels = {"A": [], "B": []}
    stats = PathStats()
    d = 0
    while True:
        na, nb = nodes["A"], nodes["B"]
        if na.is_leaf or nb.is_leaf:
            if not (na.is_leaf and nb.is_leaf):
                stats.outcome = MISMATCH
                live = "B" if na.is_leaf else "A"
                if nodes[live].owner == live:
                    # it opens the next round before noticing the peer left
                    bits = opening_bits(owner_dist_for(nodes[live], live), seed, cfg, d)
                    if live == "A":
                        stats.bits_A += bits
                    else:
                        stats.bits_B += bits
            break
        owner = na.owner
        if nb.owner != owner:
            raise ValueError("ownership differs at equal depth")
        snd, rcv = owner, other(owner)
        p = np.ascontiguousarray(owner_dist_for(nodes[snd], snd))
        q = np.ascontiguousarray(owner_dist_for(nodes[rcv], rcv))
        a, b, code, bs, br, t, k, i = _run_codes(p, q, seed, cfg, d)
        rs = RunStats(int(bs) if snd == "A" else int(br), int(br) if snd == "A" else int(bs),
                      int(t), int(k), OUTCOMES[code], int(i))
        stats.per_round.append(rs)
        stats.bits_A += rs.bits_A
        stats.bits_B += rs.bits_B
        stats.rounds += 1
        d += 1
        if a >= 0:
            labels[snd].append(nodes[snd].label(a))
            nodes[snd] = nodes[snd].child(a)
        if b < 0:
            stats.outcome = OUTCOMES[code]
            break
        labels[rcv].append(nodes[rcv].label(b))
        nodes[rcv] = nodes[rcv].child(b)
    if stats.outcome == MATCH and labels["A"] != labels["B"]:
        stats.outcome = MISMATCH
    paths = []
    for side in OWNERS:
        node = nodes[side]
        ps = PathSample(tuple(labels[side]), node.output if node.is_leaf else None,
                        complete=node.is_leaf)
        if with_costs and ps.complete:
            try:
                ps.divergence_cost = path_costs(F, ps.labels)[0]
            except (TypeError, KeyError):
                ps.divergence_cost = None
        paths.append(ps)
    return paths[0], paths[1], stats


def opening_bits(p, seed: SharedSeed, cfg: SamplerConfig, stream: int) -> int:
    """Bits of a sender's first message: k, plus the first hash burst unless k overflows."""
    p = np.ascontiguousarray(p, dtype=np.float64)
    x, i = K.pick(p, np.uint64(seed.base(TAG_TAPE, stream)), cfg.scan_factor * len(p))
    if x < 0 or (i - 1) // len(p) + 1 > (1 << cfg.k_bits):
        return cfg.k_bits
    return cfg.k_bits + s_t(cfg.eps, 0)


def owner_dist_for(node, side: str) -> np.ndarray:
    """``side``'s own distribution at ``node``."""
    d = node.dist_a if side == "A" else node.dist_b
    if d is None:
        raise ValueError(f"node carries no distribution for {side}")
    return d


class PathEndpoint:
    """One party's side of :func:`sample_path` as a message-driven machine.

    Runs a sampler endpoint per level (sender where it owns the node) and
    follows its own view of the path. It stops at a leaf, on an abort, or
    when the peer goes away; ``stop`` records which.
    """

    def __init__(self, role: str, F: CpjInstance, seed: SharedSeed, eps: float,
                 cfg: SamplerConfig | None = None):
        self.role = role
        self.node = F.root
        self.seed = seed
        self.cfg = path_config(eps, cfg)
        self.labels: list[str] = []
        self.depth = 0
        self.rounds = 0
        self.sub = None
        self.done = False
        self.stop = None
        self.bits_sent = 0

    def _open(self) -> list:
        if self.node.is_leaf:
            self.done, self.stop = True, "leaf"
            return []
        dist = owner_dist_for(self.node, self.role)
        machine = Sender if self.node.owner == self.role else Receiver
        self.sub = machine(dist, self.seed, self.cfg, self.depth)
        return self._after(self.sub.start())

    def _after(self, msgs: list) -> list:
        self.bits_sent += sum(len(m) for m in msgs)
        if not self.sub.done:
            return msgs
        return msgs + self._advance()

    def _advance(self) -> list:
        sub = self.sub
        self.depth += 1
        self.rounds += 1
        if sub.output is not None and (isinstance(sub, Sender) or sub.outcome == "success"):
            self.labels.append(self.node.label(sub.output))
            self.node = self.node.child(sub.output)
        if sub.outcome != "success":
            self.done, self.stop = True, sub.outcome
            return []
        return self._open()

    def start(self) -> list:
        return self._open()

    def receive(self, msg) -> list:
        if self.done:
            raise ProtocolError("path endpoint already finished")
        return self._after(self.sub.receive(msg))

    def peer_closed(self):
        if not self.done:
            if self.sub is not None:
                self.sub.peer_closed()
            self.done, self.stop = True, "peer_closed"

    def result(self) -> PathSample:
        leaf = self.node.is_leaf
        return PathSample(tuple(self.labels), self.node.output if leaf else None, complete=leaf)


def combine_paths(a: PathEndpoint, b: PathEndpoint) -> PathStats:
    """Joint accounting of two finished endpoints, as :func:`sample_path` reports it."""
    stats = PathStats(a.bits_sent, b.bits_sent, max(a.rounds, b.rounds))
    stops = {a.stop, b.stop}
    if a.stop == b.stop == "leaf":
        stats.outcome = MATCH if a.labels == b.labels else MISMATCH
    elif ABORT_K in stops:
        stats.outcome = ABORT_K
    elif ABORT_T in stops:
        stats.outcome = ABORT_T
    else:
        stats.outcome = MISMATCH
    return stats


def sample_path_stepwise(FA: CpjInstance, FB: CpjInstance, seed: SharedSeed, eps: float,
                         cfg: SamplerConfig | None = None):
    """:func:`sample_path` run by two endpoints that each hold only their own view."""
    ea, eb = PathEndpoint("A", FA, seed, eps, cfg), PathEndpoint("B", FB, seed, eps, cfg)
    first, second = (ea, eb) if FA.root.owner != "B" else (eb, ea)
    drive(first, second)
    return ea.result(), eb.result(), combine_paths(ea, eb)


# ---------------------------------------------------------------------------
# promise problem


def solve_cpj(F: CpjInstance, seed: SharedSeed, eps: float, cfg: SamplerConfig | None = None):
    """A's answer: the output label of the leaf it reached (None if cut short)."""
    pa, _, stats = sample_path(F, seed, eps, cfg, with_costs=False)
    return (pa.leaf if pa.complete else None), stats


def replicas_for(n: int) -> int:
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


def solve_cpj_n(instances: Sequence[CpjInstance], seed: SharedSeed, eps: float,
                cfg: SamplerConfig | None = None):
    """Answer n promise instances from one path of their replicated product.

    Each instance is copied ceil(log2 n) times (once when n = 1); the answer
    for an instance is the majority over its copies, ties going to the first
    copy. Returns (answers, stats).
    """
    n = len(instances)
    reps = replicas_for(n)
    copies = [F for F in instances for _ in range(reps)]
    prod = product_instance(copies)
    pa, _, stats = sample_path(prod, seed, eps, cfg, with_costs=False)
    if not pa.complete:
        return [None] * n, stats
    answers = []
    for i in range(n):
        votes = list(pa.leaf[i * reps:(i + 1) * reps])
        tally: dict = {}
        for v in votes:
            tally[v] = tally.get(v, 0) + 1
        best = max(tally.values())
        answers.append(next(v for v in votes if tally[v] == best))
    return answers, stats


# ---------------------------------------------------------------------------
# generators


def random_instance(rng: np.random.Generator, rounds: int, branching: int = 2,
                    first_owner: str = "A", alpha: float = 1.0, closeness: float = 0.0) -> CpjInstance:
    """Complete tree of the given depth with Dirichlet(alpha) distributions.

    ``closeness`` in [0, 1) pulls the non-owner's estimate toward the
    owner's distribution (0 draws it independently).
    """
    counter = [0]

    def build(d: int, owner: str) -> CpjNode:
        if d == rounds:
            counter[0] += 1
            return CpjNode(output=counter[0] - 1)
        labels = binary_labels(branching)
        own = rng.dirichlet(np.full(branching, alpha))
        est = (1 - closeness) * rng.dirichlet(np.full(branching, alpha)) + closeness * own
        da, db = (own, est) if owner == "A" else (est, own)
        kids = [build(d + 1, other(owner)) for _ in range(branching)]
        return CpjNode(owner, labels, da, db, kids)

    return CpjInstance(build(0, first_owner), rounds)


def binary_labels(n: int) -> list[str]:
    """A prefix-free code for n children ("0"/"1" when n = 2)."""
    if n == 1:
        return [""]
    width = math.ceil(math.log2(n))
    return [format(i, f"0{width}b") for i in range(n)]


def label_for_promise(F: CpjInstance, margin: float, value=1) -> CpjInstance:
    """Relabel leaves with bits so the correct distribution puts more than
    ``margin`` of its mass on ``value``: the least likely leaves carrying
    less than 1 - margin in total get the other bit."""
    paths = sorted(iter_paths(F), key=lambda r: r[1])
    flip, mass = set(), 0.0
    for labels, prob, _, _ in paths:
        if mass + prob < 1 - margin - NORM_TOL:
            flip.add(labels)
            mass += prob
        else:
            break

    def relabel(node, prefix):
        if node.is_leaf:
            return CpjNode(output=(1 - value) if prefix in flip else value)
        kids = [relabel(node.child(i), prefix + (node.label(i),)) for i in range(node.n_children)]
        return CpjNode(node.owner, [node.label(i) for i in range(node.n_children)],
                       node.dist_a, node.dist_b, kids)

    return CpjInstance(relabel(F.root, ()), F.rounds)


def promise_instance(rng: np.random.Generator, rounds: int, margin: float = 0.95,
                     max_divergence: float | None = None, value=None, alpha: float = 1.0) -> CpjInstance:
    """Binary promise instance whose divergence cost is at most ``max_divergence``.

    The non-owner estimate starts independent and is blended toward the
    owner's distribution until the bound holds (0 forces equal sides).
    """
    base = random_instance(rng, rounds, 2, "A", alpha, 0.0)
    if value is None:
        value = int(rng.integers(2))
    lam = 1.0
    while True:
        F = _blend(base, lam)
        if max_divergence is None or instance_divergence(F) <= max_divergence:
            break
        lam = lam / 2 if lam > 1e-6 else 0.0
    return label_for_promise(F, margin, value)


def _blend(F: CpjInstance, lam: float) -> CpjInstance:
    def walk(node):
        if node.is_leaf:
            return CpjNode(output=node.output)
        own = owner_dist(node)
        est = node.dist_b if node.owner == "A" else node.dist_a
        mixed = lam * est + (1 - lam) * own
        da, db = (own, mixed) if node.owner == "A" else (mixed, own)
        kids = [walk(node.child(i)) for i in range(node.n_children)]
        return CpjNode(node.owner, [node.label(i) for i in range(node.n_children)], da, db, kids)

    return CpjInstance(walk(F.root), F.rounds)


def zero_divergence(F: CpjInstance) -> CpjInstance:
    return _blend(F, 0.0)
