"""Two-party protocol trees, exact information costs and compression.

A protocol is a list of trees, one per value ``r`` of the public
randomness. Each inner node is owned by one party and carries a table whose
row ``x`` (or ``y``) is the owner's distribution over children on that
input. Transcripts are pairs ``(r, labels)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Sequence

import numpy as np

from .cpj import (CpjInstance, binary_labels, check_prefix_free, instance_divergence,
                  product_instance, sample_path)
from .info import NORM_TOL, Dist, JointDist, Universe, conditional_mutual_information
from .onesamp import MATCH, SamplerConfig
from .sharedrand import TAG_INPUT, TAG_PUBLIC, SharedSeed, sample_index

STATE_CAP = 10**6
BELIEF_GUARD = 1e-12


class ZeroPrefixError(ValueError):
    """A belief lost all its mass: the prefix has probability zero."""


class PNode:
    def __init__(self, owner=None, labels=(), table=None, children=(), output=None):
        self.children = list(children)
        self.labels = tuple(labels)
        self.owner = owner
        self.output = output
        self.table = None
        if self.children:
            if owner not in ("A", "B"):
                raise ValueError(f"inner node owner must be A or B, got {owner!r}")
            if len(self.labels) != len(self.children):
                raise ValueError("one label per child required")
            check_prefix_free(self.labels)
            t = np.array(table, dtype=np.float64)
            if t.ndim != 2 or t.shape[1] != len(self.children):
                raise ValueError("table must have one column per child")
            if np.any(t < 0) or not np.all(np.isfinite(t)):
                raise ValueError("table entries must be finite and nonnegative")
            sums = t.sum(axis=1)
            if np.any(np.abs(sums - 1) > NORM_TOL):
                raise ValueError("every table row must sum to 1")
            self.table = t / sums[:, None]

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def n_children(self) -> int:
        return len(self.children)

    def label(self, i: int) -> str:
        return self.labels[i]

    def child(self, i: int) -> "PNode":
        return self.children[i]


@dataclass
class Transcript:
    r: int
    labels: tuple
    output: Any = None

    @property
    def key(self) -> tuple:
        return (self.r, self.labels)


class ProtocolTree:
    """Protocol over inputs ``range(nx)`` x ``range(ny)``.

    Every node at a given depth of a given tree has the same owner, so both
    parties always agree whose turn it is (even after their views diverge).
    """

    def __init__(self, roots: Sequence[PNode], nx: int, ny: int, public=None):
        self.roots = list(roots)
        if not self.roots:
            raise ValueError("protocol needs at least one tree")
        self.nx, self.ny = int(nx), int(ny)
        self.public = Dist(np.full(len(self.roots), 1 / len(self.roots)) if public is None else public).probs
        if len(self.public) != len(self.roots):
            raise ValueError("one public-randomness probability per tree required")
        for root in self.roots:
            self._validate(root)

    def _validate(self, root: PNode) -> None:
        owners: dict[int, str] = {}
        stack = [(root, 0)]
        while stack:
            node, d = stack.pop()
            if node.is_leaf:
                continue
            if owners.setdefault(d, node.owner) != node.owner:
                raise ValueError(f"nodes at depth {d} have different owners")
            rows = self.nx if node.owner == "A" else self.ny
            if node.table.shape[0] != rows:
                raise ValueError(f"{node.owner}-owned table needs {rows} rows")
            stack.extend((c, d + 1) for c in node.children)

    @property
    def depth(self) -> int:
        def dep(n):
            return 0 if n.is_leaf else 1 + max(dep(c) for c in n.children)
        return max(dep(r) for r in self.roots)

    def leaves(self):
        """Yields (r, labels, a_vec, b_vec, output): the path probability on
        inputs (x, y) given r is ``a_vec[x] * b_vec[y]``."""
        for r, root in enumerate(self.roots):
            stack = [(root, (), np.ones(self.nx), np.ones(self.ny))]
            while stack:
                node, labels, a, b = stack.pop()
                if node.is_leaf:
                    yield r, labels, a, b, node.output
                    continue
                for w in range(node.n_children - 1, -1, -1):
                    col = node.table[:, w]
                    if node.owner == "A":
                        na, nb = a * col, b
                    else:
                        na, nb = a, b * col
                    stack.append((node.child(w), labels + (node.labels[w],), na, nb))

    # -- json -------------------------------------------------------------
    def to_json(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "public": self.public.tolist(),
                "roots": [_pnode_to_json(r) for r in self.roots]}

    @classmethod
    def from_json(cls, obj) -> "ProtocolTree":
        if isinstance(obj, str):
            obj = json.loads(obj)
        roots = obj["roots"] if "roots" in obj else [obj["root"]]
        return cls([_pnode_from_json(r) for r in roots], obj["nx"], obj["ny"], obj.get("public"))


def _pnode_to_json(node: PNode) -> dict:
    if node.is_leaf:
        return {"output": node.output}
    return {"owner": node.owner, "table": node.table.tolist(),
            "children": [{"label": l, **_pnode_to_json(c)} for l, c in zip(node.labels, node.children)]}


def _pnode_from_json(obj) -> PNode:
    if "children" not in obj:
        out = obj.get("output")
        return PNode(output=tuple(out) if isinstance(out, list) else out)
    kids = obj["children"]
    return PNode(obj["owner"], [str(k["label"]) for k in kids], obj["table"],
                 [_pnode_from_json(k) for k in kids])


def as_prior(mu) -> np.ndarray:
    j = mu if isinstance(mu, JointDist) else JointDist(mu)
    if j.ndim != 2:
        raise ValueError("prior must be a two-way joint")
    return j.probs


# ---------------------------------------------------------------------------
# running and exact quantities


def run_protocol(pi: ProtocolTree, x: int, y: int, rng: np.random.Generator) -> Transcript:
    r = int(rng.choice(len(pi.roots), p=pi.public))
    node, labels = pi.roots[r], []
    while not node.is_leaf:
        row = node.table[x] if node.owner == "A" else node.table[y]
        w = int(rng.choice(node.n_children, p=row))
        labels.append(node.labels[w])
        node = node.children[w]
    return Transcript(r, tuple(labels), node.output)


def transcript_distribution(pi: ProtocolTree, mu, cap: int = STATE_CAP) -> JointDist:
    """Exact joint of (x, y, transcript); transcripts are keyed ``(r, labels)``."""
    m = as_prior(mu)
    if m.shape != (pi.nx, pi.ny):
        raise ValueError("prior shape does not match the protocol's inputs")
    keys, cols = [], []
    for r, labels, a, b, _ in pi.leaves():
        keys.append((r, labels))
        cols.append(pi.public[r] * np.outer(a, b))
        if len(keys) * pi.nx * pi.ny > cap:
            raise ValueError(f"transcript distribution exceeds {cap} joint states")
    joint = np.stack(cols, axis=-1) * m[:, :, None]
    return JointDist(joint, (Universe.of_size(pi.nx), Universe.of_size(pi.ny), Universe(tuple(keys))))


def internal_info_cost(pi: ProtocolTree, mu) -> float:
    """I(T;X|Y) + I(T;Y|X)."""
    j = transcript_distribution(pi, mu)
    return conditional_mutual_information(j, (2,), (0,), (1,)) + conditional_mutual_information(j, (2,), (1,), (0,))


def external_info_cost(pi: ProtocolTree, mu) -> float:
    """I(XY;T)."""
    return conditional_mutual_information(transcript_distribution(pi, mu), (0, 1), (2,))


def comm_complexity(pi: ProtocolTree) -> int:
    def cc(n):
        return 0 if n.is_leaf else max(len(l) + cc(c) for l, c in zip(n.labels, n.children))
    return max(cc(r) for r in pi.roots)


def fix_public(pi: ProtocolTree, r: int) -> ProtocolTree:
    """The protocol with public randomness fixed to ``r``."""
    return ProtocolTree([pi.roots[r]], pi.nx, pi.ny)


def output_error(pi: ProtocolTree, mu, f, coord=None) -> float:
    """P[output != f(x, y)]; with ``coord`` the output is a tuple and inputs
    are mixed-radix encoded ``n``-tuples (see :func:`parallel_protocol`)."""
    m = as_prior(mu)
    err = 0.0
    for r, _, a, b, out in pi.leaves():
        mass = pi.public[r] * np.outer(a, b) * m
        for x, y in zip(*np.nonzero(mass)):
            if coord is None:
                wrong = out != f(int(x), int(y))
            else:
                i, (n, bx, by) = coord
                xi = _digits(int(x), bx, n)[i]
                yi = _digits(int(y), by, n)[i]
                wrong = out[i] != f(xi, yi)
            err += mass[x, y] * wrong
    return float(err)


# ---------------------------------------------------------------------------
# the CPJ instance F_pi(x, y, r)


class BeliefNode:
    """Node of F_pi: wraps a protocol node plus each party's belief.

    ``belief_a`` is A's unnormalized posterior over y (None when A's input
    is unknown, e.g. in B's own view), ``belief_b`` B's over x. At an
    A-owned node A's distribution is the table row for x, and B's estimate
    is the table mixed over its belief; messages update only the
    non-owner's belief, since the owner's message carries no news about the
    other input to the owner.
    """

    def __init__(self, node: PNode, x, y, belief_a, belief_b):
        self.node, self.x, self.y = node, x, y
        self.belief_a, self.belief_b = belief_a, belief_b
        self.owner = node.owner
        self.is_leaf = node.is_leaf
        self.output = node.output
        self.n_children = node.n_children

    def label(self, i: int) -> str:
        return self.node.labels[i]

    @staticmethod
    def _mix(belief, table) -> np.ndarray:
        mass = belief.sum()
        if mass <= BELIEF_GUARD:
            raise ZeroPrefixError("belief has no mass on this prefix")
        d = belief @ table / mass
        return d / d.sum()

    @cached_property
    def dist_a(self):
        if self.is_leaf or self.x is None:
            return None
        if self.owner == "A":
            return self.node.table[self.x]
        return self._mix(self.belief_a, self.node.table)

    @cached_property
    def dist_b(self):
        if self.is_leaf or self.y is None:
            return None
        if self.owner == "B":
            return self.node.table[self.y]
        return self._mix(self.belief_b, self.node.table)

    def child(self, w: int) -> "BeliefNode":
        col = self.node.table[:, w]
        ba, bb = self.belief_a, self.belief_b
        if self.owner == "A":
            bb = None if bb is None else bb * col
        else:
            ba = None if ba is None else ba * col
        return BeliefNode(self.node.children[w], self.x, self.y, ba, bb)


def build_cpj(pi: ProtocolTree, x, y, r: int, mu) -> CpjInstance:
    """F_pi(x, y, r). Either input may be None to build one party's view."""
    m = as_prior(mu)
    ba = None if x is None else m[x, :].copy()
    bb = None if y is None else m[:, y].copy()
    for b in (ba, bb):
        if b is not None and b.sum() <= BELIEF_GUARD:
            raise ZeroPrefixError("input has zero probability under the prior")
    return CpjInstance(BeliefNode(pi.roots[r], x, y, ba, bb), max(pi.depth, 1))


def expected_divergence(pi: ProtocolTree, mu) -> float:
    """E over (x, y, r) of the divergence cost of F_pi(x, y, r)."""
    m = as_prior(mu)
    total = 0.0
    for r in range(len(pi.roots)):
        for x, y in zip(*np.nonzero(m)):
            total += pi.public[r] * m[x, y] * instance_divergence(build_cpj(pi, int(x), int(y), r, m))
    return float(total)


# ---------------------------------------------------------------------------
# compression


def public_inputs(seed: SharedSeed, mu, pi: ProtocolTree, index: int = 0) -> tuple[int, int, int]:
    """(x, y, r) drawn from the seed's input and public-randomness domains."""
    m = as_prior(mu)
    cell = sample_index(seed.uniform(TAG_INPUT, index), m.reshape(-1))
    r = sample_index(seed.uniform(TAG_PUBLIC, index), pi.public)
    x, y = divmod(cell, m.shape[1])
    return int(x), int(y), int(r)


@dataclass
class CompressResult:
    x: int
    y: int
    r: int
    transcript_A: tuple | None
    transcript_B: tuple | None
    stats: Any

    @property
    def matched(self) -> bool:
        return self.stats.outcome == MATCH


def compress(pi: ProtocolTree, mu, eps: float, seed: SharedSeed, x=None, y=None, r=None,
             cfg: SamplerConfig | None = None) -> CompressResult:
    """Simulate pi on (x, y, r) by sampling a path of F_pi.

    Unspecified inputs are drawn from the seed (x, y from mu, r from the
    public distribution). Each party's transcript is ``(r, labels)``, or
    None when its walk was cut short.
    """
    sx, sy, sr = public_inputs(seed, mu, pi)
    x = sx if x is None else x
    y = sy if y is None else y
    r = sr if r is None else r
    F = build_cpj(pi, x, y, r, mu)
    pa, pb, stats = sample_path(F, seed, eps, cfg, with_costs=False)
    ta = (r, pa.labels) if pa.complete else None
    tb = (r, pb.labels) if pb.complete else None
    return CompressResult(x, y, r, ta, tb, stats)


def amortized_run(pi: ProtocolTree, mu, n: int, eps: float, seed: SharedSeed,
                  cfg: SamplerConfig | None = None):
    """Compress n independent copies at once via the product of their F_pi.

    The product of F_pi(x_i, y_i, r_i) is F_{pi^n}(x, y, r) for the parallel
    protocol, so this is the compressed simulation of pi^n. Returns
    (inputs, stats).
    """
    inputs = [public_inputs(seed, mu, pi, i) for i in range(n)]
    F = product_instance([build_cpj(pi, x, y, r, mu) for x, y, r in inputs])
    _, _, stats = sample_path(F, seed, eps, cfg, with_costs=False)
    return inputs, stats


# ---------------------------------------------------------------------------
# parallel repetition


def _digits(v: int, base: int, n: int) -> list[int]:
    out = []
    for _ in range(n):
        v, d = divmod(v, base)
        out.append(d)
    return out[::-1]


def _mixed_index(digits: Sequence[int], base: int) -> int:
    v = 0
    for d in digits:
        v = v * base + d
    return v


def power_prior(mu, n: int) -> np.ndarray:
    """mu^n on mixed-radix encoded tuples (first coordinate most significant)."""
    m = as_prior(mu)
    out = np.ones((1, 1))
    for _ in range(n):
        out = np.einsum("ab,cd->acbd", out, m).reshape(out.shape[0] * m.shape[0], out.shape[1] * m.shape[1])
    return out


def is_uniform(pi: ProtocolTree) -> bool:
    k = pi.depth
    for root in pi.roots:
        stack = [(root, 0)]
        while stack:
            node, d = stack.pop()
            if node.is_leaf:
                if d != k:
                    return False
                continue
            if sorted(node.labels) != ["0", "1"]:
                return False
            stack.extend((c, d + 1) for c in node.children)
    return True


def parallel_protocol(pi: ProtocolTree, n: int, cap: int = STATE_CAP) -> ProtocolTree:
    """pi^n: round d sends bit d of every copy, copy 1 first in each label."""
    if n < 1:
        raise ValueError("n must be positive")
    if not is_uniform(pi):
        raise ValueError("parallel repetition needs one-bit labels and uniform depth")
    NX, NY = pi.nx ** n, pi.ny ** n
    if max(NX, NY) * 2 ** n > cap:
        raise ValueError("parallel protocol tables exceed the state cap")
    xs = np.array([_digits(v, pi.nx, n) for v in range(NX)])
    ys = np.array([_digits(v, pi.ny, n) for v in range(NY)])
    combos = [_digits(c, 2, n) for c in range(2 ** n)]

    def build(parts: Sequence[PNode]) -> PNode:
        if parts[0].is_leaf:
            return PNode(output=tuple(p.output for p in parts))
        owner = parts[0].owner
        inputs = xs if owner == "A" else ys
        table = np.ones((len(inputs), 2 ** n))
        labels, kids = [], []
        for c, bits in enumerate(combos):
            for i, (p, w) in enumerate(zip(parts, bits)):
                table[:, c] *= p.table[inputs[:, i], w]
            labels.append("".join(p.labels[w] for p, w in zip(parts, bits)))
            kids.append(build([p.children[w] for p, w in zip(parts, bits)]))
        return PNode(owner, labels, table, kids)

    R = len(pi.roots)
    roots, public = [], []
    for rr in range(R ** n):
        rs = _digits(rr, R, n)
        roots.append(build([pi.roots[r] for r in rs]))
        public.append(float(np.prod([pi.public[r] for r in rs])))
    return ProtocolTree(roots, NX, NY, public)


def single_copy_from_n(pi_n: ProtocolTree, mu, n: int) -> ProtocolTree:
    """The single-copy protocol tau built from a protocol for n copies.

    Public randomness is (J, x_<J, y_>J, r). A privately fills x_>J from mu
    conditioned on y_>J, B fills y_<J conditioned on x_<J, and the real
    inputs sit at coordinate J. The private draws are folded into the node
    tables: a node's row is the owner's message distribution averaged over
    its private coordinates, weighted by their posterior given the owner's
    own earlier messages. Leaf outputs are coordinate J of pi_n's outputs.
    """
    m = as_prior(mu)
    nx, ny = m.shape
    if pi_n.nx != nx ** n or pi_n.ny != ny ** n:
        raise ValueError("pi_n inputs must be n-tuples of mu's inputs")
    px, py = m.sum(axis=1), m.sum(axis=0)
    roots, public = [], []
    for J in range(n):
        for pre in range(nx ** J):
            xpre = _digits(pre, nx, J)
            for post in range(ny ** (n - J - 1)):
                ypost = _digits(post, ny, n - J - 1)
                w = np.prod([px[v] for v in xpre]) * np.prod([py[v] for v in ypost]) / n
                if w <= 0:
                    continue
                for r, root in enumerate(pi_n.roots):
                    if pi_n.public[r] <= 0:
                        continue
                    roots.append(_tau_tree(root, m, n, J, xpre, ypost))
                    public.append(w * pi_n.public[r])
    return ProtocolTree(roots, nx, ny, public)


def _tau_tree(root: PNode, m: np.ndarray, n: int, J: int, xpre, ypost) -> PNode:
    nx, ny = m.shape
    n_xpost, n_ypre = n - J - 1, J
    # A's private coordinates x_>J given public y_>J, B's y_<J given public x_<J
    cond_x = [m[:, yv] / m[:, yv].sum() for yv in ypost]
    cond_y = [m[xv, :] / m[xv, :].sum() for xv in xpre]
    xposts = [_digits(c, nx, n_xpost) for c in range(nx ** n_xpost)]
    ypres = [_digits(c, ny, n_ypre) for c in range(ny ** n_ypre)]
    prior_a = np.array([np.prod([cond_x[i][v] for i, v in enumerate(c)]) for c in xposts])
    prior_b = np.array([np.prod([cond_y[i][v] for i, v in enumerate(c)]) for c in ypres])
    # full input index for own input u and private completion c
    idx_a = np.array([[_mixed_index(list(xpre) + [u] + c, nx) for c in xposts] for u in range(nx)])
    idx_b = np.array([[_mixed_index(c + [u] + list(ypost), ny) for c in ypres] for u in range(ny)])

    def build(node: PNode, wa: np.ndarray, wb: np.ndarray) -> PNode:
        if node.is_leaf:
            out = node.output
            return PNode(output=out[J] if isinstance(out, tuple) else out)
        if node.owner == "A":
            rows = node.table[idx_a]                      # (nx, n_priv, children)
            weights = wa
        else:
            rows = node.table[idx_b]
            weights = wb
        mass = weights.sum(axis=1, keepdims=True)
        safe = np.where(mass > 0, mass, 1.0)
        table = np.einsum("uc,ucw->uw", weights, rows) / safe
        # inputs whose own history is impossible: any row will do
        table[mass[:, 0] <= 0] = 1.0 / node.n_children
        table /= table.sum(axis=1, keepdims=True)
        kids = []
        for w in range(node.n_children):
            if node.owner == "A":
                kids.append(build(node.children[w], wa * rows[:, :, w], wb))
            else:
                kids.append(build(node.children[w], wa, wb * rows[:, :, w]))
        return PNode(node.owner, node.labels, table, kids)

    wa0 = np.tile(prior_a, (nx, 1))
    wb0 = np.tile(prior_b, (ny, 1))
    return build(root, wa0, wb0)


# ---------------------------------------------------------------------------
# generators


def random_protocol(rng: np.random.Generator, depth: int, nx: int, ny: int, n_public: int = 1,
                    branching: int = 2, alpha: float = 1.0, sparsity: float = 0.2,
                    first_owner: str = "A") -> ProtocolTree:
    """Complete tree with alternating owners and Dirichlet table rows.

    With probability ``sparsity`` a row is replaced by a point mass, so
    deterministic messages show up too.
    """
    labels = binary_labels(branching)
    counter = [0]

    def build(d: int, owner: str) -> PNode:
        if d == depth:
            counter[0] += 1
            return PNode(output=(counter[0] - 1) % 2)
        rows = nx if owner == "A" else ny
        table = rng.dirichlet(np.full(branching, alpha), size=rows)
        for i in range(rows):
            if rng.random() < sparsity:
                table[i] = 0
                table[i, rng.integers(branching)] = 1
        nxt = "B" if owner == "A" else "A"
        return PNode(owner, labels, table, [build(d + 1, nxt) for _ in range(branching)])

    roots = [build(0, first_owner) for _ in range(n_public)]
    return ProtocolTree(roots, nx, ny, rng.dirichlet(np.ones(n_public)))


def random_prior(rng: np.random.Generator, nx: int, ny: int, zeros: float = 0.1) -> np.ndarray:
    m = rng.dirichlet(np.ones(nx * ny)).reshape(nx, ny)
    m[rng.random((nx, ny)) < zeros] = 0
    if m.sum() == 0:
        m[0, 0] = 1
    return m / m.sum()


def uniform_prior(nx: int, ny: int) -> np.ndarray:
    return np.full((nx, ny), 1 / (nx * ny))


def binary_entropy(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def crossover_for_entropy(h: float) -> float:
    """delta in [0, 1/2] with binary entropy h (bisection)."""
    lo, hi = 0.0, 0.5
    for _ in range(100):
        mid = (lo + hi) / 2
        if binary_entropy(mid) < h:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def noisy_reveal_protocol(bits: int = 3, rounds: int = 6, delta: float | None = None) -> ProtocolTree:
    """Owners alternate (A first); in round d the owner sends bit d // 2 of
    its input, flipped with probability ``delta``. The default delta has
    binary entropy 2/3, so with uniform 3-bit inputs each side leaks one bit
    and the internal information cost is 2.
    """
    if delta is None:
        delta = crossover_for_entropy(2 / 3)
    size = 2 ** bits
    bit_of = np.array([[(v >> (bits - 1 - j)) & 1 for j in range(bits)] for v in range(size)])

    def build(d: int) -> PNode:
        if d == rounds:
            return PNode(output=0)
        j = (d // 2) % bits
        b = bit_of[:, j]
        table = np.stack([np.where(b == 0, 1 - delta, delta), np.where(b == 1, 1 - delta, delta)], axis=1)
        owner = "A" if d % 2 == 0 else "B"
        return PNode(owner, ["0", "1"], table, [build(d + 1), build(d + 1)])

    return ProtocolTree([build(0)], size, size)


def reveal_protocol(bits: int) -> ProtocolTree:
    """A sends x verbatim, one bit per round; B stays silent."""
    size = 2 ** bits

    def build(d: int) -> PNode:
        if d == bits:
            return PNode(output=0)
        b = np.array([(v >> (bits - 1 - d)) & 1 for v in range(size)])
        table = np.stack([1.0 - b, b.astype(float)], axis=1)
        return PNode("A", ["0", "1"], table, [build(d + 1), build(d + 1)])

    return ProtocolTree([build(0)], size, 1)


def and_protocol(bits: int = 2) -> ProtocolTree:
    """A sends the low bit of x, then B answers with its low bit AND A's
    bit; the output is that last bit. Computes f(x, y) = x0 & y0 exactly."""
    size = 2 ** bits
    lo = np.array([v & 1 for v in range(size)])
    a_tab = np.stack([1.0 - lo, lo.astype(float)], axis=1)
    b_zero = np.tile([1.0, 0.0], (size, 1))
    b_and = np.stack([1.0 - lo, lo.astype(float)], axis=1)
    root = PNode("A", ["0", "1"], a_tab, [
        PNode("B", ["0", "1"], b_zero, [PNode(output=0), PNode(output=1)]),
        PNode("B", ["0", "1"], b_and, [PNode(output=0), PNode(output=1)]),
    ])
    return ProtocolTree([root], size, size)
