"""Independent reference computations used by the tests.

These avoid the package's own helpers: plain loops over dictionaries and
``math.log2``, written from the definitions.
"""

import itertools
import math

import numpy as np


def entropy_ref(probs):
    return sum(-p * math.log2(p) for p in probs if p > 0)


def kl_ref(p, q):
    total = 0.0
    for a, b in zip(p, q):
        if a == 0:
            continue
        if b == 0:
            return math.inf
        total += a * (math.log2(a) - math.log2(b))
    return total


def cmi_ref(joint, a_axes, b_axes, c_axes=()):
    """I(A;B|C) as sum p(a,b,c) log p(a,b,c)p(c) / (p(a,c)p(b,c))."""
    joint = np.asarray(joint)
    marg = {}

    def key(idx, axes):
        return tuple(idx[i] for i in axes)

    for idx in itertools.product(*map(range, joint.shape)):
        p = joint[idx]
        if p == 0:
            continue
        for name, axes in (("abc", a_axes + b_axes + c_axes), ("ac", a_axes + c_axes),
                           ("bc", b_axes + c_axes), ("c", c_axes)):
            k = (name, key(idx, axes))
            marg[k] = marg.get(k, 0.0) + p
    total = 0.0
    for (name, k), p in marg.items():
        if name != "abc":
            continue
        # recover the pieces of this cell from the abc key
        na, nb = len(a_axes), len(b_axes)
        a, b, c = k[:na], k[na:na + nb], k[na + nb:]
        total += p * math.log2(p * marg[("c", c)] / (marg[("ac", a + c)] * marg[("bc", b + c)]))
    return total


def divergence_identity_ref(pi, mu):
    """E_{x,y,r}[divergence cost of F_pi] by summing node by node.

    For an A-owned node v reached with probability pub(r) a_v(x) b_v(y),
    B's estimate of the next message is the table mixed over
    mu(x'|y) a_v(x'); the expected cost is the KL divergence of A's row
    from that estimate. Symmetric for B-owned nodes.
    """
    m = np.asarray(mu, dtype=float)
    total = 0.0
    for r, root in enumerate(pi.roots):
        stack = [(root, np.ones(pi.nx), np.ones(pi.ny))]
        while stack:
            node, a, b = stack.pop()
            if node.is_leaf:
                continue
            T = node.table
            for x in range(pi.nx):
                for y in range(pi.ny):
                    reach = pi.public[r] * m[x, y] * a[x] * b[y]
                    if reach == 0:
                        continue
                    if node.owner == "A":
                        w = m[:, y] * a
                        est = (w @ T) / w.sum()
                        own = T[x]
                    else:
                        w = m[x, :] * b
                        est = (w @ T) / w.sum()
                        own = T[y]
                    total += reach * kl_ref(own, est)
            for i, child in enumerate(node.children):
                col = node.table[:, i]
                if node.owner == "A":
                    stack.append((child, a * col, b))
                else:
                    stack.append((child, a, b * col))
    return total


def brute_force_leaves(node, prefix=(), prob=1.0):
    """All root-to-leaf paths of a CPJ tree with their owner-side probability."""
    if node.is_leaf:
        return {prefix: prob}
    own = node.dist_a if node.owner == "A" else node.dist_b
    out = {}
    for i in range(node.n_children):
        out.update(brute_force_leaves(node.child(i), prefix + (node.label(i),), prob * own[i]))
    return out
