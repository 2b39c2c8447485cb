"""Exact information measures over finite distributions.

All logarithms are base 2. Probabilities are float64 and identities are
checked to an absolute tolerance of 1e-9 throughout the package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

NORM_TOL = 1e-9


@dataclass(frozen=True)
class Universe:
    """A finite ordered set of opaque symbols."""

    symbols: tuple

    def __post_init__(self):
        if len(self.symbols) < 1:
            raise ValueError("universe must contain at least one symbol")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("universe symbols must be distinct")

    @classmethod
    def of_size(cls, n: int) -> "Universe":
        return cls(tuple(range(n)))

    @property
    def size(self) -> int:
        return len(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, symbol) -> int:
        return self.symbols.index(symbol)


def _normalized(probs: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(probs)):
        raise ValueError("probabilities must be finite")
    if np.any(probs < 0):
        raise ValueError("probabilities must be nonnegative")
    total = probs.sum()
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(f"probabilities sum to {total!r}, not 1")
    return probs / total


@dataclass(frozen=True)
class Dist:
    """Probability mass function over a :class:`Universe`.

    Construction renormalizes when the mass is within 1e-9 of one and
    rejects anything further off.
    """

    probs: np.ndarray
    universe: Universe = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64).reshape(-1)
        probs = _normalized(probs)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        if self.universe is None:
            object.__setattr__(self, "universe", Universe.of_size(len(probs)))
        elif self.universe.size != len(probs):
            raise ValueError("universe size does not match probability vector")

    @classmethod
    def uniform(cls, n: int, support: Sequence[int] | None = None) -> "Dist":
        probs = np.zeros(n)
        idx = list(range(n)) if support is None else list(support)
        probs[idx] = 1.0 / len(idx)
        return cls(probs)

    @classmethod
    def point(cls, n: int, at: int) -> "Dist":
        probs = np.zeros(n)
        probs[at] = 1.0
        return cls(probs)

    def __len__(self) -> int:
        return len(self.probs)

    def __getitem__(self, i: int) -> float:
        return float(self.probs[i])

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    def to_json(self) -> dict[str, Any]:
        return {"size": len(self.probs), "probs": self.probs.tolist()}

    @classmethod
    def from_json(cls, obj) -> "Dist":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if isinstance(obj, list):
            return cls(obj)
        probs = obj["probs"]
        if "size" in obj and int(obj["size"]) != len(probs):
            raise ValueError("size field disagrees with probs length")
        return cls(probs)


@dataclass(frozen=True)
class JointDist:
    """Joint mass function; axis ``i`` ranges over ``universes[i]``.

    Two-way joints are the common case (rows X, columns Y), but any number
    of axes is allowed so chain-rule identities can be checked directly.
    """

    probs: np.ndarray
    universes: tuple = ()

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim < 1:
            raise ValueError("joint needs at least one axis")
        probs = _normalized(probs)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        if not self.universes:
            object.__setattr__(self, "universes", tuple(Universe.of_size(n) for n in probs.shape))
        elif tuple(u.size for u in self.universes) != probs.shape:
            raise ValueError("universes do not match joint shape")

    @property
    def ndim(self) -> int:
        return self.probs.ndim

    def marginal(self, axes: Sequence[int]) -> np.ndarray:
        axes = tuple(axes)
        drop = tuple(a for a in range(self.ndim) if a not in axes)
        m = self.probs.sum(axis=drop) if drop else self.probs
        # sum keeps the remaining axes in ascending order
        order = sorted(axes)
        return np.transpose(m, [order.index(a) for a in axes])

    def to_json(self) -> dict[str, Any]:
        if self.ndim != 2:
            raise ValueError("only two-way joints have a JSON form")
        rows, cols = self.probs.shape
        return {"rows": rows, "cols": cols, "probs": self.probs.tolist()}

    @classmethod
    def from_json(cls, obj) -> "JointDist":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if isinstance(obj, list):
            return cls(obj)
        probs = np.array(obj["probs"], dtype=np.float64)
        if probs.ndim == 1:
            probs = probs.reshape(int(obj["rows"]), int(obj["cols"]))
        if "rows" in obj and probs.shape != (int(obj["rows"]), int(obj["cols"])):
            raise ValueError("rows/cols fields disagree with matrix shape")
        return cls(probs)


def _as_probs(d) -> np.ndarray:
    if isinstance(d, (Dist, JointDist)):
        return d.probs
    return np.asarray(d, dtype=np.float64)


def _h(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def entropy(d) -> float:
    """Shannon entropy in bits; zero-probability terms contribute nothing."""
    return _h(_as_probs(d).reshape(-1))


def _check_same_universe(p, q):
    if isinstance(p, Dist) and isinstance(q, Dist):
        if p.universe != q.universe:
            raise ValueError("distributions live on different universes")
    elif len(_as_probs(p)) != len(_as_probs(q)):
        raise ValueError("distributions live on different universes")


def kl_divergence(p, q) -> float:
    """D(p||q) in bits, ``math.inf`` when p is not absolutely continuous wrt q."""
    _check_same_universe(p, q)
    pp, qq = _as_probs(p), _as_probs(q)
    mask = pp > 0
    if np.any(qq[mask] <= 0):
        return math.inf
    # difference of logs stays finite for subnormal q
    return float((pp[mask] * (np.log2(pp[mask]) - np.log2(qq[mask]))).sum())


def statistical_distance(p, q) -> float:
    _check_same_universe(p, q)
    return 0.5 * float(np.abs(_as_probs(p) - _as_probs(q)).sum())


def joint_entropy(joint, axes: Sequence[int]) -> float:
    """Entropy of the marginal of ``joint`` on ``axes`` (empty axes -> 0)."""
    axes = tuple(axes)
    if not axes:
        return 0.0
    j = joint if isinstance(joint, JointDist) else JointDist(joint)
    return _h(j.marginal(axes).reshape(-1))


def conditional_entropy(joint, a_axes: Sequence[int], c_axes: Sequence[int] = ()) -> float:
    a_axes, c_axes = tuple(a_axes), tuple(c_axes)
    return joint_entropy(joint, a_axes + c_axes) - joint_entropy(joint, c_axes)


def conditional_mutual_information(
    joint, a_axes: Sequence[int], b_axes: Sequence[int], c_axes: Sequence[int] = ()
) -> float:
    """I(A;B|C) = H(A|C) - H(A|BC) with A, B, C given as groups of axes."""
    a, b, c = tuple(a_axes), tuple(b_axes), tuple(c_axes)
    if set(a) & set(b) or set(a) & set(c) or set(b) & set(c):
        raise ValueError("axis groups must be disjoint")
    j = joint if isinstance(joint, JointDist) else JointDist(joint)
    return conditional_entropy(j, a, c) - conditional_entropy(j, a, b + c)


def mutual_information(j) -> float:
    """I(X;Y) for a two-way joint (rows X, columns Y)."""
    j = j if isinstance(j, JointDist) else JointDist(j)
    if j.ndim != 2:
        raise ValueError("mutual_information expects a two-way joint")
    return conditional_mutual_information(j, (0,), (1,))
