"""Exact walk counting from a root node.

A walk of length k from root i is a node sequence (i_1, ..., i_k) with
i ~ i_1 ~ ... ~ i_k; backtracking is allowed and the root itself is not
part of the feature tuple. All counts are Python integers.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

from .graph import Graph, NodeFeatures, RootedGraph, max_degree


class BudgetExceeded(RuntimeError):
    pass


def total_walks(g: Graph, i: int, k: int) -> int:
    """w_k(i) = (A^k 1)_i, computed by propagating walk counts outward from i."""
    if k < 0:
        raise ValueError("k must be >= 0")
    v = {i: 1}
    for _ in range(k):
        nxt: dict[int, int] = defaultdict(int)
        for u, c in v.items():
            for w in g.indices[g.indptr[u]:g.indptr[u + 1]].tolist():
                nxt[w] += c
        v = nxt
    return sum(v.values())


def all_total_walks(g: Graph, k: int) -> list[int]:
    """w_k(i) for every node, via k exact products with the all-ones vector."""
    w = [1] * g.n
    ip, ix = g.indptr.tolist(), g.indices.tolist()
    for _ in range(k):
        w = [sum(w[j] for j in ix[ip[u]:ip[u + 1]]) for u in range(g.n)]
    return w


def _check_tuple(f: NodeFeatures, xs: Sequence[int]):
    if len(xs) == 0:
        raise ValueError("feature tuple must be non-empty")
    bad = [x for x in xs if x not in f.alphabet]
    if bad:
        raise ValueError(f"features {bad} not in alphabet {f.alphabet}")


def count_attributed(rg: RootedGraph, f: NodeFeatures, xs: Sequence[int]) -> int:
    """|W_k(G^[i]; (x_1..x_k))|: walks whose j-th node carries label x_j."""
    _check_tuple(f, xs)
    g = rg.graph
    labels = f.labels
    v = {rg.root: 1}
    for x in xs:
        nxt: dict[int, int] = defaultdict(int)
        for u, c in v.items():
            for w in g.indices[g.indptr[u]:g.indptr[u + 1]].tolist():
                if labels[w] == x:
                    nxt[w] += c
        v = nxt
        if not v:
            return 0
    return sum(v.values())


def count_attributed_all(g: Graph, f: NodeFeatures, xs: Sequence[int]) -> list[int]:
    """count_attributed for every root at once (backward DP from the walk end)."""
    _check_tuple(f, xs)
    ip, ix = g.indptr.tolist(), g.indices.tolist()
    labels = f.labels.tolist()
    # h[u] = number of completions of the remaining suffix starting after u
    h = [1] * g.n
    for x in reversed(xs):
        masked = [h[u] if labels[u] == x else 0 for u in range(g.n)]
        h = [sum(masked[j] for j in ix[ip[u]:ip[u + 1]]) for u in range(g.n)]
    return h


# fingerprint key: (sorted intermediate degrees, end degree, end label)
FingerprintKey = tuple[tuple[int, ...], int, int]


@dataclass
class WalkTypeFingerprint:
    """Per walk length k, counts of walks keyed by their degree/label type."""

    per_length: dict[int, dict[FingerprintKey, int]] = field(default_factory=dict)

    def canonical(self) -> tuple:
        return tuple((k, tuple(sorted(self.per_length[k].items()))) for k in sorted(self.per_length))

    def __eq__(self, other):
        if not isinstance(other, WalkTypeFingerprint):
            return NotImplemented
        return self.canonical() == other.canonical()

    def __hash__(self):
        return hash(self.canonical())

    def total(self, k: int) -> int:
        return sum(self.per_length.get(k, {}).values())


def multiset_bound(k: int, m: int) -> int:
    """Upper bound (k+m-2 choose m-1) on distinct degree multisets of size k-1."""
    if m < 1 or k < 1:
        return 1
    return math.comb(k + m - 2, m - 1)


def fingerprint(rg: RootedGraph, f: NodeFeatures, K: int, cap: int = 10 ** 6) -> WalkTypeFingerprint:
    """Exact walk-type counts for lengths 1..K.

    DP state after t steps is (current node, sorted degrees of the nodes
    visited at steps 1..t-1). The number of distinct degree multisets is
    capped; exceeding ``cap`` raises :class:`BudgetExceeded`.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    g = rg.graph
    deg = g.degrees.tolist()
    labels = f.labels.tolist()
    ip, ix = g.indptr.tolist(), g.indices.tolist()
    states: dict[tuple[int, tuple[int, ...]], int] = {}
    for w in ix[ip[rg.root]:ip[rg.root + 1]]:
        states[(w, ())] = states.get((w, ()), 0) + 1
    out = WalkTypeFingerprint()
    for k in range(1, K + 1):
        if k > 1:
            nxt: dict[tuple[int, tuple[int, ...]], int] = defaultdict(int)
            for (u, ms), c in states.items():
                grown = tuple(sorted(ms + (deg[u],)))
                for w in ix[ip[u]:ip[u + 1]]:
                    nxt[(w, grown)] += c
            states = nxt
            distinct = len({ms for _, ms in states})
            if distinct > cap:
                raise BudgetExceeded(
                    f"{distinct} degree multisets at length {k} exceed cap {cap} "
                    f"(at most C(k+m-2, m-1) = {multiset_bound(k, max_degree(g))} possible)")
        entry: dict[FingerprintKey, int] = defaultdict(int)
        for (u, ms), c in states.items():
            entry[(ms, deg[u], labels[u])] += c
        out.per_length[k] = dict(entry)
    return out


@dataclass(frozen=True)
class WalkQuery:
    """Length-only query (``features`` None) or an attributed feature tuple."""

    length: int
    features: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("walk length must be >= 1")
        if self.features is not None and len(self.features) != self.length:
            raise ValueError("feature tuple length differs from walk length")

    @classmethod
    def of(cls, features: Sequence[int]) -> "WalkQuery":
        return cls(len(features), tuple(features))


def brute_force_walks(rg: RootedGraph, f: NodeFeatures | None, query: WalkQuery,
                      budget: int = 10 ** 7) -> int:
    """Enumerate every walk explicitly and count those matching ``query``."""
    g = rg.graph
    m = max_degree(g)
    if m ** query.length > budget:
        raise BudgetExceeded(f"m^k = {m}^{query.length} exceeds enumeration budget {budget}")
    if query.features is not None:
        if f is None:
            raise ValueError("attributed query needs node features")
        _check_tuple(f, query.features)
    nbrs = [g.neighbors(u).tolist() for u in range(g.n)]
    labels = None if f is None else f.labels.tolist()
    xs = query.features

    def walks_from(u, depth):
        if depth == query.length:
            yield ()
            return
        for w in nbrs[u]:
            for rest in walks_from(w, depth + 1):
                yield (w,) + rest

    count = 0
    for walk in walks_from(rg.root, 0):
        if xs is None or all(labels[u] == x for u, x in zip(walk, xs)):
            count += 1
    return count


def is_tree(g: Graph) -> bool:
    if g.n == 0:
        return True
    if g.num_edges != g.n - 1:
        return False
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for w in g.neighbors(u).tolist():
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == g.n


def nonbacktracking_counts(rg: RootedGraph, k: int, f: NodeFeatures | None = None,
                           label: int | None = None) -> int:
    """|W-bar_k| on a rooted tree, optionally restricted to walks ending at ``label``.

    Counts walks with i_{t} != i_{t+2}; the graph must be a tree.
    """
    g = rg.graph
    if not is_tree(g):
        raise ValueError("non-backtracking counts are only implemented for trees")
    # state: (previous node, current node) -> count
    states = {(-1, rg.root): 1}
    for _ in range(k):
        nxt: dict[tuple[int, int], int] = defaultdict(int)
        for (p, u), c in states.items():
            for w in g.neighbors(u).tolist():
                if w != p:
                    nxt[(u, w)] += c
        states = nxt
    if label is None:
        return sum(states.values())
    return sum(c for (_, u), c in states.items() if f.labels[u] == label)


def tree_depths(rg: RootedGraph) -> list[int]:
    g = rg.graph
    depth = [-1] * g.n
    depth[rg.root] = 0
    stack = [rg.root]
    while stack:
        u = stack.pop()
        for w in g.neighbors(u).tolist():
            if depth[w] < 0:
                depth[w] = depth[u] + 1
                stack.append(w)
    return depth
