"""Weisfeiler-Lehman colour refinement.

A node's colour after t rounds is a canonical name for its depth-t rooted
aggregation tree, so equal colours are exactly GNN-indistinguishable
neighborhoods. Colours are interned by full value (no hash-only equality)
so that class counts are exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

from .graph import Graph, GraphCollection, NodeFeatures
from .reports import EquivalenceReport, size_histogram


class Interner:
    """Maps hashable signatures to dense ids in first-occurrence order."""

    def __init__(self):
        self._ids: dict[Hashable, int] = {}

    def __call__(self, key: Hashable) -> int:
        ids = self._ids
        cid = ids.get(key)
        if cid is None:
            cid = ids[key] = len(ids)
        return cid

    def __len__(self):
        return len(self._ids)


class ColorTables:
    """One interning table per refinement round, shareable across graphs."""

    def __init__(self):
        self.rounds: list[Interner] = []

    def round(self, t: int) -> Interner:
        while len(self.rounds) <= t:
            self.rounds.append(Interner())
        return self.rounds[t]


@dataclass(frozen=True)
class ColorAssignment:
    """``colors[t][i]`` is the round-t colour of node i, for t = 0..K."""

    colors: tuple[np.ndarray, ...]

    @property
    def K(self) -> int:
        return len(self.colors) - 1

    def at(self, t: int) -> np.ndarray:
        return self.colors[t]

    def num_classes(self, t: int) -> int:
        return len(np.unique(self.colors[t]))

    def histogram(self, t: int) -> tuple[tuple[int, int], ...]:
        vals, counts = np.unique(self.colors[t], return_counts=True)
        return tuple(zip(vals.tolist(), counts.tolist()))


def refine(g: Graph, f: NodeFeatures | None = None, K: int = 1,
           tables: ColorTables | None = None) -> ColorAssignment:
    """Run K rounds of 1-WL; pass shared ``tables`` to compare across graphs."""
    if K < 0:
        raise ValueError("K must be >= 0")
    if f is None:
        f = NodeFeatures.uniform(g.n)
    if tables is None:
        tables = ColorTables()
    intern0 = tables.round(0)
    cur = np.array([intern0(int(x)) for x in f.labels], dtype=np.int64)
    colors = [cur]
    indptr, indices = g.indptr, g.indices
    for t in range(1, K + 1):
        intern = tables.round(t)
        nbr = cur[indices]
        nxt = np.empty(g.n, dtype=np.int64)
        for i in range(g.n):
            ms = tuple(sorted(nbr[indptr[i]:indptr[i + 1]].tolist()))
            nxt[i] = intern((int(cur[i]), ms))
        cur = nxt
        colors.append(cur)
    return ColorAssignment(tuple(colors))


def refine_collection(c: GraphCollection, K: int, tables: ColorTables | None = None) -> list[ColorAssignment]:
    tables = tables or ColorTables()
    return [refine(g, f, K, tables) for _, g, f in c]


def count_node_classes(c: GraphCollection, K: int, with_sizes: bool = False) -> EquivalenceReport:
    """Classes of rooted graphs induced by depth-K' GNNs for K' = 0..K, nodes pooled over the collection."""
    if len(c) == 0:
        raise ValueError("empty collection")
    assigns = refine_collection(c, K)
    counts, sizes = {}, {}
    for t in range(K + 1):
        pooled = np.concatenate([a.at(t) for a in assigns])
        counts[t] = len(np.unique(pooled))
        if with_sizes:
            sizes[t] = size_histogram(pooled.tolist())
    return EquivalenceReport("node", "GNN", counts, sizes if with_sizes else None)


def graph_signatures(c: GraphCollection, K: int) -> list[list[tuple]]:
    """Per graph, the colour histogram after each round 0..K."""
    assigns = refine_collection(c, K)
    return [[a.histogram(t) for t in range(K + 1)] for a in assigns]


def count_graph_classes(c: GraphCollection, K: int, with_sizes: bool = False) -> EquivalenceReport:
    """Graphs share a class iff their round-K colour histograms agree."""
    if len(c) == 0:
        raise ValueError("empty collection")
    sigs = graph_signatures(c, K)
    counts, sizes = {}, {}
    for t in range(K + 1):
        keys = [s[t] for s in sigs]
        counts[t] = len(set(keys))
        if with_sizes:
            sizes[t] = size_histogram(keys)
    return EquivalenceReport("graph", "GNN", counts, sizes if with_sizes else None)


def separates(g1: Graph, g2: Graph, K: int, f1: NodeFeatures | None = None,
              f2: NodeFeatures | None = None) -> bool:
    """True iff K rounds of WL give the two graphs different colour histograms."""
    tables = ColorTables()
    a = refine(g1, f1, K, tables)
    b = refine(g2, f2, K, tables)
    return a.histogram(K) != b.histogram(K)


def tabular_predictor(train: Iterable[tuple[Hashable, float]], fallback: float | None = None):
    """Mean training label per WL colour; unseen colours map to ``fallback``.

    ``fallback`` defaults to the global training mean. Any function that is
    constant on WL classes (e.g. attributed walk counts at matching depth)
    is reproduced exactly on the training colours.
    """
    sums: dict[Hashable, float] = {}
    cnts: dict[Hashable, int] = {}
    total, n = 0.0, 0
    for color, y in train:
        sums[color] = sums.get(color, 0.0) + float(y)
        cnts[color] = cnts.get(color, 0) + 1
        total += float(y)
        n += 1
    if n == 0:
        raise ValueError("empty training set")
    table = {k: sums[k] / cnts[k] for k in sums}
    default = total / n if fallback is None else float(fallback)

    def predict(color: Hashable) -> float:
        return table.get(color, default)

    predict.table = table
    predict.fallback = default
    return predict


def partition_refines(fine: Sequence[Hashable], coarse: Sequence[Hashable]) -> bool:
    """True iff every class of ``fine`` sits inside one class of ``coarse``."""
    seen: dict[Hashable, Hashable] = {}
    for a, b in zip(fine, coarse, strict=True):
        if seen.setdefault(a, b) != b:
            return False
    return True
