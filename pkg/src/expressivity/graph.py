"""Immutable simple undirected graphs, node labels and rooted graphs.

Graphs are stored in compressed sparse row form: ``indptr`` and ``indices``
as in ``scipy.sparse.csr_matrix``, with strictly sorted neighbor lists.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp


class GraphFormatError(ValueError):
    """Raised for malformed edge-list or feature input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        """Build a graph, rejecting self-loops, duplicates and out-of-range ids."""
        seen = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphFormatError(f"self-loop on node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge ({u}, {v}) outside 0..{n - 1}")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise GraphFormatError(f"duplicate edge {key}")
            seen.add(key)
        return cls._from_pairs(n, seen)

    @classmethod
    def _from_pairs(cls, n, pairs):
        if pairs:
            arr = np.array(sorted(pairs), dtype=np.int64)
            rows = np.concatenate([arr[:, 0], arr[:, 1]])
            cols = np.concatenate([arr[:, 1], arr[:, 0]])
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        return cls(n, indptr, cols.astype(np.int64))

    @classmethod
    def from_scipy(cls, a) -> "Graph":
        a = sp.csr_matrix(a)
        a = ((a + a.T) != 0).astype(np.int8).tocoo()
        pairs = {(int(u), int(v)) for u, v in zip(a.row, a.col) if u < v}
        if any(u == v for u, v in zip(a.row, a.col)):
            raise GraphFormatError("adjacency has non-zero diagonal")
        return cls._from_pairs(a.shape[0], pairs)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for u in range(self.n):
            for v in self.neighbors(u):
                if u < v:
                    out.append((u, int(v)))
        return out

    def adjacency(self, dtype=np.int64) -> sp.csr_matrix:
        data = np.ones(len(self.indices), dtype=dtype)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def permute(self, perm: Sequence[int]) -> "Graph":
        """Relabel node ``i`` as ``perm[i]``."""
        perm = [int(p) for p in perm]
        return Graph.from_edges(self.n, [(perm[u], perm[v]) for u, v in self.edges()])

    def disjoint_union(self, other: "Graph") -> "Graph":
        shift = self.n
        return Graph.from_edges(
            self.n + other.n,
            self.edges() + [(u + shift, v + shift) for u, v in other.edges()],
        )

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __hash__(self):
        return hash((self.n, self.indices.tobytes()))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.num_edges})"


def max_degree(g: Graph) -> int:
    return int(g.degrees.max()) if g.n else 0


@dataclass(frozen=True, eq=False)
class NodeFeatures:
    labels: np.ndarray
    alphabet: tuple[int, ...]

    def __post_init__(self):
        self.labels.setflags(write=False)
        missing = set(np.unique(self.labels).tolist()) - set(self.alphabet)
        if missing:
            raise ValueError(f"labels {sorted(missing)} not in alphabet {self.alphabet}")

    @classmethod
    def from_labels(cls, labels: Sequence[int], alphabet: Iterable[int] | None = None):
        labels = np.asarray(labels, dtype=np.int64)
        if labels.size and labels.min() < 0:
            raise ValueError("labels must be non-negative")
        alpha = set(labels.tolist()) | {0}
        if alphabet is not None:
            alpha |= set(int(a) for a in alphabet)
        return cls(labels, tuple(sorted(alpha)))

    @classmethod
    def uniform(cls, n: int) -> "NodeFeatures":
        """Features-removed mode: every label is 0."""
        return cls(np.zeros(n, dtype=np.int64), (0,))

    def __len__(self):
        return len(self.labels)

    def one_hot(self) -> np.ndarray:
        """Integer one-hot encoding over the sorted alphabet (n x |alphabet|)."""
        col = {a: c for c, a in enumerate(self.alphabet)}
        out = np.zeros((len(self.labels), len(self.alphabet)), dtype=np.int64)
        for i, x in enumerate(self.labels):
            out[i, col[int(x)]] = 1
        return out

    def permute(self, perm: Sequence[int]) -> "NodeFeatures":
        new = np.empty_like(self.labels)
        new[np.asarray(perm)] = self.labels
        return NodeFeatures(new, self.alphabet)


@dataclass(frozen=True)
class RootedGraph:
    graph: Graph
    root: int

    def __post_init__(self):
        if not 0 <= self.root < self.graph.n:
            raise ValueError(f"root {self.root} outside 0..{self.graph.n - 1}")


@dataclass
class GraphCollection:
    """Named (graph, features) pairs pooled by the class-counting routines."""

    names: list[str] = field(default_factory=list)
    graphs: list[Graph] = field(default_factory=list)
    features: list[NodeFeatures] = field(default_factory=list)

    def add(self, name: str, g: Graph, f: NodeFeatures | None = None):
        if name in self.names:
            raise ValueError(f"duplicate graph name {name!r}")
        if f is None:
            f = NodeFeatures.uniform(g.n)
        if len(f) != g.n:
            raise ValueError(f"{name}: {len(f)} labels for {g.n} nodes")
        self.names.append(name)
        self.graphs.append(g)
        self.features.append(f)
        return self

    @classmethod
    def of(cls, *graphs: Graph, features: Sequence[NodeFeatures | None] | None = None):
        c = cls()
        for t, g in enumerate(graphs):
            c.add(f"g{t}", g, None if features is None else features[t])
        return c

    def __len__(self):
        return len(self.graphs)

    def __iter__(self):
        return iter(zip(self.names, self.graphs, self.features))

    def without_features(self) -> "GraphCollection":
        c = GraphCollection()
        for name, g, _ in self:
            c.add(name, g)
        return c


def _lines(text: str | bytes):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _parse_pairs(text):
    for lineno, line in _lines(text):
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"expected two fields, got {len(parts)}", lineno)
        yield lineno, parts[0], parts[1]


def load_edge_list(text: str | bytes, n: int | None = None, relabel: bool = False) -> Graph:
    """Parse ``u v`` lines into a Graph.

    Ids are dense 0-based integers unless ``relabel`` is set, in which case
    arbitrary tokens are mapped to 0.. in first-occurrence order. ``n``
    declares the node count (isolated trailing nodes); otherwise it is
    1 + the largest id seen.
    """
    ids: dict[str, int] = {}
    pairs = []
    for lineno, a, b in _parse_pairs(text):
        if relabel:
            u = ids.setdefault(a, len(ids))
            v = ids.setdefault(b, len(ids))
        else:
            try:
                u, v = int(a), int(b)
            except ValueError:
                raise GraphFormatError(f"non-integer node id in {a!r} {b!r}", lineno) from None
            if u < 0 or v < 0:
                raise GraphFormatError("negative node id", lineno)
        pairs.append((lineno, u, v))
    top = len(ids) if relabel else 1 + max((max(u, v) for _, u, v in pairs), default=-1)
    if n is None:
        n = top
    elif top > n:
        raise GraphFormatError(f"node id {top - 1} >= declared n={n}")
    seen = set()
    for lineno, u, v in pairs:
        if u == v:
            raise GraphFormatError(f"self-loop on node {u}", lineno)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphFormatError(f"duplicate edge {key}", lineno)
        seen.add(key)
    return Graph._from_pairs(n, seen)


def dump_edge_list(g: Graph) -> str:
    return "".join(f"{u} {v}\n" for u, v in g.edges())


def load_features(text: str | bytes, n: int) -> NodeFeatures:
    """Parse ``node_id label`` lines; unlisted nodes get label 0."""
    labels = np.zeros(n, dtype=np.int64)
    for lineno, a, b in _parse_pairs(text):
        try:
            i, x = int(a), int(b)
        except ValueError:
            raise GraphFormatError(f"non-integer field in {a!r} {b!r}", lineno) from None
        if not 0 <= i < n:
            raise GraphFormatError(f"node id {i} outside 0..{n - 1}", lineno)
        if x < 0:
            raise GraphFormatError(f"negative label {x}", lineno)
        labels[i] = x
    return NodeFeatures.from_labels(labels)


# small named graphs used across the package

def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def star_graph(leaves: int) -> Graph:
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def hypercube_graph(dim: int) -> Graph:
    n = 1 << dim
    return Graph.from_edges(n, [(i, i ^ (1 << b)) for i in range(n) for b in range(dim) if i < i ^ (1 << b)])


def erdos_renyi(n: int, p: float, rng: np.random.Generator) -> Graph:
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return Graph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()))
