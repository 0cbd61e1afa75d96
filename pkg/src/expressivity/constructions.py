"""Named graph constructions, rooted-tree families and exhaustive tree enumerators.

Each named construction carries a verifier that re-derives its claimed
properties from scratch (walk counts, WL colours, GA-MLP keys), so the
hard-coded edge lists are never trusted on their own.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .gamlp import Mode, node_keys
from .graph import Graph, NodeFeatures, RootedGraph, cycle_graph, hypercube_graph
from .operators import OperatorFamily, OperatorSpec, Tower, apply
from .walks import BudgetExceeded, count_attributed, fingerprint
from . import wl

DEFAULT_BUDGET = 10 ** 7

# ---------------------------------------------------------------------------
# rooted trees as canonical nested tuples: (feature, (child, child, ...)) with
# children sorted, so equal tuples <=> isomorphic rooted featured trees

Tree = tuple


def leaf(x: int) -> Tree:
    return (x, ())


def node(x: int, children: Iterable[Tree]) -> Tree:
    return (x, tuple(sorted(children)))


def tree_depth(t: Tree) -> int:
    return 0 if not t[1] else 1 + max(tree_depth(c) for c in t[1])


def level_counts(t: Tree, feature: int = 0) -> list[int]:
    """Number of nodes carrying ``feature`` at each depth 0..height."""
    out: list[int] = []
    frontier = [t]
    while frontier:
        out.append(sum(1 for u in frontier if u[0] == feature))
        frontier = [c for u in frontier for c in u[1]]
    return out


def to_rooted(t: Tree) -> tuple[RootedGraph, NodeFeatures]:
    """Materialize a tree; the root gets id 0 and ids follow BFS order."""
    labels, edges = [t[0]], []
    queue = [(0, t)]
    while queue:
        nxt = []
        for pid, u in queue:
            for c in u[1]:
                cid = len(labels)
                labels.append(c[0])
                edges.append((pid, cid))
                nxt.append((cid, c))
        queue = nxt
    g = Graph.from_edges(len(labels), edges)
    return RootedGraph(g, 0), NodeFeatures.from_labels(labels, alphabet=(0, 1))


def from_rooted(rg: RootedGraph, f: NodeFeatures) -> Tree:
    """Canonical form of a rooted tree given as a graph."""
    g = rg.graph

    def build(u, parent):
        return node(int(f.labels[u]), (build(w, u) for w in g.neighbors(u).tolist() if w != parent))

    return build(rg.root, -1)


def ordered_isomorphic(a: Tree, b: Tree) -> bool:
    """Brute-force isomorphism test: search over child permutations, no canonical sorting."""
    if a[0] != b[0] or len(a[1]) != len(b[1]):
        return False
    if not a[1]:
        return True
    return any(all(ordered_isomorphic(x, y) for x, y in zip(a[1], perm))
               for perm in itertools.permutations(b[1]))


def _multisets(items: Sequence[Tree], size: int, budget: int) -> Iterable[tuple[Tree, ...]]:
    total = math.comb(len(items) + size - 1, size)
    if total > budget:
        raise BudgetExceeded(f"{total} child multisets exceed enumeration budget {budget}")
    return itertools.combinations_with_replacement(items, size)


# ---------------------------------------------------------------------------
# enumerators

@dataclass
class EnumerationResult:
    m: int
    K: int
    count: int
    bound: int
    q: tuple[int, ...] | None = None
    trees: list[Tree] = field(default_factory=list, repr=False)

    @property
    def satisfied(self) -> bool:
        return self.count >= self.bound

    def to_dict(self) -> dict:
        out = {"m": self.m, "K": self.K, "count": self.count, "bound": self.bound,
               "satisfied": self.satisfied}
        if self.q is not None:
            out["q"] = list(self.q)
        return out


def agg_tree_bound(m: int, K: int) -> int:
    return (m - 1) ** (2 ** K - 1)


def enumerate_agg_trees(m: int, K: int, budget: int = DEFAULT_BUDGET) -> EnumerationResult:
    """All binary-featured depth-K aggregation trees with exactly m children per
    internal node, where every internal non-root node has a child carrying
    its parent's feature.
    """
    if m < 1 or K < 0:
        raise ValueError("need m >= 1 and K >= 0")
    # memo[(h, pf)]: subtrees of height h hanging below a parent with
    # feature pf; pf None marks the root, which is unconstrained
    memo: dict[tuple, list[Tree]] = {}

    def subtrees(h: int, pf: int | None) -> list[Tree]:
        key = (h, pf)
        if key in memo:
            return memo[key]
        if h == 0:
            out = [leaf(0), leaf(1)]
        else:
            out = []
            for x in (0, 1):
                kids = subtrees(h - 1, x)
                for ms in _multisets(kids, m, budget):
                    if pf is not None and all(c[0] != pf for c in ms):
                        continue
                    out.append((x, ms))
                    if len(out) > budget:
                        raise BudgetExceeded(f"more than {budget} trees of height {h}")
        memo[key] = out
        return out

    trees = subtrees(K, None)
    return EnumerationResult(m, K, len(trees), agg_tree_bound(m, K), trees=trees)


@dataclass(frozen=True)
class TreeSpec:
    """Full m-ary binary-featured trees of depth K, optionally with fixed per-level
    feature-0 counts q = (q_0, ..., q_K)."""

    m: int
    K: int
    q: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.m < 1 or self.K < 0:
            raise ValueError("need m >= 1 and K >= 0")
        if self.q is not None:
            object.__setattr__(self, "q", tuple(int(v) for v in self.q))
            if len(self.q) != self.K + 1:
                raise ValueError(f"q needs K+1 = {self.K + 1} entries")
            for k, v in enumerate(self.q):
                if not 0 <= v <= self.m ** k:
                    raise ValueError(f"q_{k} = {v} outside [0, {self.m ** k}]")

    def meets_growth_condition(self) -> bool:
        """2^k - 2^(k-2) <= q_k <= m^k / 2 for every 2 <= k <= K."""
        if self.q is None:
            return False
        return all(2 ** k - 2 ** (k - 2) <= self.q[k] <= self.m ** k / 2 for k in range(2, self.K + 1))

    @property
    def bound(self) -> int:
        return 2 ** (2 ** (self.K - 1) - 1) if self.K >= 1 else 1


def enumerate_full_mary(spec: TreeSpec, budget: int = DEFAULT_BUDGET) -> EnumerationResult:
    """Non-isomorphic full m-ary featured trees of depth K matching ``spec.q``.

    Subtrees are built bottom-up with their per-level feature-0 profile; a
    subtree whose profile already exceeds the target at any level is pruned.
    """
    m, K, q = spec.m, spec.K, spec.q
    level: list[tuple[Tree, tuple[int, ...]]] = [(leaf(x), (1 - x,)) for x in (0, 1)]
    for h in range(1, K + 1):
        top = K - h  # depth of these subtrees' roots in the full tree
        nxt = []
        for ms in _multisets(level, m, budget):
            below = tuple(sum(p[1][j] for p in ms) for j in range(h))
            for x in (0, 1):
                prof = (1 - x,) + below
                if q is not None and any(prof[j] > q[top + j] for j in range(h + 1)):
                    continue
                nxt.append((node(x, (p[0] for p in ms)), prof))
                if len(nxt) > budget:
                    raise BudgetExceeded(f"more than {budget} subtrees of height {h}")
        level = nxt
    trees = [t for t, prof in level if q is None or prof == q]
    bound = spec.bound if spec.meets_growth_condition() else 1 if q is not None else 0
    return EnumerationResult(m, K, len(trees), bound, q=q, trees=trees)


# ---------------------------------------------------------------------------
# attributed-walk tree family

@dataclass
class WalkFamilyMember:
    tree: Tree
    rooted: RootedGraph
    features: NodeFeatures
    target: int  # feature-x_k leaves placed in the first branch

    def walk_count(self, xs: Sequence[int]) -> int:
        return count_attributed(self.rooted, self.features, xs)

    def path_count(self, xs: Sequence[int]) -> int:
        """Root-to-depth-k paths whose features read ``xs``."""
        g, lab = self.rooted.graph, self.features.labels
        frontier = {self.rooted.root: 1}
        parent = {self.rooted.root: -1}
        for x in xs:
            nxt: dict[int, int] = {}
            for u, c in frontier.items():
                for w in g.neighbors(u).tolist():
                    if w != parent[u] and lab[w] == x:
                        parent[w] = u
                        nxt[w] = nxt.get(w, 0) + c
            frontier = nxt
        return sum(frontier.values())


def walk_family(m: int, k: int, xs: Sequence[int] | None = None, root_feature: int = 0,
                budget: int = DEFAULT_BUDGET) -> list[WalkFamilyMember]:
    """Depth-k full m-ary trees that GA-MLPs cannot tell apart but whose
    attributed walk counts along ``xs`` (default all ones) take m^(k-1)+1 values.

    Nodes at depth d < k get feature x_d inside the first root branch and
    the opposite feature elsewhere. Among the m^(k-1) leaves of the first
    branch, c carry x_k, for c = 0..m^(k-1); the leaves of the other branches
    are filled so that every tree has the same number of feature-0 leaves.
    """
    if m < 2 or k < 2:
        raise ValueError("need m >= 2 and k >= 2")
    xs = tuple([1] * k if xs is None else xs)
    if len(xs) != k or any(x not in (0, 1) for x in xs):
        raise ValueError("xs must be a binary tuple of length k")
    if m ** k > budget:
        raise BudgetExceeded(f"trees with m^k = {m ** k} leaves exceed budget {budget}")
    per_branch = m ** (k - 1)
    xk = xs[-1]

    def branch(depth: int, inside: bool, leaves: list[int]) -> Tree:
        if depth == k:
            return leaf(leaves.pop())
        x = xs[depth - 1] if inside else 1 - xs[depth - 1]
        return node(x, (branch(depth + 1, inside, leaves) for _ in range(m)))

    out = []
    for c in range(per_branch + 1):
        first = [xk] * c + [1 - xk] * (per_branch - c)
        # zeros among first-branch leaves; the rest keep the total at per_branch
        zeros_first = first.count(0)
        others_total = (m - 1) * per_branch
        zeros_rest = per_branch - zeros_first
        rest = [0] * zeros_rest + [1] * (others_total - zeros_rest)
        kids = [branch(1, True, first)]
        for _ in range(m - 1):
            kids.append(branch(1, False, rest))
        t = node(root_feature, kids)
        rg, f = to_rooted(t)
        out.append(WalkFamilyMember(t, rg, f, c))
    return out


# ---------------------------------------------------------------------------
# named constructions

@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)


@dataclass
class NamedConstruction:
    name: str
    description: str
    graphs: tuple[Graph, ...]
    features: tuple[NodeFeatures | None, ...]
    roots: tuple[int, ...] | None = None
    verifier: Callable[["NamedConstruction"], list[Check]] | None = field(default=None, repr=False)

    def verify(self) -> list[Check]:
        return self.verifier(self) if self.verifier else []

    def ok(self) -> bool:
        return all(c.passed for c in self.verify())


def _edges_1based(pairs) -> list[tuple[int, int]]:
    return [(u - 1, v - 1) for u, v in pairs]


# 1-based; nodes 11..14 have identical neighbourhoods in both graphs. Node 7
# attaches to 14 (not 13): with both 5 and 7 on node 13 the totals already
# differ at length 4.
_G_EDGES = [(1, 3), (1, 5), (1, 7), (1, 9), (2, 4), (2, 6), (2, 8), (2, 10), (3, 11), (3, 12),
            (4, 13), (4, 14), (5, 13), (6, 11), (7, 14), (8, 12)]
_H_EDGES = [(1, 5), (1, 6), (1, 7), (1, 8), (2, 3), (2, 4), (2, 9), (2, 10), (3, 11), (3, 12),
            (4, 13), (4, 14), (5, 13), (6, 11), (7, 14), (8, 12)]

# walk identities checked on the first graph, 1-based node ids
LINEAR_WALK_IDENTITIES = (((1,), (2,)), ((3, 9), (6, 8)), ((5, 7), (4, 10)))


def _verify_walk_pair(c: NamedConstruction, kmax: int = 64) -> list[Check]:
    g, h = c.graphs
    wg, wh = [1] * g.n, [1] * h.n
    equal, idents = True, [True] * len(LINEAR_WALK_IDENTITIES)
    first_bad = None
    ip_g, ix_g = g.indptr.tolist(), g.indices.tolist()
    ip_h, ix_h = h.indptr.tolist(), h.indices.tolist()
    for k in range(1, kmax + 1):
        wg = [sum(wg[j] for j in ix_g[ip_g[u]:ip_g[u + 1]]) for u in range(g.n)]
        wh = [sum(wh[j] for j in ix_h[ip_h[u]:ip_h[u + 1]]) for u in range(h.n)]
        if wg != wh and equal:
            equal, first_bad = False, k
        for t, (lhs, rhs) in enumerate(LINEAR_WALK_IDENTITIES):
            if sum(wg[i - 1] for i in lhs) != sum(wg[i - 1] for i in rhs):
                idents[t] = False
    checks = [Check(f"walk totals equal for k <= {kmax}", equal,
                    "" if equal else f"first mismatch at k={first_bad}")]
    for (lhs, rhs), okay in zip(LINEAR_WALK_IDENTITIES, idents):
        txt = " + ".join(f"w({i})" for i in lhs) + " = " + " + ".join(f"w({i})" for i in rhs)
        checks.append(Check(f"identity {txt} for k <= {kmax}", okay))
    checks.append(Check("WL merges at K=1", not wl.separates(g, h, 1)))
    checks.append(Check("WL separates at K=2", wl.separates(g, h, 2)))
    fam = OperatorFamily.powers(OperatorSpec.adj(1), 6)
    same = sorted(map(repr, node_keys(g, None, fam, Mode.EXACT_FEATURES))) == \
        sorted(map(repr, node_keys(h, None, fam, Mode.EXACT_FEATURES)))
    checks.append(Check("adjacency-power GA-MLP keys identical (K=6)", same))
    return checks


def equal_walk_pair() -> NamedConstruction:
    g = Graph.from_edges(14, _edges_1based(_G_EDGES))
    h = Graph.from_edges(14, _edges_1based(_H_EDGES))
    return NamedConstruction(
        "equal_walk_pair", "14-node pair with equal walk totals at every length, separated by 2 WL rounds",
        (g, h), (None, None), verifier=_verify_walk_pair)


def _column_multiset(spec: OperatorSpec, g: Graph, tower=Tower.INT):
    col = apply(spec, g, [[1]] * g.n, tower)[:, 0]
    return sorted(col.tolist(), key=repr)


def _verify_hexagon(c: NamedConstruction) -> list[Check]:
    g, h = c.graphs
    wl_merge = all(not wl.separates(g, h, K) for K in range(11))
    dist = OperatorSpec.dist(2)
    mp = OperatorSpec.minpow(2)
    dg, dh = _column_multiset(dist, g), _column_multiset(dist, h)
    mg, mh = _column_multiset(mp, g), _column_multiset(mp, h)
    return [
        Check("WL merges for all K <= 10", wl_merge),
        Check("dist(2) keys separate", dg != dh, f"{dg} vs {dh}"),
        Check("minpow(2) keys do not separate", mg == mh, f"{mg} vs {mh}"),
    ]


def hexagon_vs_triangles() -> NamedConstruction:
    tri = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    return NamedConstruction("hexagon_vs_triangles", "C6 against two disjoint triangles",
                             (cycle_graph(6), tri.disjoint_union(tri)), (None, None),
                             verifier=_verify_hexagon)


def _verify_regular(c: NamedConstruction) -> list[Check]:
    g, h = c.graphs
    fam = OperatorFamily.of([OperatorSpec.norm_adj("1/2", "1/2", k) for k in range(1, 6)], Tower.RADICAL)
    kg = node_keys(g, None, fam, Mode.EXACT_FEATURES)
    kh = node_keys(h, None, fam, Mode.EXACT_FEATURES)
    same = sorted(map(repr, kg)) == sorted(map(repr, kh))
    deg = OperatorSpec.degree()
    return [
        Check("N(1/2,1/2)^k features identical for k <= 5", same),
        Check("WL separates at K=1", wl.separates(g, h, 1)),
        Check("degree column separates", _column_multiset(deg, g) != _column_multiset(deg, h)),
    ]


def regular_pair() -> NamedConstruction:
    return NamedConstruction("regular_pair", "C8 (2-regular) against the 3-cube (3-regular)",
                             (cycle_graph(8), hypercube_graph(3)), (None, None),
                             verifier=_verify_regular)


def level_count_trees() -> tuple[Tree, Tree]:
    """Depth-2 binary trees, root 0, one child of each feature, three 0-leaves;
    the single 1-leaf sits under the 1-child in the first tree and under the
    0-child in the second."""
    a = node(0, [node(1, [leaf(1), leaf(0)]), node(0, [leaf(0), leaf(0)])])
    b = node(0, [node(1, [leaf(0), leaf(0)]), node(0, [leaf(1), leaf(0)])])
    return a, b


def _verify_level_count(c: NamedConstruction) -> list[Check]:
    (g, h), (fg, fh) = c.graphs, c.features
    rg, rh = RootedGraph(g, c.roots[0]), RootedGraph(h, c.roots[1])
    cg, ch = count_attributed(rg, fg, (1, 1)), count_attributed(rh, fh, (1, 1))
    tables = wl.ColorTables()
    wg = wl.refine(g, fg, 2, tables).at(2)[rg.root]
    wh = wl.refine(h, fh, 2, tables).at(2)[rh.root]
    members = enumerate_full_mary(TreeSpec(2, 2, (1, 1, 3))).trees
    ta, tb = from_rooted(rg, fg), from_rooted(rh, fh)
    return [
        Check("walk count (1,1): 1 vs 0", (cg, ch) == (1, 0), f"{cg} vs {ch}"),
        Check("walk-type fingerprints equal up to length 2", fingerprint(rg, fg, 2) == fingerprint(rh, fh, 2)),
        Check("WL depth-2 root colours differ", wg != wh),
        Check("both trees are the members of T(2,2,(1,1,3))", sorted(members) == sorted([ta, tb]),
              f"{len(members)} members enumerated"),
    ]


def level_count_pair() -> NamedConstruction:
    (rg, fg), (rh, fh) = (to_rooted(t) for t in level_count_trees())
    return NamedConstruction("level_count_pair", "two rooted binary trees with equal per-level feature counts",
                             (rg.graph, rh.graph), (fg, fh), roots=(rg.root, rh.root),
                             verifier=_verify_level_count)


def _verify_walk_family(c: NamedConstruction, m: int = 3, k: int = 3) -> list[Check]:
    fam = walk_family(m, k)
    ones = (1,) * k
    fps = {fingerprint(t.rooted, t.features, k) for t in fam}
    paths = [t.path_count(ones) for t in fam]
    walks = [t.walk_count(ones) for t in fam]
    tables = wl.ColorTables()
    roots = [wl.refine(t.rooted.graph, t.features, k, tables).at(k)[0] for t in fam]
    by_value: dict[int, set] = {}
    for w, r in zip(walks, roots):
        by_value.setdefault(w, set()).add(int(r))
    distinct_roots = len(set(map(int, roots))) == len(fam)
    return [
        Check("identical walk-type fingerprints", len(fps) == 1),
        Check(f"path counts are 0..{m ** (k - 1)}", sorted(paths) == list(range(m ** (k - 1) + 1))),
        Check(f"walk counts take {m ** (k - 1) + 1} distinct values",
              len(set(walks)) == m ** (k - 1) + 1, f"{sorted(set(walks))}"),
        Check("distinct WL root colours per walk count", distinct_roots),
    ]


def walk_family_construction(m: int = 3, k: int = 3) -> NamedConstruction:
    fam = walk_family(m, k)
    return NamedConstruction("walk_family", f"depth-{k} {m}-ary trees with equal GA-MLP keys and "
                             f"{m ** (k - 1) + 1} walk-count values",
                             tuple(t.rooted.graph for t in fam), tuple(t.features for t in fam),
                             roots=tuple(t.rooted.root for t in fam),
                             verifier=lambda c: _verify_walk_family(c, m, k))


REGISTRY: dict[str, Callable[[], NamedConstruction]] = {
    "equal_walk_pair": equal_walk_pair,
    "hexagon_vs_triangles": hexagon_vs_triangles,
    "regular_pair": regular_pair,
    "level_count_pair": level_count_pair,
    "walk_family": walk_family_construction,
}


def get(name: str) -> NamedConstruction:
    if name not in REGISTRY:
        raise KeyError(f"unknown construction {name!r}; known: {', '.join(REGISTRY)}")
    return REGISTRY[name]()
