"""Graph operator families and the sparse linear algebra behind feature augmentation.

Each operator is described declaratively by an :class:`OperatorSpec` and
applied as repeated sparse products; dense powers are never formed. Four
numeric towers are supported: exact Python integers, exact fractions, exact
radical sums (:class:`~expressivity.radicals.Surd`, for fractional degree
exponents) and float64. Exact arrays are numpy ``object`` arrays so they
never overflow.
"""
from __future__ import annotations

import enum
import math
import re
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .graph import Graph
from .radicals import Surd


class Tower(enum.Enum):
    INT = "int"
    RATIONAL = "rational"
    RADICAL = "radical"
    FLOAT = "float"

    @property
    def rank(self) -> int:
        return _TOWER_ORDER.index(self)

    @property
    def exact(self) -> bool:
        return self is not Tower.FLOAT


_TOWER_ORDER = [Tower.INT, Tower.RATIONAL, Tower.RADICAL, Tower.FLOAT]


class Kind(enum.Enum):
    IDENTITY = "I"
    DEGREE = "D"
    ADJ_POWER = "A"
    NORM_ADJ_POWER = "N"
    SELF_LOOP_POWER = "SL"
    WALK_BINARIZED = "minpow"
    DISTANCE_EXACT = "dist"
    NEIGHBOR_DEGREE_SUM = "NDS"
    BETHE_HESSIAN = "BH"


class OperatorError(ValueError):
    pass


class TowerError(OperatorError):
    """An operator was requested in a numeric tower that cannot represent it."""


_INTEGER_KINDS = {Kind.IDENTITY, Kind.DEGREE, Kind.ADJ_POWER, Kind.WALK_BINARIZED, Kind.DISTANCE_EXACT}


def _fmt_num(q) -> str:
    if isinstance(q, Fraction):
        if q.denominator == 1:
            return str(q.numerator)
        d = q.denominator
        while d % 2 == 0:
            d //= 2
        while d % 5 == 0:
            d //= 5
        if d == 1:
            return repr(float(q))
        return f"{q.numerator}/{q.denominator}"
    f = float(q)
    return str(int(f)) if f.is_integer() else repr(f)


@dataclass(frozen=True)
class OperatorSpec:
    """One operator omega(A); ``k`` is the power where the kind has one.

    ``r=None`` on a Bethe-Hessian spec means r = sqrt(mean degree) of the
    graph it is applied to.
    """

    kind: Kind
    k: int = 1
    alpha: Fraction | None = None
    beta: Fraction | None = None
    eps: Fraction | None = None
    kappa: float | None = None
    r: float | None = None

    def __post_init__(self):
        if self.k < 0:
            raise OperatorError(f"power must be >= 0, got {self.k}")
        if self.eps is not None and self.eps < 0:
            raise OperatorError("self-loop weight must be >= 0")
        for v in (self.kappa, self.r):
            if v is not None and not math.isfinite(v):
                raise OperatorError("Bethe-Hessian parameters must be finite")

    # constructors ---------------------------------------------------------
    @classmethod
    def identity(cls):
        return cls(Kind.IDENTITY, 0)

    @classmethod
    def degree(cls):
        return cls(Kind.DEGREE, 0)

    @classmethod
    def adj(cls, k):
        return cls(Kind.ADJ_POWER, k)

    @classmethod
    def norm_adj(cls, alpha, beta, k):
        return cls(Kind.NORM_ADJ_POWER, k, alpha=Fraction(alpha), beta=Fraction(beta))

    @classmethod
    def self_loop(cls, eps, k):
        return cls(Kind.SELF_LOOP_POWER, k, eps=Fraction(eps))

    @classmethod
    def minpow(cls, k):
        return cls(Kind.WALK_BINARIZED, k)

    @classmethod
    def dist(cls, k):
        return cls(Kind.DISTANCE_EXACT, k)

    @classmethod
    def neighbor_degree_sum(cls, alpha):
        return cls(Kind.NEIGHBOR_DEGREE_SUM, 1, alpha=Fraction(alpha))

    @classmethod
    def bethe(cls, kappa, r, k):
        return cls(Kind.BETHE_HESSIAN, k, kappa=float(kappa), r=None if r is None else float(r))

    # properties -----------------------------------------------------------
    @property
    def hops(self) -> int:
        """Receptive field in hops; used to group operators by depth."""
        if self.kind is Kind.IDENTITY:
            return 0
        if self.kind is Kind.DEGREE:
            return 1
        if self.kind is Kind.NEIGHBOR_DEGREE_SUM:
            return 2
        return self.k

    def min_tower(self) -> Tower:
        """Narrowest numeric tower that evaluates this operator exactly."""
        kind = self.kind
        if kind in _INTEGER_KINDS:
            return Tower.INT
        if kind is Kind.NORM_ADJ_POWER:
            integral = self.alpha.denominator == 1 and self.beta.denominator == 1
            return Tower.RATIONAL if integral else Tower.RADICAL
        if kind is Kind.NEIGHBOR_DEGREE_SUM:
            return Tower.RATIONAL if self.alpha.denominator == 1 else Tower.RADICAL
        if kind is Kind.SELF_LOOP_POWER:
            return Tower.RADICAL
        return Tower.FLOAT

    def __str__(self):
        kind = self.kind
        if kind is Kind.IDENTITY:
            return "I"
        if kind is Kind.DEGREE:
            return "D"
        if kind is Kind.ADJ_POWER:
            return f"A^{self.k}"
        if kind is Kind.NORM_ADJ_POWER:
            return f"N({_fmt_num(self.alpha)},{_fmt_num(self.beta)})^{self.k}"
        if kind is Kind.SELF_LOOP_POWER:
            return f"SL({_fmt_num(self.eps)})^{self.k}"
        if kind is Kind.WALK_BINARIZED:
            return f"minpow({self.k})"
        if kind is Kind.DISTANCE_EXACT:
            return f"dist({self.k})"
        if kind is Kind.NEIGHBOR_DEGREE_SUM:
            return f"NDS({_fmt_num(self.alpha)})"
        r = "auto" if self.r is None else _fmt_num(self.r)
        return f"BH({_fmt_num(self.kappa)},{r})^{self.k}"

    def with_power(self, k: int) -> "OperatorSpec":
        return OperatorSpec(self.kind, k, self.alpha, self.beta, self.eps, self.kappa, self.r)


_NUM = r"[-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?(?:/[0-9]+)?"
_POW = r"(?:\^([0-9]+))?"
_PATTERNS = [
    (re.compile(r"I"), lambda m: OperatorSpec.identity()),
    (re.compile(r"D"), lambda m: OperatorSpec.degree()),
    (re.compile(r"A" + _POW), lambda m: OperatorSpec.adj(int(m[1] or 1))),
    (re.compile(rf"N\(({_NUM}),({_NUM})\)" + _POW),
     lambda m: OperatorSpec.norm_adj(Fraction(m[1]), Fraction(m[2]), int(m[3] or 1))),
    (re.compile(rf"SL\(({_NUM})\)" + _POW), lambda m: OperatorSpec.self_loop(Fraction(m[1]), int(m[2] or 1))),
    (re.compile(r"minpow\(([0-9]+)\)"), lambda m: OperatorSpec.minpow(int(m[1]))),
    (re.compile(r"dist\(([0-9]+)\)"), lambda m: OperatorSpec.dist(int(m[1]))),
    (re.compile(rf"NDS\(({_NUM})\)"), lambda m: OperatorSpec.neighbor_degree_sum(Fraction(m[1]))),
    (re.compile(rf"BH\(({_NUM}),(auto|{_NUM})\)" + _POW),
     lambda m: OperatorSpec.bethe(float(Fraction(m[1])), None if m[2] == "auto" else float(Fraction(m[2])),
                                  int(m[3] or 1))),
]


def parse_operator(text: str) -> OperatorSpec:
    text = text.replace(" ", "")
    for pat, build in _PATTERNS:
        m = pat.fullmatch(text)
        if m:
            return build(m)
    raise OperatorError(f"cannot parse operator {text!r}")


def _split_top_level(text: str) -> list[str]:
    items, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            items.append("".join(cur))
            cur = []
            continue
        depth += (ch == "(") - (ch == ")")
        cur.append(ch)
    items.append("".join(cur))
    return items


_RANGE = re.compile(r"(.*\^)([0-9]+)\.\.(?:(.*\^))?([0-9]+)")


def parse_family(text: str) -> list[OperatorSpec]:
    """Parse a comma-separated operator list.

    ``A^1..A^5`` (or ``A^1..5``) expands to consecutive powers of one base.
    """
    specs = []
    for item in _split_top_level(text.replace(" ", "")):
        if not item:
            raise OperatorError(f"empty item in operator family {text!r}")
        m = _RANGE.fullmatch(item)
        if m:
            base, lo, base2, hi = m[1], int(m[2]), m[3], int(m[4])
            if base2 is not None and base2 != base:
                raise OperatorError(f"range endpoints differ in {item!r}")
            if hi < lo:
                raise OperatorError(f"empty range {item!r}")
            specs.extend(parse_operator(f"{base}{k}") for k in range(lo, hi + 1))
        else:
            specs.append(parse_operator(item))
    return specs


@dataclass(frozen=True)
class OperatorFamily:
    specs: tuple[OperatorSpec, ...]
    tower: Tower

    def __post_init__(self):
        if not self.specs:
            raise OperatorError("operator family is empty")
        for s in self.specs:
            if s.min_tower().rank > self.tower.rank:
                raise TowerError(f"{s} needs the {s.min_tower().value} tower, family is {self.tower.value}")

    @classmethod
    def parse(cls, text: str, tower: Tower | str | None = None) -> "OperatorFamily":
        return cls.of(parse_family(text), tower)

    @classmethod
    def of(cls, specs: Sequence[OperatorSpec], tower: Tower | str | None = None):
        specs = tuple(specs)
        if tower is None:
            tower = narrowest_tower(specs)
        return cls(specs, Tower(tower))

    @classmethod
    def powers(cls, base: OperatorSpec, K: int, include_identity=True, tower=None):
        specs = ([OperatorSpec.identity()] if include_identity else []) + [base.with_power(k) for k in range(1, K + 1)]
        return cls.of(specs, tower)

    @property
    def max_hops(self) -> int:
        return max(s.hops for s in self.specs)

    def upto(self, hops: int) -> "OperatorFamily | None":
        keep = tuple(s for s in self.specs if s.hops <= hops)
        return OperatorFamily(keep, self.tower) if keep else None

    def __str__(self):
        return ",".join(str(s) for s in self.specs)


def narrowest_tower(specs: Sequence[OperatorSpec]) -> Tower:
    return _TOWER_ORDER[max(s.min_tower().rank for s in specs)]


@dataclass
class FeatureMatrix:
    """Augmented features with the (operator index, input column) of every column."""

    values: np.ndarray
    provenance: list[tuple[int, int]]
    tower: Tower

    @property
    def shape(self):
        return self.values.shape

    def as_float(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


# ---------------------------------------------------------------------------
# exact sparse products

def _csr_matmul(indptr, indices, x, data=None):
    """Row-wise sums ``sum_j M[i, j] x[j]`` for a CSR pattern, any dtype."""
    gathered = x[indices] if data is None else x[indices] * (data[:, None] if x.ndim == 2 else data)
    out = np.zeros_like(x)
    if x.dtype == object:
        out[...] = 0
    starts = indptr[:-1]
    nonempty = starts < indptr[1:]
    if len(indices):
        out[nonempty] = np.add.reduceat(gathered, starts[nonempty], axis=0)
    return out


def _to_tower(x, tower: Tower) -> np.ndarray:
    x = np.asarray(x)
    if tower is Tower.FLOAT:
        return x.astype(np.float64)
    out = np.empty(x.shape, dtype=object)
    flat = x.ravel()
    if tower is Tower.RADICAL:
        out.ravel()[:] = [Surd.coerce(v) for v in flat]
        return out
    conv = (lambda v: int(v)) if tower is Tower.INT else (lambda v: Fraction(v))
    if tower is Tower.INT:
        for v in flat:
            if isinstance(v, Fraction) and v.denominator != 1:
                raise TowerError("non-integer input in the integer tower")
            if isinstance(v, float) and not v.is_integer():
                raise TowerError("non-integer input in the integer tower")
    out.ravel()[:] = [conv(v) for v in flat]
    return out


def _inv_degree_power(d: np.ndarray, a: Fraction, tower: Tower):
    """Entrywise d**(-a) with the convention 0**(-a) = 0 for isolated nodes."""
    if tower is Tower.FLOAT:
        with np.errstate(divide="ignore"):
            out = np.where(d > 0, np.power(np.maximum(d, 1).astype(np.float64), -float(a)), 0.0)
        return out
    if tower is Tower.RADICAL:
        vals = [Surd() if di == 0 else Surd.power(int(di), -a) for di in d]
    else:
        vals = [Fraction(0) if di == 0 else Fraction(int(di)) ** (-int(a)) for di in d]
    out = np.empty(len(vals), dtype=object)
    out[:] = vals
    return out


def _scale_rows(s, x):
    return x * (s[:, None] if x.ndim == 2 else s)


def walk_pattern(g: Graph, k: int) -> sp.csr_matrix:
    """Boolean pattern of A^k: entry (i, j) is 1 iff a length-k walk joins i and j."""
    pat = sp.identity(g.n, dtype=np.int64, format="csr")
    a = g.adjacency(np.int64)
    for _ in range(k):
        pat = pat @ a
        pat.data[:] = 1
        pat.eliminate_zeros()
    pat.sort_indices()
    return pat


def distance_pattern(g: Graph, k: int) -> sp.csr_matrix:
    """Entry (i, j) is 1 iff the shortest-path distance from i to j is exactly k."""
    rows, cols = [], []
    for s in range(g.n):
        dist = {s: 0}
        q = deque([s])
        while q:
            u = q.popleft()
            if dist[u] == k:
                continue
            for v in g.neighbors(u):
                v = int(v)
                if v not in dist:
                    dist[v] = dist[u] + 1
                    q.append(v)
        hits = sorted(v for v, dv in dist.items() if dv == k)
        rows.extend([s] * len(hits))
        cols.extend(hits)
    data = np.ones(len(rows), dtype=np.int64)
    m = sp.csr_matrix((data, (rows, cols)), shape=(g.n, g.n))
    m.sort_indices()
    return m


def bethe_r(g: Graph, r: float | None) -> float:
    if r is not None:
        return float(r)
    mean_deg = 2 * g.num_edges / g.n if g.n else 0.0
    return math.sqrt(mean_deg)


def bethe_hessian(g: Graph, r: float) -> sp.csr_matrix:
    """H(r) = (r^2 - 1) I - r A + D as a sparse symmetric float matrix."""
    n = g.n
    diag = (r * r - 1.0) + g.degrees.astype(np.float64)
    return (sp.diags(diag) - r * g.adjacency(np.float64)).tocsr()


def operator_matrix(spec: OperatorSpec, g: Graph) -> sp.csr_matrix:
    """Float sparse matrix of the *base* operator (power 1) of ``spec``.

    For non-powered kinds (I, D, NDS, minpow, dist) the full operator is returned.
    """
    n = g.n
    a = g.adjacency(np.float64)
    d = g.degrees.astype(np.float64)
    kind = spec.kind
    if kind is Kind.IDENTITY:
        return sp.identity(n, format="csr")
    if kind is Kind.DEGREE:
        return sp.diags(d).tocsr()
    if kind is Kind.ADJ_POWER:
        return a
    if kind is Kind.NORM_ADJ_POWER:
        left = _inv_degree_power(g.degrees, spec.alpha, Tower.FLOAT)
        right = _inv_degree_power(g.degrees, spec.beta, Tower.FLOAT)
        return (sp.diags(left) @ a @ sp.diags(right)).tocsr()
    if kind is Kind.SELF_LOOP_POWER:
        eps = float(spec.eps)
        dbar = d + eps
        s = np.where(dbar > 0, 1.0 / np.sqrt(np.where(dbar > 0, dbar, 1.0)), 0.0)
        return (sp.diags(s) @ (a + eps * sp.identity(n)) @ sp.diags(s)).tocsr()
    if kind is Kind.WALK_BINARIZED:
        return walk_pattern(g, spec.k).astype(np.float64)
    if kind is Kind.DISTANCE_EXACT:
        return distance_pattern(g, spec.k).astype(np.float64)
    if kind is Kind.NEIGHBOR_DEGREE_SUM:
        return (a @ sp.diags(_inv_degree_power(g.degrees, spec.alpha, Tower.FLOAT))).tocsr()
    r = bethe_r(g, spec.r)
    return (spec.kappa * sp.identity(n) - bethe_hessian(g, r)).tocsr()


def apply(spec: OperatorSpec, g: Graph, x, tower: Tower | str = Tower.INT) -> np.ndarray:
    """Compute omega(A) @ x for one operator.

    ``x`` is an (n,) or (n, c) array; the result lives in ``tower`` (object
    arrays of int / Fraction / Surd for the exact towers, float64 otherwise).
    Powered kinds are applied as k successive sparse products.
    """
    tower = Tower(tower)
    if spec.min_tower().rank > tower.rank:
        raise TowerError(f"{spec} cannot be evaluated in the {tower.value} tower")
    x = np.asarray(x)
    if x.shape[0] != g.n:
        raise OperatorError(f"feature matrix has {x.shape[0]} rows, graph has {g.n} nodes")
    x = _to_tower(x, tower)
    kind = spec.kind

    if tower is Tower.FLOAT:
        m = operator_matrix(spec, g)
        if kind in (Kind.IDENTITY, Kind.DEGREE, Kind.WALK_BINARIZED, Kind.DISTANCE_EXACT,
                    Kind.NEIGHBOR_DEGREE_SUM):
            return np.asarray(m @ x)
        for _ in range(spec.k):
            x = np.asarray(m @ x)
        return x

    if kind is Kind.IDENTITY:
        return x.copy()
    if kind is Kind.DEGREE:
        return _scale_rows(_to_tower(g.degrees, tower), x)
    if kind is Kind.ADJ_POWER:
        for _ in range(spec.k):
            x = _csr_matmul(g.indptr, g.indices, x)
        return x
    if kind in (Kind.WALK_BINARIZED, Kind.DISTANCE_EXACT):
        pat = walk_pattern(g, spec.k) if kind is Kind.WALK_BINARIZED else distance_pattern(g, spec.k)
        return _csr_matmul(pat.indptr, pat.indices, x)
    if kind is Kind.NORM_ADJ_POWER:
        left = _inv_degree_power(g.degrees, spec.alpha, tower)
        right = _inv_degree_power(g.degrees, spec.beta, tower)
        for _ in range(spec.k):
            x = _scale_rows(left, _csr_matmul(g.indptr, g.indices, _scale_rows(right, x)))
        return x
    if kind is Kind.NEIGHBOR_DEGREE_SUM:
        right = _inv_degree_power(g.degrees, spec.alpha, tower)
        return _csr_matmul(g.indptr, g.indices, _scale_rows(right, x))
    if kind is Kind.SELF_LOOP_POWER:
        eps = spec.eps
        dbar = [Fraction(int(di)) + eps for di in g.degrees]
        s = np.empty(g.n, dtype=object)
        s[:] = [Surd() if b == 0 else Surd.power(b, Fraction(-1, 2)) for b in dbar]
        for _ in range(spec.k):
            y = _scale_rows(s, x)
            x = _scale_rows(s, _csr_matmul(g.indptr, g.indices, y) + y * Surd.coerce(eps))
        return x
    raise TowerError(f"{spec} has no exact evaluation")  # pragma: no cover


def neighbor_degree_multisets(g: Graph) -> list[tuple[int, ...]]:
    """Sorted neighbor-degree multiset of every node.

    This is the exact information carried by sum_j d_j^(-alpha) once alpha
    exceeds the injectivity threshold, where the float sum would underflow.
    """
    d = g.degrees
    return [tuple(sorted(int(d[j]) for j in g.neighbors(i))) for i in range(g.n)]


# ---------------------------------------------------------------------------
# power iteration

class ConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class EigenResult(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    iterations: list[int]
    converged: bool


def _gershgorin_lower(m) -> float:
    m = sp.csr_matrix(m)
    diag = m.diagonal()
    off = np.asarray(abs(m).sum(axis=1)).ravel() - np.abs(diag)
    return float(np.min(diag - off)) if m.shape[0] else 0.0


def leading_eigenvectors(m, count: int = 1, tol: float = 1e-10, max_iter: int | None = None,
                         seed: int = 0, res_tol: float = 1e-6, strict: bool = True) -> EigenResult:
    """Top ``count`` (1 or 2) eigenpairs of a symmetric matrix by power iteration.

    The second vector is kept orthogonal to the first (deflation). To make
    power iteration target the algebraically largest eigenvalue, the matrix
    is shifted by its Gershgorin lower bound when that bound is negative.
    A vector is accepted once successive Rayleigh quotients move by less
    than ``tol`` (relative) and the residual ||Mv - lv|| is below ``res_tol``.
    """
    if count not in (1, 2):
        raise ValueError("count must be 1 or 2")
    m = sp.csr_matrix(m, dtype=np.float64)
    n = m.shape[0]
    if count > n:
        raise ValueError(f"cannot extract {count} eigenvectors of a {n}x{n} matrix")
    if max_iter is None:
        max_iter = max(10 * n, 2000)
    shift = max(0.0, -_gershgorin_lower(m))
    rng = np.random.default_rng(seed)
    vals, vecs, residuals, iters = [], [], [], []
    converged = True
    for _ in range(count):
        v = rng.uniform(0.5, 1.5, n)
        for u in vecs:
            v -= (u @ v) * u
        v /= np.linalg.norm(v)
        rq_old = None
        ok = False
        for it in range(1, max_iter + 1):
            mv = m @ v
            rq = float(v @ mv)
            res = float(np.linalg.norm(mv - rq * v))
            if rq_old is not None and abs(rq - rq_old) < tol * max(1.0, abs(rq)) and res <= res_tol:
                ok = True
                break
            rq_old = rq
            w = mv + shift * v
            for u in vecs:
                w -= (u @ w) * u
            norm = np.linalg.norm(w)
            if norm == 0.0:
                # v lies in the null space of the shifted matrix: already an eigenvector
                ok = res <= res_tol
                break
            v = w / norm
        if not ok:
            converged = False
            if strict:
                raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations", res)
        vals.append(rq)
        vecs.append(v)
        residuals.append(res)
        iters.append(it)
    order = np.argsort(vals)[::-1]
    return EigenResult(np.array(vals)[order], np.column_stack(vecs)[:, order],
                       np.array(residuals)[order], [iters[i] for i in order], converged)
