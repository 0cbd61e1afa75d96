import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.sparse as sp
import sympy
from hypothesis import given, settings, strategies as st

from conftest import dense_walks, featured_graphs, graphs, permutations
from expressivity.graph import Graph, complete_graph, cycle_graph, hypercube_graph, path_graph
from expressivity.operators import (ConvergenceError, OperatorError, OperatorFamily, OperatorSpec, Tower,
                                    TowerError, apply, bethe_hessian, distance_pattern, leading_eigenvectors,
                                    neighbor_degree_multisets, operator_matrix, parse_family,
                                    parse_operator, walk_pattern)
from expressivity.radicals import Surd

TRIANGLES = complete_graph(3).disjoint_union(complete_graph(3))
ONES = lambda n: np.ones((n, 1), dtype=np.int64)


def col(spec, g, tower=Tower.INT, x=None):
    return apply(spec, g, ONES(g.n) if x is None else x, tower)[:, 0].tolist()


# ---------------------------------------------------------------------------
# documented examples

def test_adjacency_square_on_path():
    assert col(OperatorSpec.adj(2), path_graph(3)) == [2, 2, 2]


def test_degree_on_path():
    assert col(OperatorSpec.degree(), path_graph(3)) == [1, 2, 1]


def test_distance_two():
    assert col(OperatorSpec.dist(2), cycle_graph(6)) == [2] * 6
    assert col(OperatorSpec.dist(2), TRIANGLES) == [0] * 6


def test_binarized_square_does_not_separate():
    assert col(OperatorSpec.minpow(2), cycle_graph(6)) == [3] * 6
    assert col(OperatorSpec.minpow(2), TRIANGLES) == [3] * 6


@pytest.mark.parametrize("g", [cycle_graph(5), hypercube_graph(3), complete_graph(4)])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_symmetric_normalization_fixes_ones_on_regular_graphs(g, k):
    vals = col(OperatorSpec.norm_adj("1/2", "1/2", k), g, Tower.RADICAL)
    assert all(v == 1 for v in vals)
    assert np.allclose(col(OperatorSpec.norm_adj(0.5, 0.5, k), g, Tower.FLOAT), 1.0)


def test_rational_tower_for_integer_exponents():
    g = path_graph(3)
    vals = col(OperatorSpec.norm_adj(1, 0, 1), g, Tower.RATIONAL)
    assert vals == [Fraction(1), Fraction(1), Fraction(1)]
    vals = col(OperatorSpec.norm_adj(0, 1, 1), g, Tower.RATIONAL)
    assert vals == [Fraction(1, 2), Fraction(2), Fraction(1, 2)]


def test_tower_violations():
    with pytest.raises(TowerError):
        apply(OperatorSpec.norm_adj(1, 0, 1), path_graph(3), ONES(3), Tower.INT)
    with pytest.raises(TowerError):
        OperatorFamily.of([OperatorSpec.norm_adj("1/2", "1/2", 1)], Tower.RATIONAL)
    with pytest.raises(TowerError):
        apply(OperatorSpec.bethe(8, None, 1), path_graph(3), ONES(3), Tower.RADICAL)


def test_dimension_mismatch():
    with pytest.raises(OperatorError, match="rows"):
        apply(OperatorSpec.adj(1), path_graph(3), ONES(4))


def test_isolated_nodes_get_zero_inverse_degree():
    g = Graph.from_edges(3, [(0, 1)])
    assert col(OperatorSpec.norm_adj(1, 1, 1), g, Tower.RATIONAL) == [1, 1, 0]


# ---------------------------------------------------------------------------
# text forms

@pytest.mark.parametrize("text", ["I", "D", "A^3", "N(0.5,0.5)^2", "SL(1)^2", "minpow(2)", "dist(2)",
                                  "NDS(0.5)", "BH(8,auto)^1", "BH(8,1.5)^2", "N(1/3,2/3)^1"])
def test_canonical_text_round_trip(text):
    spec = parse_operator(text)
    assert str(spec) == text
    assert parse_operator(str(spec)) == spec


def test_family_ranges():
    fam = OperatorFamily.parse("I,A^1..A^5")
    assert str(fam) == "I,A^1,A^2,A^3,A^4,A^5"
    assert fam.tower is Tower.INT
    assert [str(s) for s in parse_family("BH(8,auto)^1..3")] == ["BH(8,auto)^1", "BH(8,auto)^2", "BH(8,auto)^3"]
    assert OperatorFamily.parse("I,N(0.5,0.5)^1").tower is Tower.RADICAL
    assert OperatorFamily.parse("I,BH(8,auto)^1").tower is Tower.FLOAT


@pytest.mark.parametrize("text", ["", "A^", "Q", "A^3..A^1", "A^1..N(1,1)^3", "I,,A"])
def test_bad_family_text(text):
    with pytest.raises(OperatorError):
        OperatorFamily.parse(text)


def test_negative_power_rejected():
    with pytest.raises(OperatorError):
        OperatorSpec.adj(-1)


# ---------------------------------------------------------------------------
# Bethe Hessian

def test_bethe_hessian_examples():
    g = cycle_graph(6)
    r = math.sqrt(2)
    h = bethe_hessian(g, r).toarray()
    assert np.allclose(h, 3 * np.eye(6) - r * g.adjacency().toarray())
    p = path_graph(4)
    lap = np.diag(p.degrees) - p.adjacency().toarray()
    assert np.allclose(bethe_hessian(p, 1.0).toarray(), lap)
    empty = Graph.from_edges(3, [])
    assert np.allclose(bethe_hessian(empty, 2.0).toarray(), 3 * np.eye(3))


@given(graphs(max_n=10), st.floats(0.1, 4.0))
def test_bethe_hessian_matches_dense(g, r):
    h = bethe_hessian(g, r)
    a = g.adjacency().toarray().astype(float)
    ref = (r * r - 1) * np.eye(g.n) - r * a + np.diag(a.sum(axis=1))
    assert np.allclose(h.toarray(), ref)
    assert abs(h - h.T).max() == 0 if g.n else True


# ---------------------------------------------------------------------------
# power iteration

def test_top_eigenpair_hexagon():
    g = cycle_graph(6)
    m = 5 * sp.identity(6) + math.sqrt(2) * g.adjacency(np.float64)
    res = leading_eigenvectors(m, 1)
    assert res.values[0] == pytest.approx(5 + 2 * math.sqrt(2), abs=1e-8)
    v = res.vectors[:, 0]
    assert np.allclose(np.abs(v), 1 / math.sqrt(6), atol=1e-6)


def test_identity_eigenvalue():
    res = leading_eigenvectors(sp.identity(4), 1)
    assert res.values[0] == pytest.approx(1.0)


def test_diagonal():
    res = leading_eigenvectors(sp.diags([3.0, 1.0]), 2)
    assert res.values.tolist() == pytest.approx([3.0, 1.0])
    assert abs(res.vectors[0, 0]) == pytest.approx(1.0)


def test_negative_dominant_eigenvalue_is_not_picked():
    # spectrum {-5, 1}: the algebraically largest is 1
    res = leading_eigenvectors(sp.diags([-5.0, 1.0]), 1)
    assert res.values[0] == pytest.approx(1.0)


def test_non_convergence_reports_residual():
    rng = np.random.default_rng(1)
    q, _ = np.linalg.qr(rng.normal(size=(30, 30)))
    m = q @ np.diag(np.linspace(1.0, 0.999, 30)) @ q.T
    with pytest.raises(ConvergenceError) as info:
        leading_eigenvectors(sp.csr_matrix(m), 1, max_iter=5)
    assert info.value.residual > 0
    assert not leading_eigenvectors(sp.csr_matrix(m), 1, max_iter=5, strict=False).converged


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 12), st.integers(0, 10 ** 6))
def test_matches_dense_eigensolver(n, seed):
    rng = np.random.default_rng(seed)
    # well-separated spectrum so power iteration converges within the default budget
    vals = np.concatenate([[6.0, 4.0], rng.uniform(-3, 2, n - 2)])
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    m = (q * vals) @ q.T
    res = leading_eigenvectors(sp.csr_matrix(m), 2, seed=seed)
    ref_vals, ref_vecs = np.linalg.eigh(m)
    assert res.values.tolist() == pytest.approx([6.0, 4.0], abs=1e-7)
    for j, idx in enumerate([-1, -2]):
        assert abs(abs(res.vectors[:, j] @ ref_vecs[:, idx]) - 1) < 1e-6
    assert np.all(res.residuals <= 1e-6)
    assert abs(res.vectors[:, 0] @ res.vectors[:, 1]) < 1e-8


# ---------------------------------------------------------------------------
# properties

@given(graphs(), st.integers(0, 4))
def test_adjacency_power_equals_walk_totals(g, k):
    assert col(OperatorSpec.adj(k), g) == dense_walks(g, k)


EXACT_SPECS = [OperatorSpec.identity(), OperatorSpec.degree(), OperatorSpec.adj(2), OperatorSpec.minpow(2),
               OperatorSpec.dist(2), OperatorSpec.norm_adj(1, 1, 2), OperatorSpec.norm_adj("1/2", "1/2", 2),
               OperatorSpec.self_loop(1, 2), OperatorSpec.neighbor_degree_sum("1/2")]


@settings(max_examples=40, deadline=None)
@given(graphs(max_n=6), st.sampled_from(EXACT_SPECS), st.integers(-3, 3), st.integers(-3, 3), st.data())
def test_linearity_exact(g, spec, a, b, data):
    x = np.array(data.draw(st.lists(st.integers(-5, 5), min_size=g.n, max_size=g.n)), dtype=np.int64)
    y = np.array(data.draw(st.lists(st.integers(-5, 5), min_size=g.n, max_size=g.n)), dtype=np.int64)
    t = spec.min_tower()
    lhs = apply(spec, g, a * x + b * y, t)
    rhs = a * apply(spec, g, x, t) + b * apply(spec, g, y, t)
    assert all(Surd.coerce(u) == Surd.coerce(v) for u, v in zip(lhs, rhs))


@settings(max_examples=40, deadline=None)
@given(graphs(max_n=7).flatmap(lambda g: permutations(g.n).map(lambda p: (g, p))),
       st.sampled_from(EXACT_SPECS + [OperatorSpec.bethe(8, None, 2)]))
def test_equivariance(gp, spec):
    g, perm = gp
    x = np.arange(1, g.n + 1, dtype=np.int64)
    px = np.empty_like(x)
    px[np.asarray(perm, dtype=int)] = x
    t = spec.min_tower()
    out = apply(spec, g, x, t)
    pout = apply(spec, g.permute(perm), px, t)
    for i in range(g.n):
        if t is Tower.FLOAT:
            assert pout[perm[i]] == pytest.approx(out[i])
        else:
            assert pout[perm[i]] == out[i]


@given(graphs())
def test_distance_one_is_binarized_one_is_adjacency(g):
    a = g.adjacency()
    assert (distance_pattern(g, 1) != a).nnz == 0
    assert (walk_pattern(g, 1) != a).nnz == 0


@settings(max_examples=30, deadline=None)
@given(graphs(max_n=7), st.integers(1, 3))
def test_float_matches_dense_reference(g, k):
    a = g.adjacency().toarray().astype(float)
    d = a.sum(axis=1)
    inv = np.where(d > 0, 1 / np.sqrt(np.where(d > 0, d, 1)), 0.0)
    n_ref = np.linalg.matrix_power(np.diag(inv) @ a @ np.diag(inv), k) @ np.ones(g.n)
    assert np.allclose(col(OperatorSpec.norm_adj(0.5, 0.5, k), g, Tower.FLOAT), n_ref)
    dbar = d + 1
    s = np.diag(1 / np.sqrt(dbar))
    sl_ref = np.linalg.matrix_power(s @ (a + np.eye(g.n)) @ s, k) @ np.ones(g.n)
    assert np.allclose(col(OperatorSpec.self_loop(1, k), g, Tower.FLOAT), sl_ref)
    r = math.sqrt(d.mean()) if g.n else 0.0
    bh = 8 * np.eye(g.n) - ((r * r - 1) * np.eye(g.n) - r * a + np.diag(d))
    assert np.allclose(col(OperatorSpec.bethe(8, None, k), g, Tower.FLOAT), np.linalg.matrix_power(bh, k) @ np.ones(g.n))


def _to_sympy(s: Surd):
    total = sympy.Integer(0)
    for sig, c in s.terms.items():
        term = sympy.Rational(c.numerator, c.denominator)
        for p, f in sig:
            term *= sympy.Integer(p) ** sympy.Rational(f.numerator, f.denominator)
        total += term
    return total


@settings(max_examples=15, deadline=None)
@given(graphs(min_n=2, max_n=5), st.integers(1, 3))
def test_radical_tower_matches_symbolic(g, k):
    a = sympy.Matrix(g.adjacency().toarray().tolist())
    d = [sum(a.row(i)) for i in range(g.n)]
    inv = sympy.diag(*[0 if di == 0 else 1 / sympy.sqrt(di) for di in d])
    ref = (inv * a * inv) ** k * sympy.ones(g.n, 1)
    got = col(OperatorSpec.norm_adj("1/2", "1/2", k), g, Tower.RADICAL)
    for u, v in zip(got, ref):
        assert sympy.simplify(_to_sympy(Surd.coerce(u)) - v) == 0


def test_neighbor_degree_multisets_and_float_sum():
    g = path_graph(4)
    assert neighbor_degree_multisets(g) == [(2,), (1, 2), (1, 2), (2,)]
    vals = col(OperatorSpec.neighbor_degree_sum(1), g, Tower.FLOAT)
    assert vals == pytest.approx([0.5, 1.5, 1.5, 0.5])


def test_operator_matrix_base():
    g = path_graph(3)
    assert (operator_matrix(OperatorSpec.adj(5), g) != g.adjacency(np.float64)).nnz == 0
