import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from expressivity.gamlp import LogisticConfig
from expressivity.operators import OperatorFamily
from expressivity.sbm import (PRESETS, SbmParams, bench, bethe_hessian_cluster, family, gamlp_community,
                              generate, overlap, propagated_features, snr, whiten)


def test_snr_examples():
    assert snr(SbmParams(100, 3, 3)) == 0
    assert snr(SbmParams(1000, 5.5, 0.5)) == pytest.approx(25 / 12)
    assert snr(SbmParams(1000, 3.5, 2.5)) == pytest.approx(1 / 12)
    with pytest.raises(ValueError):
        snr(SbmParams(10, 0, 0))


@pytest.mark.parametrize("name, expected", [(k, float(k[3:])) for k in PRESETS])
def test_presets_are_labelled_by_snr(name, expected):
    a, b = PRESETS[name]
    assert snr(SbmParams(1000, a, b)) == pytest.approx(expected, abs=0.005)


def test_params_validation():
    for bad in [(0, 1, 1), (10, 1, 2), (10, 11, 1), (10, 1, -1)]:
        with pytest.raises(ValueError):
            SbmParams(*bad)


@settings(max_examples=50)
@given(st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=50), st.data())
def test_overlap_flip_invariant(truth, data):
    pred = data.draw(st.lists(st.sampled_from([-1, 1]), min_size=len(truth), max_size=len(truth)))
    pred, truth = np.array(pred), np.array(truth)
    o = overlap(pred, truth)
    assert 0 <= o <= 1
    assert overlap(-pred, truth) == pytest.approx(o)
    assert overlap(truth, truth) == 1.0


def test_overlap_errors_and_chance():
    with pytest.raises(ValueError):
        overlap([1, -1], [1])
    with pytest.raises(ValueError):
        overlap([], [])
    rng = np.random.default_rng(0)
    vals = [overlap(rng.choice([-1, 1], 2000), rng.choice([-1, 1], 2000)) for _ in range(20)]
    assert np.mean(vals) < 0.05


def test_generate_deterministic_and_simple():
    a = generate(SbmParams(300, 5, 1, seed=3))
    b = generate(SbmParams(300, 5, 1, seed=3))
    assert a.graph == b.graph and np.array_equal(a.truth, b.truth)
    assert a.graph != generate(SbmParams(300, 5, 1, seed=4)).graph
    edges = a.graph.edges()
    assert all(u < v for u, v in edges) and len(set(edges)) == len(edges)


def test_generate_within_and_between_rates():
    inst = generate(SbmParams(2000, 6, 2, seed=1))
    t = inst.truth
    within = sum(1 for u, v in inst.graph.edges() if t[u] == t[v])
    between = inst.graph.num_edges - within
    n_plus = int((t == 1).sum())
    pairs_in = n_plus * (n_plus - 1) // 2 + (2000 - n_plus) * (1999 - n_plus) // 2
    pairs_out = n_plus * (2000 - n_plus)
    for count, pairs, p in [(within, pairs_in, 6 / 2000), (between, pairs_out, 2 / 2000)]:
        mu, sd = pairs * p, np.sqrt(pairs * p * (1 - p))
        assert abs(count - mu) <= 3 * sd


def test_equal_rates_mean_degree():
    n, a = 2000, 4.0
    inst = generate(SbmParams(n, a, a, seed=2))
    pairs = n * (n - 1) // 2
    p = a / n
    mu, sd = pairs * p, np.sqrt(pairs * p * (1 - p))
    assert abs(inst.graph.num_edges - mu) <= 3 * sd


def test_two_cliques_recovered():
    inst = generate(SbmParams(40, 40, 0, seed=5))
    res = bethe_hessian_cluster(inst)
    assert res.overlap == 1.0


def test_bethe_hessian_detectable_regime():
    inst = generate(SbmParams(1000, 5.5, 0.5, seed=0))
    res = bethe_hessian_cluster(inst, strict=True)
    assert res.converged
    assert res.eigenvalues[0] >= res.eigenvalues[1]
    assert res.overlap > 0.6
    assert res.r == pytest.approx(np.sqrt(2 * inst.graph.num_edges / 1000))


def test_bethe_hessian_nonstrict_flag():
    inst = generate(SbmParams(500, 3.5, 2.5, seed=0))
    res = bethe_hessian_cluster(inst, max_iter=3, strict=False)
    assert not res.converged
    assert res.labels.shape == (500,)


def test_identity_family_is_chance():
    inst = generate(SbmParams(1000, 5.5, 0.5, seed=0))
    assert gamlp_community(inst, OperatorFamily.parse("I", tower="float")) < 0.1


def test_gamlp_detects_communities():
    inst = generate(SbmParams(1000, 5.5, 0.5, seed=0))
    assert gamlp_community(inst, family("H", K=30)) > 0.5


def test_propagated_features_chain():
    inst = generate(SbmParams(200, 5, 1, seed=0))
    x = propagated_features(inst, family("A", K=5))
    assert x.shape == (200, 6)
    assert np.allclose(x[:, 1:].mean(axis=0), 0) and np.allclose(x[:, 1:].std(axis=0), 1)
    raw = propagated_features(inst, family("A", K=2), normalize=False)
    a = inst.graph.adjacency(np.float64)
    assert np.allclose(raw[:, 2], a @ (a @ np.ones(200)))


def test_whiten():
    rng = np.random.default_rng(0)
    base = rng.normal(size=(50, 2))
    x = np.column_stack([base, base @ [1.0, 2.0], np.ones(50)])
    w = whiten(x)
    assert w.shape == (50, 2)
    assert np.allclose(w.T @ w / 50, np.eye(2))
    assert whiten(np.ones((5, 2))).shape == (5, 0)


def test_family_names_and_split_errors():
    with pytest.raises(ValueError):
        family("X")
    inst = generate(SbmParams(50, 5, 1))
    with pytest.raises(ValueError):
        gamlp_community(inst, family("A", 2), train_frac=1.0)


def test_bench_shape():
    out = bench(300, 5.5, 0.5, [0, 1], omega=family("A", 4), cfg=LogisticConfig(epochs=50))
    assert out["seeds"] == [0, 1]
    assert len(out["bethe_hessian"]["per_seed"]) == 2
    assert out["gamlp"]["mean"] == pytest.approx(np.mean(out["gamlp"]["per_seed"]))
    with pytest.raises(ValueError):
        bench(300, 5.5, 0.5, [])
