"""Experiment drivers shared by the CLI and the acceptance suite."""
from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass

import networkx as nx
import numpy as np

from . import wl
from .gamlp import augment, babai_identifier, degree_pair_fingerprint, fit_ridge, normalized_mse
from .graph import Graph, NodeFeatures, erdos_renyi
from .operators import OperatorFamily, OperatorSpec, Tower
from .walks import count_attributed_all


def random_regular(n: int, d: int, seed: int = 0) -> Graph:
    return Graph.from_edges(n, nx.random_regular_graph(d, n, seed=seed).edges())


def parity_features(n: int) -> NodeFeatures:
    """Feature 1 ("blue") on even node ids, 0 ("red") on odd ones."""
    return NodeFeatures.from_labels([1 - (i % 2) for i in range(n)], alphabet=(0, 1))


@dataclass
class WalkTaskResult:
    length: int
    n_train: int
    n_test: int
    metrics: dict

    def to_dict(self) -> dict:
        return {"length": self.length, "n_train": self.n_train, "n_test": self.n_test,
                "metrics": self.metrics}


def walk_task(g: Graph, f: NodeFeatures, length: int, n_train: int, seed: int = 0,
              lam: float = 1e-6, blue: int = 1) -> WalkTaskResult:
    """Fit attributed walk counts (all-``blue`` tuple) with WL tables and ridge GA-MLPs.

    Labels are exact walk counts. The WL predictor is a table over depth-
    ``length`` colours; the ridge readouts use {I, A, ..., A^length} and the
    family with twice as many powers.
    """
    if length < 1:
        raise ValueError("walk length must be >= 1")
    if not 0 < n_train < g.n:
        raise ValueError("train size must leave a non-empty test set")
    y = np.array(count_attributed_all(g, f, (blue,) * length), dtype=np.float64)
    perm = np.random.default_rng(seed).permutation(g.n)
    tr, te = perm[:n_train], perm[n_train:]
    metrics = {}

    colors = wl.refine(g, f, length).at(length)
    table = wl.tabular_predictor((int(colors[i]), y[i]) for i in tr)
    pred = np.array([table(int(c)) for c in colors])
    metrics["wl_tabular"] = {"train_nmse": normalized_mse(pred[tr], y[tr]),
                             "test_nmse": normalized_mse(pred[te], y[te])}

    for name, K in (("gamlp_A", length), ("gamlp_A_plus", 2 * length)):
        fam = OperatorFamily.powers(OperatorSpec.adj(1), K, tower=Tower.INT)
        x = augment(g, f, fam).as_float()
        model = fit_ridge(x[tr], y[tr], lam)
        out = model.decision(x)
        metrics[name] = {"omega": str(fam), "lam": lam,
                         "train_nmse": normalized_mse(out[tr], y[tr]),
                         "test_nmse": normalized_mse(out[te], y[te])}
    return WalkTaskResult(length, len(tr), len(te), metrics)


def babai_sweep(n: int = 30, graphs: int = 500, seed: int = 0, p: float = 0.5) -> dict:
    """Count graph pairs the degree-pair fingerprint merges but the identifier separates."""
    rng = np.random.default_rng(seed)
    groups: dict[tuple, list[tuple]] = defaultdict(list)
    for _ in range(graphs):
        g = erdos_renyi(n, p, rng)
        groups[degree_pair_fingerprint(g)].append(babai_identifier(g))
    violations = 0
    for ids in groups.values():
        violations += sum(1 for a, b in itertools.combinations(ids, 2) if a != b)
    distinct_ids = len({i for ids in groups.values() for i in ids})
    return {"n": n, "graphs": graphs, "seed": seed, "p": p,
            "fingerprint_classes": len(groups), "identifier_classes": distinct_ids,
            "pairs": graphs * (graphs - 1) // 2, "violations": violations}
