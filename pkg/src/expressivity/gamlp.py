"""Graph-augmented MLP features, the equivalence classes they induce, and readouts.

Features are X~ = [w_1(A) X, ..., w_K(A) X] with X the one-hot node labels
(the feature transform before propagation is the identity). Equivalence is
decided on exact keys: exact augmented values, walk-type fingerprints, or
degree/neighbor-degree multisets. Float features are only compared after
rounding (approximate, see :data:`Mode.ROUNDED_FEATURES`).
"""
from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Sequence

import numpy as np

from . import walks
from .graph import Graph, GraphCollection, NodeFeatures, RootedGraph
from .operators import FeatureMatrix, OperatorError, OperatorFamily, Tower, apply
from .radicals import Surd
from .reports import EquivalenceReport, size_histogram


class Mode(enum.Enum):
    EXACT_FEATURES = "exact"
    WALK_FINGERPRINT = "fingerprint"
    DEGREE_PAIR = "degree-pair"
    # float features rounded to 12 significant digits; approximate
    ROUNDED_FEATURES = "rounded"


# ---------------------------------------------------------------------------
# augmentation

def augment(g: Graph, f: NodeFeatures | None, omega: OperatorFamily) -> FeatureMatrix:
    """Concatenate w_k(A) X over the family, in family order."""
    if f is None:
        f = NodeFeatures.uniform(g.n)
    if len(f) != g.n:
        raise ValueError("feature length differs from node count")
    x = f.one_hot()
    blocks, prov = [], []
    for t, spec in enumerate(omega.specs):
        blocks.append(apply(spec, g, x, omega.tower))
        prov.extend((t, c) for c in range(x.shape[1]))
    values = np.concatenate(blocks, axis=1)
    return FeatureMatrix(values, prov, omega.tower)


def standardize_columns(x: np.ndarray) -> np.ndarray:
    """Per-column mean 0 / variance 1 over nodes; constant columns become 0."""
    x = np.asarray(x, dtype=np.float64)
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    safe = np.where(sd > 0, sd, 1.0)
    return np.where(sd > 0, (x - mu) / safe, 0.0)


def _round_sig(v: float, digits: int = 12) -> float:
    if v == 0 or not math.isfinite(v):
        return v
    return float(f"{v:.{digits - 1}e}")


def _value_key(v) -> Hashable:
    if isinstance(v, Surd):
        return v.key()
    if isinstance(v, Fraction) and v.denominator == 1:
        return v.numerator
    return v


# ---------------------------------------------------------------------------
# equivalence keys

def node_keys(g: Graph, f: NodeFeatures | None, omega: OperatorFamily, mode: Mode | str,
              hops: int | None = None) -> list[Hashable]:
    """Per-node GA-MLP key restricted to operators of at most ``hops`` hops."""
    mode = Mode(mode)
    if mode is Mode.DEGREE_PAIR:
        return _degree_pairs(g)
    if f is None:
        f = NodeFeatures.uniform(g.n)
    hops = omega.max_hops if hops is None else hops
    if mode is Mode.WALK_FINGERPRINT:
        labels = f.labels.tolist()
        if hops == 0:
            return [(labels[i],) for i in range(g.n)]
        return [(labels[i], walks.fingerprint(RootedGraph(g, i), f, hops).canonical()) for i in range(g.n)]
    sub = omega.upto(hops)
    if sub is None:
        return [() for _ in range(g.n)]
    if mode is Mode.EXACT_FEATURES and not sub.tower.exact:
        raise OperatorError("exact-feature keys need an exact numeric tower")
    if mode is Mode.ROUNDED_FEATURES and sub.tower.exact:
        sub = OperatorFamily(sub.specs, Tower.FLOAT)
    vals = augment(g, f, sub).values
    if mode is Mode.EXACT_FEATURES:
        return [tuple(_value_key(v) for v in row) for row in vals]
    return [tuple(_round_sig(float(v)) for v in row) for row in vals]


def _degree_pairs(g: Graph) -> list[tuple[int, tuple[int, ...]]]:
    d = g.degrees
    return [(int(d[i]), tuple(sorted(int(d[j]) for j in g.neighbors(i)))) for i in range(g.n)]


def _hops_levels(omega: OperatorFamily, mode: Mode) -> list[int]:
    if mode is Mode.DEGREE_PAIR:
        return [2]
    return list(range(0, omega.max_hops + 1))


def count_node_classes(c: GraphCollection, omega: OperatorFamily, mode: Mode | str = Mode.EXACT_FEATURES,
                       with_sizes: bool = False) -> EquivalenceReport:
    """Rooted-graph classes induced by the GA-MLP, nodes pooled over the collection.

    Reported per depth K' (operators of at most K' hops).
    """
    mode = Mode(mode)
    if len(c) == 0:
        raise ValueError("empty collection")
    counts, sizes = {}, {}
    for h in _hops_levels(omega, mode):
        pooled = []
        for _, g, f in c:
            pooled.extend(node_keys(g, f, omega, mode, h))
        counts[h] = len(set(pooled))
        if with_sizes:
            sizes[h] = size_histogram(pooled)
    return EquivalenceReport("node", "GAMLP", counts, sizes if with_sizes else None,
                             omega=str(omega), mode=mode.value)


def graph_key(g: Graph, f: NodeFeatures | None, omega: OperatorFamily, mode: Mode | str,
              hops: int | None = None) -> frozenset:
    """Multiset of node keys (as a frozenset of (key, multiplicity) pairs)."""
    return frozenset(Counter(node_keys(g, f, omega, mode, hops)).items())


def count_graph_classes(c: GraphCollection, omega: OperatorFamily, mode: Mode | str = Mode.EXACT_FEATURES,
                        with_sizes: bool = False) -> EquivalenceReport:
    mode = Mode(mode)
    if len(c) == 0:
        raise ValueError("empty collection")
    counts, sizes = {}, {}
    for h in _hops_levels(omega, mode):
        keys = [graph_key(g, f, omega, mode, h) for _, g, f in c]
        counts[h] = len(set(keys))
        if with_sizes:
            sizes[h] = size_histogram(keys)
    return EquivalenceReport("graph", "GAMLP", counts, sizes if with_sizes else None,
                             omega=str(omega), mode=mode.value)


# ---------------------------------------------------------------------------
# almost-all-graphs identifiers

def babai_identifier(g: Graph) -> tuple[tuple[int, ...], ...]:
    """Multiset over nodes of the neighbor degrees exceeding the r-th largest degree.

    r = floor(3 log n / log 2), clamped to n.
    """
    if g.n < 1:
        raise ValueError("graph must have at least one node")
    r = min(int(3 * math.log(g.n) / math.log(2)), g.n) if g.n > 1 else 1
    r = max(r, 1)
    d = g.degrees
    threshold = int(np.sort(d)[::-1][r - 1])
    gammas = [tuple(sorted(int(d[j]) for j in g.neighbors(i) if d[j] > threshold)) for i in range(g.n)]
    return tuple(sorted(gammas))


def degree_pair_fingerprint(g: Graph) -> tuple[tuple[int, tuple[int, ...]], ...]:
    """Multiset of (d_i, sorted neighbor degrees): what {D, A D^-alpha} see for large alpha."""
    return tuple(sorted(_degree_pairs(g)))


def alpha_threshold(n: int) -> float:
    """Smallest alpha bound making S -> sum_{u in S} u^-alpha injective on multisets of size <= n."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return math.log(n) / (math.log(n) - math.log(n - 1))


def h_alpha(multiset: Sequence[int], alpha: float) -> float:
    """Float sum of u^-alpha; only meaningful for small alpha (underflows otherwise)."""
    return float(sum(float(u) ** (-alpha) for u in multiset))


# ---------------------------------------------------------------------------
# readouts

class SingularSystemError(np.linalg.LinAlgError):
    pass


class DivergenceError(FloatingPointError):
    pass


@dataclass
class ReadoutModel:
    kind: str  # "ridge" | "logistic"
    params: dict
    weights: np.ndarray
    bias: float
    train_metric: float = float("nan")
    history: list[float] = field(default_factory=list)

    def decision(self, features) -> np.ndarray:
        return np.asarray(features, dtype=np.float64) @ self.weights + self.bias

    def predict(self, features) -> np.ndarray:
        z = self.decision(features)
        if self.kind == "logistic":
            return np.where(z >= 0, 1, -1)
        return z


def normalized_mse(pred, y) -> float:
    """MSE divided by label variance (0 when both vanish)."""
    pred = np.asarray(pred, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    mse = float(np.mean((pred - y) ** 2))
    var = float(np.var(y))
    if var == 0.0:
        return 0.0 if mse == 0.0 else math.inf
    return mse / var


def _as_matrix(features) -> np.ndarray:
    if isinstance(features, FeatureMatrix):
        features = features.as_float()
    x = np.asarray(features, dtype=np.float64)
    return x.reshape(-1, 1) if x.ndim == 1 else x


def fit_ridge(features, labels, lam: float = 0.0) -> ReadoutModel:
    """Least squares with penalty lam*||w||^2 on the weights (the bias is free).

    Solves the normal equations (Phi^T Phi + lam I) w = Phi^T y, but through
    an equivalent column-equilibrated least-squares problem for accuracy.
    """
    x = _as_matrix(features)
    y = np.asarray(labels, dtype=np.float64)
    if x.shape[0] < 1 or x.shape[0] != len(y):
        raise ValueError("need at least one row and one label per row")
    if lam < 0:
        raise ValueError("lam must be >= 0")
    n, p = x.shape
    scale = np.abs(x).max(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    xs = np.hstack([x / scale, np.ones((n, 1))])
    if lam == 0:
        if np.linalg.matrix_rank(xs) < p + 1:
            raise SingularSystemError("normal equations are singular; use lam > 0")
        sol = np.linalg.lstsq(xs, y, rcond=None)[0]
    else:
        # rows sqrt(lam)/scale_j penalize the unscaled weights w_j = u_j / scale_j
        pen = np.zeros((p, p + 1))
        pen[np.arange(p), np.arange(p)] = math.sqrt(lam) / scale
        sol = np.linalg.lstsq(np.vstack([xs, pen]), np.concatenate([y, np.zeros(p)]), rcond=None)[0]
    w = sol[:p] / scale
    model = ReadoutModel("ridge", {"lam": lam}, w, float(sol[p]))
    model.train_metric = normalized_mse(model.predict(x), y)
    return model


@dataclass(frozen=True)
class LogisticConfig:
    lr: float = 0.1
    epochs: int = 500
    l2: float = 1e-4
    seed: int = 0


def fit_logistic(features, labels, cfg: LogisticConfig = LogisticConfig()) -> ReadoutModel:
    """Full-batch gradient descent on the L2-regularized logistic loss, labels in {-1, +1}.

    The training metric is accuracy.
    """
    x = _as_matrix(features)
    y = np.asarray(labels, dtype=np.float64)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be +-1")
    n, p = x.shape
    rng = np.random.default_rng(cfg.seed)
    w = rng.normal(scale=0.01, size=p)
    b = 0.0
    history = []
    for _ in range(cfg.epochs):
        with np.errstate(over="ignore", invalid="ignore"):
            margin = y * (x @ w + b)
            loss = float(np.mean(np.logaddexp(0.0, -margin)) + 0.5 * cfg.l2 * (w @ w))
        if not math.isfinite(loss):
            raise DivergenceError("logistic loss became non-finite; lower the learning rate")
        history.append(loss)
        # d/dz log(1 + e^{-yz}) = -y * sigmoid(-yz)
        coef = -y * _sigmoid(-margin) / n
        w = w - cfg.lr * (x.T @ coef + cfg.l2 * w)
        b = b - cfg.lr * float(coef.sum())
    model = ReadoutModel("logistic", {"lr": cfg.lr, "epochs": cfg.epochs, "l2": cfg.l2, "seed": cfg.seed},
                         w, b, history=history)
    model.train_metric = float(np.mean(model.predict(x) == y))
    return model


def _sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))
