"""Binary stochastic block model: sampling, Bethe-Hessian spectral clustering,
overlap scoring, and GA-MLP community detection on augmented features.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .gamlp import LogisticConfig, augment, fit_logistic
from .graph import Graph, NodeFeatures
from .operators import (Kind, OperatorFamily, OperatorSpec, Tower, apply, bethe_hessian, bethe_r,
                        leading_eigenvectors, operator_matrix)


@dataclass(frozen=True)
class SbmParams:
    """p_in = a/n, p_out = b/n; mean degree (a + b) / 2."""

    n: int
    a: float
    b: float
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not 0 <= self.b <= self.a:
            raise ValueError("need 0 <= b <= a")
        if self.a > self.n:
            raise ValueError("a/n must be a probability")

    @property
    def mean_degree(self) -> float:
        return (self.a + self.b) / 2


@dataclass(frozen=True)
class SbmInstance:
    graph: Graph
    truth: np.ndarray
    params: SbmParams


def snr(p: SbmParams) -> float:
    """(a - b)^2 / (2 (a + b)); community detection is possible above 1."""
    if p.a + p.b == 0:
        raise ValueError("a + b must be positive")
    return (p.a - p.b) ** 2 / (2 * (p.a + p.b))


def _tri_pairs(idx: np.ndarray, flat: np.ndarray):
    """Decode flat indices into pairs (i < j) of the strict upper triangle over ``idx``."""
    # row r holds pairs (r, r+1..s-1); row start = r*s - r*(r+1)/2
    s = len(idx)
    r = (2 * s - 1 - np.sqrt((2 * s - 1) ** 2 - 8 * flat.astype(np.float64))) // 2
    r = r.astype(np.int64)
    start = r * s - r * (r + 1) // 2
    # guard float rounding at row boundaries
    over = flat < start
    r[over] -= 1
    start = r * s - r * (r + 1) // 2
    under = flat >= start + (s - 1 - r)
    r[under] += 1
    start = r * s - r * (r + 1) // 2
    c = r + 1 + (flat - start)
    return idx[r], idx[c]


def _sample(rng, total: int, p: float) -> np.ndarray:
    m = rng.binomial(total, p) if total else 0
    return rng.choice(total, size=m, replace=False) if m else np.zeros(0, dtype=np.int64)


def generate(p: SbmParams) -> SbmInstance:
    """Sample labels by fair coin, then each within/between pair independently."""
    rng = np.random.default_rng(p.seed)
    truth = np.where(rng.random(p.n) < 0.5, 1, -1)
    plus = np.flatnonzero(truth == 1)
    minus = np.flatnonzero(truth == -1)
    p_in, p_out = p.a / p.n, p.b / p.n
    us, vs = [], []
    for grp in (plus, minus):
        s = len(grp)
        flat = _sample(rng, s * (s - 1) // 2, p_in)
        u, v = _tri_pairs(grp, flat)
        us.append(u)
        vs.append(v)
    flat = _sample(rng, len(plus) * len(minus), p_out)
    if len(minus):
        us.append(plus[flat // len(minus)])
        vs.append(minus[flat % len(minus)])
    u = np.concatenate(us) if us else np.zeros(0, dtype=np.int64)
    v = np.concatenate(vs) if vs else np.zeros(0, dtype=np.int64)
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    return SbmInstance(Graph._from_pairs(p.n, set(zip(lo.tolist(), hi.tolist()))), truth, p)


def overlap(pred, truth) -> float:
    """2 * max(acc, 1 - acc) - 1: 1 for recovery up to a global flip, ~0 for guessing."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("prediction and truth lengths differ")
    if len(pred) == 0:
        raise ValueError("empty labelling")
    acc = float(np.mean(pred == truth))
    return 2 * max(acc, 1 - acc) - 1


@dataclass
class ClusterResult:
    labels: np.ndarray
    overlap: float
    eigenvalues: np.ndarray
    converged: bool
    r: float


def bethe_hessian_cluster(inst: SbmInstance, kappa: float = 8.0, r: float | None = None,
                          tol: float = 1e-10, max_iter: int | None = None, seed: int = 0,
                          strict: bool = False) -> ClusterResult:
    """Sign of the second leading eigenvector of kappa*I - H(r).

    r defaults to sqrt(empirical mean degree). Power iteration may stall in
    the undetectable regime where the second gap closes; with
    ``strict=False`` the last iterate is used and ``converged`` is False.
    """
    g = inst.graph
    if g.n == 0:
        raise ValueError("empty graph")
    r = bethe_r(g, r)
    m = kappa * sp.identity(g.n, format="csr") - bethe_hessian(g, r)
    res = leading_eigenvectors(m, 2, tol=tol, max_iter=max_iter, seed=seed, strict=strict)
    labels = np.where(res.vectors[:, 1] >= 0, 1, -1)
    return ClusterResult(labels, overlap(labels, inst.truth), res.values, res.converged, r)


_CHAINABLE = (Kind.ADJ_POWER, Kind.NORM_ADJ_POWER, Kind.SELF_LOOP_POWER, Kind.BETHE_HESSIAN)


def _standardize(v: np.ndarray) -> np.ndarray:
    v = v - v.mean()
    sd = v.std()
    return v / sd if sd > 0 else v


def propagated_features(inst: SbmInstance, omega: OperatorFamily, normalize: bool = True) -> np.ndarray:
    """Float GA-MLP features of the all-ones input.

    With ``normalize`` the vector is re-standardized after every single
    propagation step, so a power ``M^k`` is computed as k normalized
    applications of ``M``. Without it, raw ``M^k 1`` is returned (this
    overflows quickly for large k).
    """
    g = inst.graph
    ones = np.ones((g.n, 1))
    if not normalize:
        fam = OperatorFamily(omega.specs, Tower.FLOAT)
        return augment(g, NodeFeatures.uniform(g.n), fam).as_float()
    chains: dict[OperatorSpec, list[np.ndarray]] = {}
    cols = []
    for spec in omega.specs:
        if spec.kind in _CHAINABLE:
            base = spec.with_power(1)
            seq = chains.setdefault(base, [np.ones(g.n)])
            if len(seq) <= spec.k:
                m = operator_matrix(base, g)
                while len(seq) <= spec.k:
                    seq.append(_standardize(m @ seq[-1]))
            cols.append(seq[spec.k] if spec.k else np.zeros(g.n))
        else:
            cols.append(_standardize(apply(spec, g, ones, Tower.FLOAT)[:, 0]))
    return np.column_stack(cols)


def whiten(x: np.ndarray, rel_tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis (scaled to unit column variance) of the centered column span.

    Logistic regression on the whitened basis spans the same linear models;
    it only removes the ill-conditioning of nearly collinear power columns,
    which otherwise stalls plain gradient descent.
    """
    x = x - x.mean(axis=0)
    if x.shape[1] == 0 or not np.any(x):
        return np.zeros((x.shape[0], 0))
    u, s, _ = np.linalg.svd(x, full_matrices=False)
    keep = s > rel_tol * s[0]
    return u[:, keep] * math.sqrt(x.shape[0])


def gamlp_community(inst: SbmInstance, omega: OperatorFamily, cfg: LogisticConfig = LogisticConfig(),
                    train_frac: float = 0.5, normalize: bool = True, split_seed: int = 0) -> float:
    """Held-out overlap of a logistic readout trained on GA-MLP features."""
    if not 0 < train_frac < 1:
        raise ValueError("train_frac must lie in (0, 1)")
    n = inst.graph.n
    cut = int(round(train_frac * n))
    if cut == 0 or cut == n:
        raise ValueError("train/test split leaves one side empty")
    x = propagated_features(inst, omega, normalize)
    if normalize:
        x = whiten(x)
    perm = np.random.default_rng(split_seed).permutation(n)
    tr, te = perm[:cut], perm[cut:]
    model = fit_logistic(x[tr], inst.truth[tr], cfg)
    return overlap(model.predict(x[te]), inst.truth[te])


def family(name: str, K: int = 30, kappa: float = 8.0) -> OperatorFamily:
    """Named community-detection families: "A" (adjacency powers), "H" (Bethe-Hessian
    powers with r = sqrt(mean degree)), "SL" (self-loop normalized powers, eps=1)."""
    base = {"A": OperatorSpec.adj(1), "H": OperatorSpec.bethe(kappa, None, 1),
            "SL": OperatorSpec.self_loop(1, 1)}
    if name not in base:
        raise ValueError(f"unknown family {name!r}; expected one of {sorted(base)}")
    return OperatorFamily.powers(base[name], K, tower=Tower.FLOAT)


def bench(n: int, a: float, b: float, seeds, omega: OperatorFamily | None = None,
          cfg: LogisticConfig = LogisticConfig(), kappa: float = 8.0) -> dict:
    """Per-seed Bethe-Hessian (and optional GA-MLP) overlaps plus mean/std."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    spectral, learned, converged = [], [], []
    for s in seeds:
        inst = generate(SbmParams(n, a, b, s))
        res = bethe_hessian_cluster(inst, kappa=kappa, seed=s)
        spectral.append(res.overlap)
        converged.append(res.converged)
        if omega is not None:
            learned.append(gamlp_community(inst, omega, cfg, split_seed=s))
    out = {"params": {"n": n, "a": a, "b": b, "kappa": kappa},
           "snr": snr(SbmParams(n, a, b)), "seeds": seeds,
           "bethe_hessian": {"per_seed": spectral, "mean": float(np.mean(spectral)),
                             "std": float(np.std(spectral)), "converged": converged}}
    if omega is not None:
        out["gamlp"] = {"omega": str(omega), "per_seed": learned, "mean": float(np.mean(learned)),
                        "std": float(np.std(learned))}
    return out


# presets spanning both sides of the detectability threshold, labelled by SNR
PRESETS = {
    "snr0.08": (3.5, 2.5),
    "snr0.75": (4.5, 1.5),
    "snr1.33": (5.0, 1.0),
    "snr1.69": (5.25, 0.75),
    "snr2.08": (5.5, 0.5),
}
