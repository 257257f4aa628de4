"""Link prediction on frozen embeddings: MLP edge classifier and ranking metrics."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .graph import Graph
from .objectives import log_sigmoid, sigmoid
from .optim import AdamState, adam_step
from .rng import substream


class EdgeClassifier:
    """One-hidden-layer ReLU MLP on ``[x_u, x_v]`` with a logistic output.

    Scores are averaged over both orientations of the pair, so the model is
    symmetric in its two endpoints.
    """

    def __init__(self, dim: int, hidden: int = 128, seed=0):
        if dim < 1:
            raise ValueError("embedding dimension must be >= 1")
        rng = substream(seed, "classifier-init")
        self.dim, self.hidden = dim, hidden
        self.params = {
            "W1": rng.normal(0.0, math.sqrt(2.0 / (2 * dim)), size=(2 * dim, hidden)),
            "b1": np.zeros(hidden),
            "w2": rng.normal(0.0, math.sqrt(1.0 / hidden), size=hidden),
            "b2": np.zeros(1),
        }

    def _logits(self, F):
        p = self.params
        H = np.maximum(F @ p["W1"] + p["b1"], 0.0)
        return H @ p["w2"] + p["b2"][0], H

    def logits(self, X, edges):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        a, b = X[edges[:, 0]], X[edges[:, 1]]
        return 0.5 * (self._logits(np.hstack([a, b]))[0] + self._logits(np.hstack([b, a]))[0])

    def score(self, X, edges):
        """Edge probability in (0, 1) for each pair."""
        return sigmoid(self.logits(X, edges))

    def loss_and_grads(self, F, y):
        """Mean binary cross-entropy on features ``F`` and its parameter gradients."""
        p = self.params
        z, H = self._logits(F)
        loss = -float(np.mean(y * log_sigmoid(z) + (1 - y) * log_sigmoid(-z)))
        dz = (sigmoid(z) - y) / len(y)
        dH = np.outer(dz, p["w2"]) * (H > 0)
        grads = {"W1": F.T @ dH, "b1": dH.sum(axis=0), "w2": H.T @ dz, "b2": np.array([dz.sum()])}
        return loss, grads


def _random_non_edges(g: Graph, count: int, rng) -> np.ndarray:
    out = np.empty((0, 2), dtype=np.int64)
    while len(out) < count:
        u = rng.integers(0, g.n, size=2 * (count - len(out)) + 8)
        v = rng.integers(0, g.n, size=len(u))
        ok = (u != v) & ~g.has_edges(u, v)
        out = np.concatenate([out, np.stack([u[ok], v[ok]], axis=1)])
    return out[:count]


def train_classifier(X, train_pos_edges, train_neg_edges=None, epochs: int = 50, eta: float = 1e-3,
                     seed=0, *, hidden: int = 128, batch_size: int = 256,
                     resample_from: Graph | None = None) -> EdgeClassifier:
    """Fit an :class:`EdgeClassifier` with mini-batch Adam on binary cross-entropy.

    Negatives are either the fixed ``train_neg_edges`` (same count as the
    positives) or, with ``resample_from``, a fresh uniform draw of non-edges
    of that graph every epoch.  Each epoch also re-draws the orientation of
    every training pair.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError("embeddings must be a 2-D array with at least one column")
    pos = np.asarray(train_pos_edges, dtype=np.int64).reshape(-1, 2)
    if resample_from is None:
        neg = np.asarray(train_neg_edges, dtype=np.int64).reshape(-1, 2)
        if len(neg) != len(pos):
            raise ValueError("need as many negative as positive training edges")
    rng = substream(seed, "classifier")
    clf = EdgeClassifier(X.shape[1], hidden, seed)
    states = {k: AdamState.zeros_like(v) for k, v in clf.params.items()}
    y_all = np.concatenate([np.ones(len(pos)), np.zeros(len(pos))])
    for epoch in range(epochs):
        if resample_from is not None:
            neg = _random_non_edges(resample_from, len(pos), rng)
        edges = np.concatenate([pos, neg])
        flip = rng.random(len(edges)) < 0.5
        edges = np.where(flip[:, None], edges[:, ::-1], edges)
        order = rng.permutation(len(edges))
        for s in range(0, len(edges), batch_size):
            idx = order[s:s + batch_size]
            e = edges[idx]
            F = np.hstack([X[e[:, 0]], X[e[:, 1]]])
            loss, grads = clf.loss_and_grads(F, y_all[idx])
            if not math.isfinite(loss):
                raise FloatingPointError(f"classifier loss became non-finite in epoch {epoch}")
            for k, g in grads.items():
                adam_step(clf.params[k], states[k], g, eta)
    return clf


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def auc_roc(scores, labels) -> float:
    """P(score_pos > score_neg) + P(tie) / 2, via average ranks."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos, n_neg = int(labels.sum()), int((~labels).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative label")
    r = rankdata(scores)
    return float((r[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def best_rank(pos_scores, neg_scores) -> int:
    """1-based rank of the best true edge among the negatives; ties count against it."""
    top = np.max(pos_scores)
    return 1 + int(np.sum(np.asarray(neg_scores) >= top))


def rank_metrics(ranks, k_list=(50, 100)):
    ranks = np.asarray(ranks, dtype=np.float64)
    return float(np.mean(1.0 / ranks)), {int(k): float(np.mean(ranks <= k)) for k in k_list}


def sample_candidate_negatives(g: Graph, sources, count: int = 100, seed=0) -> dict:
    """``count`` distinct non-neighbours (excluding the node itself) per source."""
    rng = substream(seed, "candidates")
    out = {}
    for s in np.unique(np.asarray(sources, dtype=np.int64)):
        banned = np.zeros(g.n, dtype=bool)
        banned[g.neighbors(s)] = True
        banned[s] = True
        pool = np.flatnonzero(~banned)
        if len(pool) == 0:
            continue
        out[int(s)] = rng.choice(pool, size=min(count, len(pool)), replace=False)
    return out


@dataclass
class RankReport:
    mrr: float
    hits: dict
    evaluated_nodes: int
    skipped_nodes: int


def node_level_rank_metrics(X, classifier, test_pos_edges, candidate_negatives: dict,
                            k_list=(50, 100)) -> RankReport:
    """MRR and Hits@k per source node, then averaged over nodes.

    Every test edge counts for both endpoints.  A node's rank is the rank of
    its best-scored true neighbour among its candidate negatives.
    """
    e = np.asarray(test_pos_edges, dtype=np.int64).reshape(-1, 2)
    both = np.concatenate([e, e[:, ::-1]])
    ranks, skipped = [], 0
    for s in np.unique(both[:, 0]):
        cands = candidate_negatives.get(int(s))
        if cands is None or len(cands) == 0:
            skipped += 1
            continue
        targets = both[both[:, 0] == s, 1]
        pos = classifier.score(X, np.stack([np.full(len(targets), s), targets], axis=1))
        neg = classifier.score(X, np.stack([np.full(len(cands), s), cands], axis=1))
        ranks.append(best_rank(pos, neg))
    if not ranks:
        raise ValueError("no test node has candidate negatives")
    mrr, hits = rank_metrics(ranks, k_list)
    return RankReport(mrr, hits, len(ranks), skipped)


@dataclass
class MetricReport:
    auc_roc: float
    mrr: float
    hits_at_k: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for v in [self.auc_roc, self.mrr, *self.hits_at_k.values()]:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"metric value {v} outside [0, 1]")

    def to_dict(self):
        d = asdict(self)
        d["hits_at_k"] = {str(k): v for k, v in self.hits_at_k.items()}
        return d

    def write_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    def append_csv(self, path):
        path = Path(path)
        keys = sorted(self.hits_at_k)
        row = {"dataset": self.metadata.get("dataset", ""), "variant": self.metadata.get("variant", ""),
               "seed": self.metadata.get("seed", ""), "auc_roc": self.auc_roc, "mrr": self.mrr,
               **{f"hits@{k}": self.hits_at_k[k] for k in keys}}
        new = not path.exists()
        with path.open("a", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(row))
            if new:
                w.writeheader()
            w.writerow(row)


@dataclass
class ClassifierConfig:
    hidden: int = 128
    epochs: int = 50
    eta: float = 1e-3
    batch_size: int = 256
    candidates: int = 100
    k_list: tuple = (50, 100)


def evaluate_link_prediction(X, train_graph: Graph, full_graph: Graph, test_pos, test_neg,
                             cfg: ClassifierConfig = ClassifierConfig(), seed=0,
                             metadata=None) -> MetricReport:
    """Train the edge classifier on ``train_graph`` edges and score the test split.

    AUC-ROC uses the balanced positive/negative test pairs; MRR and Hits@k
    rank each test node's true neighbours among sampled non-neighbours of
    ``full_graph``.
    """
    test_pos = np.asarray(test_pos, dtype=np.int64).reshape(-1, 2)
    test_neg = np.asarray(test_neg, dtype=np.int64).reshape(-1, 2)
    if len(test_pos) == 0:
        raise ValueError("empty test set")
    if len(test_pos) != len(test_neg):
        raise ValueError("test positives and negatives must be balanced")
    clf = train_classifier(X, train_graph.edges, epochs=cfg.epochs, eta=cfg.eta, seed=seed,
                           hidden=cfg.hidden, batch_size=cfg.batch_size, resample_from=train_graph)
    scores = clf.score(X, np.concatenate([test_pos, test_neg]))
    labels = np.concatenate([np.ones(len(test_pos)), np.zeros(len(test_neg))])
    auc = auc_roc(scores, labels)
    cands = sample_candidate_negatives(full_graph, test_pos.ravel(), cfg.candidates, seed)
    rr = node_level_rank_metrics(X, clf, test_pos, cands, cfg.k_list)
    meta = dict(metadata or {})
    meta.update(evaluated_nodes=rr.evaluated_nodes, skipped_nodes=rr.skipped_nodes)
    return MetricReport(auc, rr.mrr, rr.hits, meta)
