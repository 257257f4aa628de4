"""Skip-gram embedding training with interchangeable repulsion.

Every mini-batch of positive pairs pulls each pair together.  Repulsion is
one of

* ``sgns``   -- k sampled negatives per positive pair (vanilla LINE/node2vec),
* ``none``   -- attraction only,
* ``dimreg`` -- every ``n_negative`` batches, re-centre the embedding
  dimensions with a dimension-mean regularisation step.

Within a batch all gradient terms are evaluated on the pre-batch snapshot of
``X`` and summed, so the result does not depend on pair order.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .optim import AdamState, adam_step
from .rng import substream
from .objectives import log_sigmoid, sigmoid
from .walks import PairSet

log = logging.getLogger(__name__)

REPULSION_MODES = ("sgns", "none", "dimreg")


class TrainingDiverged(FloatingPointError):
    def __init__(self, batch_index: int, epoch: int | None = None):
        where = f"batch {batch_index}" + (f" (epoch {epoch})" if epoch is not None else "")
        super().__init__(f"non-finite embedding entries after {where}; learning rate too large?")
        self.batch_index = batch_index


@dataclass
class TrainConfig:
    dim: int = 128
    eta: float = 0.01
    lam: float = 1.0
    n_negative: int = 10
    k: int = 1
    alpha: float = 0.0
    batch_size: int = 1024
    epochs: int = 5
    repulsion_mode: str = "sgns"
    init_scale: float = 1e-2
    optimizer: str = "adam"
    weight_vector_mode: str = "uniform"
    # "gradient": negatives weighted by sigma(+<x_i, x_j'>); "printed" uses sigma(-<.,.>)
    sgns_weight: str = "gradient"
    # how the dimreg step is applied under adam: through the optimiser or as the raw centring step
    reg_step: str = "optimizer"
    none_epoch_cap: int | None = 2
    track_constriction: bool = True

    def __post_init__(self):
        if self.repulsion_mode not in REPULSION_MODES:
            raise ValueError(f"repulsion_mode must be one of {REPULSION_MODES}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError("optimizer must be 'sgd' or 'adam'")
        if self.weight_vector_mode not in ("uniform", "degree_alpha"):
            raise ValueError("weight_vector_mode must be 'uniform' or 'degree_alpha'")
        if self.sgns_weight not in ("gradient", "printed"):
            raise ValueError("sgns_weight must be 'gradient' or 'printed'")
        if self.reg_step not in ("optimizer", "direct"):
            raise ValueError("reg_step must be 'optimizer' or 'direct'")
        if self.eta < 0 or self.lam < 0 or self.alpha < 0 or self.k < 0:
            raise ValueError("eta, lam, alpha and k must be non-negative")
        if self.init_scale <= 0:
            raise ValueError("init_scale must be positive")
        if min(self.dim, self.n_negative, self.batch_size, self.epochs) < 1:
            raise ValueError("dim, n_negative, batch_size and epochs must be >= 1")
        if self.repulsion_mode == "sgns" and self.k < 1:
            raise ValueError("sgns repulsion needs k >= 1")

    @property
    def effective_epochs(self) -> int:
        if self.repulsion_mode == "none" and self.none_epoch_cap is not None:
            return min(self.epochs, self.none_epoch_cap)
        return self.epochs

    def to_dict(self):
        return asdict(self)


# ---------------------------------------------------------------------------
# negative sampling
# ---------------------------------------------------------------------------

class NegativeSampler:
    """Draws nodes with probability proportional to ``degree ** alpha`` (alias method)."""

    def __init__(self, degrees, alpha: float = 0.75):
        deg = np.asarray(degrees, dtype=np.float64)
        w = np.where(deg > 0, deg ** alpha, 0.0) if alpha > 0 else np.ones_like(deg)
        if w.sum() <= 0:
            raise ValueError("all sampling weights are zero")
        self.probs = w / w.sum()
        self.prob, self.alias = _alias_table(self.probs)

    @property
    def n(self):
        return len(self.probs)

    def sample(self, size, rng) -> np.ndarray:
        i = rng.integers(0, self.n, size=size)
        keep = rng.random(size=size) < self.prob[i]
        return np.where(keep, i, self.alias[i])


def _alias_table(probs):
    n = len(probs)
    scaled = probs * n
    prob = np.ones(n)
    alias = np.arange(n)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s, g = small.pop(), large.pop()
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = scaled[g] + scaled[s] - 1.0
        (small if scaled[g] < 1.0 else large).append(g)
    # leftovers are 1 up to rounding
    return prob, alias


# ---------------------------------------------------------------------------
# update rules
# ---------------------------------------------------------------------------

def init_embeddings(n: int, d: int, init_scale: float, seed) -> np.ndarray:
    if init_scale <= 0:
        raise ValueError("init_scale must be positive")
    return substream(seed, "init").normal(0.0, init_scale, size=(n, d))


def _scatter_rows(idx, vals):
    """Sum ``vals`` rows that share an index; returns (unique rows, sums)."""
    rows, inv = np.unique(idx, return_inverse=True)
    agg = sp.csr_matrix((np.ones(len(idx)), (inv, np.arange(len(idx)))), shape=(len(rows), len(idx)))
    return rows, agg @ vals


def batch_gradient(X, batch, negatives=None, sgns_weight="gradient"):
    """Gradient of the batch skip-gram loss, aggregated per touched row.

    ``batch`` is ``(B, 2)`` ordered positive pairs; ``negatives`` an optional
    ``(B, k)`` array of sampled nodes repelled from each pair's source.
    Returns ``(rows, grad, positive_loss)``.
    """
    i, j = batch[:, 0], batch[:, 1]
    Xi, Xj = X[i], X[j]
    z = np.einsum("bd,bd->b", Xi, Xj)
    c = sigmoid(-z)[:, None]
    idx = [i, j]
    vals = [-c * Xj, -c * Xi]
    if negatives is not None and negatives.size:
        k = negatives.shape[1]
        src = np.repeat(i, k)
        neg = negatives.ravel()
        Xs, Xn = X[src], X[neg]
        zn = np.einsum("bd,bd->b", Xs, Xn)
        cn = (sigmoid(zn) if sgns_weight == "gradient" else sigmoid(-zn))[:, None]
        idx += [src, neg]
        vals += [cn * Xn, cn * Xs]
    rows, grad = _scatter_rows(np.concatenate(idx), np.concatenate(vals))
    return rows, grad, -float(np.sum(log_sigmoid(z)))


def positive_update(X, batch, eta):
    """Attraction step on a batch of pairs, in place; returns ``X``."""
    batch = np.asarray(batch, dtype=np.int64).reshape(-1, 2)
    rows, grad, _ = batch_gradient(X, batch)
    X[rows] -= eta * grad
    if not np.all(np.isfinite(X[rows])):
        raise TrainingDiverged(0)
    return X


def sgns_update(X, batch, sampler: NegativeSampler, k: int, eta, rng, sgns_weight="gradient"):
    """Negative-sampling repulsion alone for a batch, in place; returns ``X``."""
    if k == 0:
        return X
    batch = np.asarray(batch, dtype=np.int64).reshape(-1, 2)
    negatives = sampler.sample((len(batch), k), rng)
    src = np.repeat(batch[:, 0], k)
    neg = negatives.ravel()
    Xs, Xn = X[src], X[neg]
    zn = np.einsum("bd,bd->b", Xs, Xn)
    cn = (sigmoid(zn) if sgns_weight == "gradient" else sigmoid(-zn))[:, None]
    rows, grad = _scatter_rows(np.concatenate([src, neg]), np.concatenate([cn * Xn, cn * Xs]))
    X[rows] -= eta * grad
    if not np.all(np.isfinite(X[rows])):
        raise TrainingDiverged(0)
    return X


def regularizer_weights(degrees, mode: str, alpha: float):
    """Normalised weight vector for the dimension-mean regulariser (``None`` = uniform)."""
    if mode == "uniform":
        return None
    deg = np.asarray(degrees, dtype=np.float64)
    w = np.where(deg > 0, deg ** alpha, 0.0) if alpha > 0 else np.ones_like(deg)
    return w / w.sum()


def dimreg_direction(X, weights=None):
    """``n * p (p^T X)``; for uniform ``p`` this is each column mean broadcast to all rows."""
    if weights is None:
        return np.broadcast_to(X.mean(axis=0), X.shape)
    w = np.asarray(weights, dtype=np.float64)
    return len(X) * np.outer(w, w @ X)


def dimreg_update(X, lam, weights=None):
    """Dimension-mean regularisation step ``X -= lam * n * p (p^T X)``, in place.

    With uniform ``p = 1/n`` this subtracts ``lam`` times the column means from
    every row, so ``lam = 1`` centres every dimension exactly.
    """
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)
        if np.any(w < 0) or not np.isclose(w.sum(), 1.0, atol=1e-9):
            raise ValueError("weights must be non-negative and sum to 1")
    X -= lam * dimreg_direction(X, weights)
    return X


def constriction(X, block: int = 4000) -> float:
    """Minimum dot product over all ordered row pairs, diagonal included."""
    n = len(X)
    if n == 0:
        raise ValueError("empty embedding matrix")
    if n <= block:
        return float(np.min(X @ X.T))
    return float(min(np.min(X[s:s + block] @ X.T) for s in range(0, n, block)))


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

@dataclass
class TrainingTrace:
    records: list = field(default_factory=list)
    CSV_COLUMNS = ("epoch", "positive_loss", "constriction", "wall_clock_ms")

    def add(self, **row):
        self.records.append(row)

    def column(self, name):
        return np.array([r[name] for r in self.records], dtype=np.float64)

    @property
    def train_seconds(self) -> float:
        return self.records[-1]["wall_clock_ms"] / 1000.0 if self.records else 0.0

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.CSV_COLUMNS)
            for r in self.records:
                w.writerow([r["epoch"], repr(r["positive_loss"]), repr(r["constriction"]),
                            f"{r['wall_clock_ms']:.3f}"])


def mean_positive_loss(X, P, chunk: int = 1 << 16) -> float:
    """Mean of ``-log sigmoid(<x_i, x_j>)`` over pairs, in chunks to bound memory."""
    total = 0.0
    for s in range(0, len(P), chunk):
        b = P[s:s + chunk]
        total -= float(np.sum(log_sigmoid(np.einsum("bd,bd->b", X[b[:, 0]], X[b[:, 1]]))))
    return total / len(P)


def train(g, pairs: PairSet, cfg: TrainConfig, seed, X0=None):
    """Train embeddings for ``g.n`` nodes from positive ``pairs``.

    Returns ``(X, trace)``.  ``trace`` holds one record per epoch (epoch 0 is
    the initial state) with the mean positive loss seen during the epoch, the
    constriction at its end (NaN when tracking is off) and cumulative
    training wall time excluding the tracking itself.
    """
    if len(pairs) == 0:
        raise ValueError("no positive pairs to train on")
    n = g.n
    X = init_embeddings(n, cfg.dim, cfg.init_scale, seed) if X0 is None else np.array(X0, dtype=np.float64)
    if X.shape != (n, cfg.dim):
        raise ValueError(f"initial embeddings have shape {X.shape}, expected {(n, cfg.dim)}")
    mode = cfg.repulsion_mode
    epochs = cfg.effective_epochs
    if epochs < cfg.epochs:
        log.info("attraction-only training capped at %d epochs", epochs)

    batch_rng = substream(seed, "batches")
    neg_rng = substream(seed, "sampler")
    sampler = NegativeSampler(g.degrees, cfg.alpha) if mode == "sgns" else None
    reg_w = regularizer_weights(g.degrees, cfg.weight_vector_mode, cfg.alpha) if mode == "dimreg" else None
    adam = AdamState.zeros_like(X) if cfg.optimizer == "adam" else None
    direct_reg = cfg.optimizer == "sgd" or cfg.reg_step == "direct"

    P = pairs.pairs
    trace = TrainingTrace()
    trace.add(epoch=0, positive_loss=mean_positive_loss(X, P),
              constriction=constriction(X) if cfg.track_constriction else float("nan"), wall_clock_ms=0.0)
    elapsed = 0.0
    t = 0
    for epoch in range(1, epochs + 1):
        start = time.perf_counter()
        order = batch_rng.permutation(len(P))
        loss_sum = 0.0
        for b in range(0, len(P), cfg.batch_size):
            batch = P[order[b:b + cfg.batch_size]]
            negatives = sampler.sample((len(batch), cfg.k), neg_rng) if sampler is not None else None
            rows, grad, loss = batch_gradient(X, batch, negatives, cfg.sgns_weight)
            loss_sum += loss
            if adam is None:
                X[rows] -= cfg.eta * grad
            else:
                adam_step(X, adam, grad, cfg.eta, rows=rows)
            if not np.all(np.isfinite(X[rows])):
                raise TrainingDiverged(t, epoch)
            t += 1
            if mode == "dimreg" and t % cfg.n_negative == 0 and cfg.lam > 0:
                if direct_reg:
                    dimreg_update(X, cfg.lam, reg_w)
                else:
                    adam_step(X, adam, cfg.lam * dimreg_direction(X, reg_w), cfg.eta)
                if not np.all(np.isfinite(X)):
                    raise TrainingDiverged(t, epoch)
        elapsed += time.perf_counter() - start
        trace.add(epoch=epoch, positive_loss=loss_sum / len(P),
                  constriction=constriction(X) if cfg.track_constriction else float("nan"),
                  wall_clock_ms=elapsed * 1000.0, batches=t)
    return X, trace
