"""Positive pair generation: edge pairs for LINE, biased random walks for node2vec."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph
from .rng import substream


@dataclass(frozen=True)
class WalkConfig:
    p: float = 1.0
    q: float = 1.0
    walk_length: int = 20
    walks_per_node: int = 10
    context_size: int = 5

    def __post_init__(self):
        if self.p <= 0 or self.q <= 0:
            raise ValueError("p and q must be positive")
        if self.walk_length < 2 or self.walks_per_node < 1 or self.context_size < 1:
            raise ValueError("walk_length >= 2, walks_per_node >= 1, context_size >= 1 required")
        if self.context_size >= self.walk_length:
            raise ValueError("context_size must be smaller than walk_length")


@dataclass
class PairSet:
    """Multiset of ordered positive (source, target) pairs over ``n`` nodes."""

    pairs: np.ndarray
    n: int

    def __post_init__(self):
        self.pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        if self.pairs.size and (self.pairs.min() < 0 or self.pairs.max() >= self.n):
            raise ValueError("pair endpoint outside node range")

    def __len__(self):
        return len(self.pairs)

    @property
    def per_node_count(self) -> float:
        return len(self.pairs) / self.n


def pairs_from_edges(g: Graph) -> PairSet:
    return PairSet(np.concatenate([g.edges, g.edges[:, ::-1]]), g.n)


# ---------------------------------------------------------------------------
# second-order walks
# ---------------------------------------------------------------------------

def transition_probabilities(g: Graph, prev: int, cur: int, p: float, q: float) -> np.ndarray:
    """Exact next-step distribution over ``g.neighbors(cur)`` having arrived from ``prev``."""
    nbrs = g.neighbors(cur)
    w = np.where(nbrs == prev, 1.0 / p, np.where(g.has_edges(np.full(len(nbrs), prev), nbrs), 1.0, 1.0 / q))
    return w / w.sum()


def _walk_scan(g: Graph, start: int, cfg: WalkConfig, rng) -> list[int]:
    """One walk by a cumulative scan over the exact transition weights."""
    walk = [start]
    nbrs = g.neighbors(start)
    if len(nbrs) == 0:
        return walk
    walk.append(int(nbrs[rng.integers(len(nbrs))]))
    while len(walk) < cfg.walk_length:
        prev, cur = walk[-2], walk[-1]
        nbrs = g.neighbors(cur)
        if len(nbrs) == 0:
            break
        cdf = np.cumsum(transition_probabilities(g, prev, cur, cfg.p, cfg.q))
        walk.append(int(nbrs[min(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"), len(nbrs) - 1)]))
    return walk


def _walks_rejection(g: Graph, starts: np.ndarray, cfg: WalkConfig, rng) -> np.ndarray:
    """All walks advanced in lockstep; each step proposes a uniform neighbour
    and accepts it with probability weight / max weight."""
    deg = g.degrees
    W, L = len(starts), cfg.walk_length
    walks = np.empty((W, L), dtype=np.int64)
    walks[:, 0] = starts
    walks[:, 1] = g.indices[g.indptr[starts] + rng.integers(0, deg[starts])]
    inv_p, inv_q = 1.0 / cfg.p, 1.0 / cfg.q
    w_max = max(inv_p, 1.0, inv_q)
    uniform = cfg.p == 1.0 and cfg.q == 1.0
    for step in range(2, L):
        prev, cur = walks[:, step - 2], walks[:, step - 1]
        nxt = np.empty(W, dtype=np.int64)
        todo = np.arange(W)
        while len(todo):
            c = cur[todo]
            cand = g.indices[g.indptr[c] + rng.integers(0, deg[c])]
            if uniform:
                nxt[todo] = cand
                break
            t = prev[todo]
            w = np.where(cand == t, inv_p, np.where(g.has_edges(t, cand), 1.0, inv_q))
            acc = rng.random(len(todo)) * w_max < w
            nxt[todo[acc]] = cand[acc]
            todo = todo[~acc]
        walks[:, step] = nxt
    return walks


def generate_walks(g: Graph, cfg: WalkConfig, seed, method: str = "rejection") -> np.ndarray:
    """``walks_per_node`` second-order walks from every non-isolated node.

    Returns an array of shape ``(walks_per_node * n_active, walk_length)``;
    rounds are stacked, each round visiting start nodes in a fresh random
    order.  ``method="scan"`` samples each step from the explicit cumulative
    distribution, ``"rejection"`` (default) advances all walkers at once; both
    draw from the same transition law.
    """
    if g.m == 0:
        raise ValueError("cannot walk on a graph without edges")
    rng = substream(seed, "walks")
    active = np.flatnonzero(g.degrees > 0)
    starts = np.concatenate([rng.permutation(active) for _ in range(cfg.walks_per_node)])
    if method == "rejection":
        return _walks_rejection(g, starts, cfg, rng)
    if method == "scan":
        return np.array([_walk_scan(g, int(s), cfg, rng) for s in starts], dtype=np.int64)
    raise ValueError(f"unknown walk method {method!r}")


def pairs_from_walks(walks, context_size: int, n: int | None = None) -> PairSet:
    """Ordered (walk[i], walk[j]) pairs for every ``0 < |i - j| <= context_size``."""
    if context_size < 1:
        raise ValueError("context_size must be >= 1")
    if isinstance(walks, np.ndarray) and walks.ndim == 2:
        rows = [walks]
    else:
        rows = [np.asarray(w, dtype=np.int64)[None, :] for w in walks]
    out = []
    for w in rows:
        for off in range(1, min(context_size, w.shape[1] - 1) + 1):
            a, b = w[:, :-off].ravel(), w[:, off:].ravel()
            out.append(np.stack([a, b], axis=1))
            out.append(np.stack([b, a], axis=1))
    pairs = np.concatenate(out) if out else np.empty((0, 2), dtype=np.int64)
    if n is None:
        n = int(pairs.max()) + 1 if len(pairs) else 1
    return PairSet(pairs, n)


def write_walks(path, walks) -> None:
    with open(path, "w") as fh:
        for w in walks:
            fh.write(" ".join(map(str, w)) + "\n")
