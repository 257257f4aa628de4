"""Undirected graph container, edge-list I/O, random generators and edge splits."""

from __future__ import annotations

import logging
import math
import pickle
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .rng import substream

log = logging.getLogger(__name__)


class EdgeListParseError(ValueError):
    """Raised for a malformed line in an edge-list file."""

    def __init__(self, path, lineno: int, line: str):
        super().__init__(f"{path}:{lineno}: expected two integer tokens, got {line!r}")
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple undirected graph on nodes ``0..n-1``.

    ``edges`` holds each undirected edge once as ``(u, v)`` with ``u < v``,
    sorted lexicographically.  ``indptr``/``indices`` form a CSR neighbour
    index with sorted neighbour lists.  ``labels[i]`` is the original id of
    node ``i`` when the graph was read from a file.
    """

    n: int
    edges: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    labels: np.ndarray | None = None
    _keys: np.ndarray = field(repr=False, default=None)

    @classmethod
    def from_edges(cls, n: int, edges, labels=None) -> "Graph":
        """Build a graph from any iterable of node pairs.

        Reversed duplicates and repeats are merged.  Self-loops are rejected;
        file loaders drop them before calling this.
        """
        if n < 1:
            raise ValueError("graph needs at least one node")
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValueError(f"edge endpoint outside [0, {n})")
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("self-loops are not allowed")
        e = np.sort(e, axis=1)
        keys = np.unique(e[:, 0] * n + e[:, 1])
        e = np.stack([keys // n, keys % n], axis=1)

        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        indices = dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        if labels is not None:
            labels = np.asarray(labels)
        g = cls(n=int(n), edges=e, indptr=indptr, indices=indices, labels=labels, _keys=keys)
        return g

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def has_edges(self, u, v) -> np.ndarray:
        """Vectorised membership test for the pairs ``(u[k], v[k])``."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        keys = np.minimum(u, v) * self.n + np.maximum(u, v)
        pos = np.searchsorted(self._keys, keys)
        pos = np.minimum(pos, max(len(self._keys) - 1, 0))
        if len(self._keys) == 0:
            return np.zeros(keys.shape, dtype=bool)
        return self._keys[pos] == keys

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.has_edges([u], [v])[0])

    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(len(self.indices), dtype=np.float64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def edge_density(self) -> float:
        return self.m / (self.n * (self.n - 1) / 2) if self.n > 1 else 0.0

    def is_connected(self) -> bool:
        if self.n == 1:
            return True
        ncomp, _ = sp.csgraph.connected_components(self.adjacency(), directed=False)
        return ncomp == 1

    def subgraph_edges(self, edges) -> "Graph":
        """Same node set, different edge set (labels carried over)."""
        return Graph.from_edges(self.n, edges, labels=self.labels)

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def load_edge_list(path, directed_hint: bool = False) -> Graph:
    """Read a whitespace-separated edge list.

    Lines starting with ``#`` and blank lines are skipped; tokens after the
    first two are ignored.  Node ids are re-indexed densely in increasing
    order of their original integer value.  With ``directed_hint`` the file
    is known to hold arcs; they are symmetrised like everything else.
    """
    path = Path(path)
    src, dst = [], []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            tok = s.split()
            if len(tok) < 2:
                raise EdgeListParseError(path, lineno, line.rstrip("\n"))
            try:
                a, b = int(tok[0]), int(tok[1])
            except ValueError:
                raise EdgeListParseError(path, lineno, line.rstrip("\n")) from None
            src.append(a)
            dst.append(b)
    if not src:
        raise ValueError(f"{path}: no edges found")
    return _graph_from_labelled_pairs(np.array(src), np.array(dst), directed_hint, str(path))


def _graph_from_labelled_pairs(src, dst, directed_hint, origin) -> Graph:
    labels, inv = np.unique(np.concatenate([src, dst]), return_inverse=True)
    e = inv.reshape(2, -1).T
    loops = e[:, 0] == e[:, 1]
    n_loops = int(loops.sum())
    if n_loops:
        warnings.warn(f"{origin}: dropped {n_loops} self-loop(s)", stacklevel=3)
        e = e[~loops]
    g = Graph.from_edges(len(labels), e, labels=labels)
    if g.m == 0:
        raise ValueError(f"{origin}: graph has no edges after removing self-loops")
    merged = len(e) - g.m
    if merged:
        log.info("%s: merged %d duplicate%s edge line(s)", origin, merged,
                 "/reversed" if directed_hint else "")
    return g


def load_planetoid_graph(path) -> Graph:
    """Read a Planetoid ``ind.<name>.graph`` pickle (dict of adjacency lists).

    Node ids in these files are already dense, so nodes that appear only as
    dict keys with empty lists are kept as isolated nodes.
    """
    with open(path, "rb") as fh:
        adj = pickle.load(fh, encoding="latin1")
    n = max(max(adj.keys()), max((max(v) for v in adj.values() if len(v)), default=0)) + 1
    pairs = [(u, v) for u, nbrs in adj.items() for v in nbrs if u != v]
    return Graph.from_edges(n, pairs, labels=np.arange(n))


def write_edge_list(path, edges, header: str | None = None) -> None:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    with open(path, "w") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        np.savetxt(fh, edges, fmt="%d")


def read_pairs(path) -> np.ndarray:
    """Read an edge-list file as raw integer pairs, with no re-indexing."""
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            tok = s.split()
            try:
                rows.append((int(tok[0]), int(tok[1])))
            except (ValueError, IndexError):
                raise EdgeListParseError(path, lineno, line.rstrip("\n")) from None
    return np.array(rows, dtype=np.int64).reshape(-1, 2)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

_PAIR_CHUNK = 1 << 22


def sbm_blocks(n: int, block_count: int) -> np.ndarray:
    """Block id per node: equal blocks of ``n // block_count``, remainder to the last."""
    size = n // block_count
    blocks = np.minimum(np.arange(n) // size, block_count - 1)
    return blocks


def generate_sbm(n: int, block_count: int, p_within: float, p_between: float, seed) -> Graph:
    if n < block_count or block_count < 1:
        raise ValueError(f"need n >= block_count >= 1, got n={n}, blocks={block_count}")
    for p in (p_within, p_between):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability {p} outside [0, 1]")
    rng = substream(seed, "graph")
    blocks = sbm_blocks(n, block_count)
    # walk the upper triangle in row chunks; the draws match one call over all pairs
    kept = []
    r0 = 0
    while r0 < n - 1:
        r1, count = r0, 0
        while r1 < n - 1 and (count == 0 or count + (n - 1 - r1) <= _PAIR_CHUNK):
            count += n - 1 - r1
            r1 += 1
        rows = np.arange(r0, r1)
        iu = np.repeat(rows, n - 1 - rows)
        ju = np.arange(len(iu)) - np.repeat(np.cumsum(n - 1 - rows) - (n - 1 - rows), n - 1 - rows) + iu + 1
        prob = np.where(blocks[iu] == blocks[ju], p_within, p_between)
        keep = rng.random(len(iu)) < prob
        kept.append(np.stack([iu[keep], ju[keep]], axis=1))
        r0 = r1
    edges = np.concatenate(kept) if kept else np.empty((0, 2), dtype=np.int64)
    return Graph.from_edges(n, edges)


def generate_erdos_renyi(n: int, p: float, seed) -> Graph:
    return generate_sbm(n, 1, p, p, seed)


def connected_erdos_renyi(n: int, p: float, seed, max_tries: int = 1000) -> tuple[Graph, int]:
    """Resample G(n, p) until connected; returns the graph and the attempt index used."""
    for attempt in range(max_tries):
        g = generate_erdos_renyi(n, p, (seed, attempt))
        if g.is_connected():
            return g, attempt
    raise RuntimeError(f"no connected G({n}, {p}) in {max_tries} draws")


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

def local_clustering(g: Graph) -> np.ndarray:
    a = g.adjacency()
    tri2 = np.asarray((a @ a).multiply(a).sum(axis=1)).ravel()  # 2 * triangles at v
    deg = g.degrees.astype(np.float64)
    denom = deg * (deg - 1)
    out = np.zeros(g.n)
    ok = deg >= 2
    out[ok] = tri2[ok] / denom[ok]
    return out


def average_clustering_coefficient(g: Graph) -> float:
    return float(local_clustering(g).mean())


# ---------------------------------------------------------------------------
# train / validation / test split
# ---------------------------------------------------------------------------

@dataclass
class EdgeSplit:
    n: int
    train_edges: np.ndarray
    validation_edges: np.ndarray
    test_edges: np.ndarray
    negative_test_edges: np.ndarray
    negative_validation_edges: np.ndarray

    SUFFIXES = {
        "train_edges": ".train",
        "validation_edges": ".valid",
        "test_edges": ".test",
        "negative_test_edges": ".testneg",
        "negative_validation_edges": ".validneg",
    }

    def train_graph(self, labels=None) -> Graph:
        return Graph.from_edges(self.n, self.train_edges, labels=labels)

    def save(self, prefix) -> None:
        prefix = str(prefix)
        for attr, suffix in self.SUFFIXES.items():
            write_edge_list(prefix + suffix, getattr(self, attr), header=f"n={self.n}")

    @classmethod
    def load(cls, prefix) -> "EdgeSplit":
        prefix = str(prefix)
        n = None
        with open(prefix + ".train") as fh:
            first = fh.readline()
        if first.startswith("# n="):
            n = int(first[4:])
        parts = {}
        for attr, suffix in cls.SUFFIXES.items():
            p = Path(prefix + suffix)
            parts[attr] = read_pairs(p) if p.exists() else np.empty((0, 2), dtype=np.int64)
        if n is None:
            n = int(max(a.max() for a in parts.values() if a.size)) + 1
        return cls(n=n, **parts)


def _sample_non_edges(g: Graph, count: int, rng, exclude=None) -> np.ndarray:
    """``count`` distinct unordered non-adjacent pairs, uniformly at random."""
    n = g.n
    taken = set() if exclude is None else {min(u, v) * n + max(u, v) for u, v in exclude}
    available = n * (n - 1) // 2 - g.m - len(taken)
    if count > available:
        raise ValueError(f"graph too dense: need {count} non-edges, only {available} exist")
    if count == 0:
        return np.empty((0, 2), dtype=np.int64)
    if available <= 4 * count:
        iu, ju = np.triu_indices(n, k=1)
        ok = ~g.has_edges(iu, ju)
        if taken:
            ok &= ~np.isin(iu * n + ju, np.fromiter(taken, dtype=np.int64))
        cand = np.stack([iu[ok], ju[ok]], axis=1)
        return cand[rng.choice(len(cand), size=count, replace=False)]
    out = []
    while len(out) < count:
        need = count - len(out)
        u = rng.integers(0, n, size=2 * need + 16)
        v = rng.integers(0, n, size=2 * need + 16)
        ok = (u != v) & ~g.has_edges(u, v)
        for a, b in zip(u[ok], v[ok]):
            key = min(a, b) * n + max(a, b)
            if key not in taken:
                taken.add(key)
                out.append((min(a, b), max(a, b)))
                if len(out) == count:
                    break
    return np.array(out, dtype=np.int64)


def split_edges(g: Graph, ratios=(0.7, 0.1, 0.2), seed=0) -> EdgeSplit:
    """Uniform random train/validation/test partition of the edge set.

    Validation and test sizes are floors of their shares; train takes the
    remainder.  Negative validation and test pairs are disjoint non-edges of
    the full graph, one per positive.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or min(ratios) <= 0 or not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
        raise ValueError(f"ratios must be three positive numbers summing to 1, got {ratios}")
    rng = substream(seed, "split")
    m = g.m
    n_val = int(math.floor(ratios[1] * m + 1e-9))
    n_test = int(math.floor(ratios[2] * m + 1e-9))
    perm = rng.permutation(m)
    e = g.edges[perm]
    val, test, train = e[:n_val], e[n_val:n_val + n_test], e[n_val + n_test:]
    neg_test = _sample_non_edges(g, n_test, rng)
    neg_val = _sample_non_edges(g, n_val, rng, exclude=neg_test)
    return EdgeSplit(g.n, train, val, test, neg_test, neg_val)
