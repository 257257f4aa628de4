"""Embedding files: tab-separated text and raw float32 binary."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<II")


def write_embeddings_text(path, X, labels=None) -> None:
    """One line per node: label, then the ``d`` coordinates, tab-separated.

    Seventeen significant digits, so float64 values survive a round trip.
    """
    X = np.asarray(X)
    labels = np.arange(len(X)) if labels is None else labels
    if len(labels) != len(X):
        raise ValueError("need one label per embedding row")
    with open(path, "w") as fh:
        for lab, row in zip(labels, X):
            fh.write(str(lab) + "\t" + "\t".join(f"{v:.17g}" for v in row) + "\n")


def read_embeddings_text(path):
    """Returns ``(labels, X)``; labels stay strings."""
    labels, rows = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            tok = line.rstrip("\n").split("\t")
            labels.append(tok[0])
            rows.append([float(t) for t in tok[1:]])
            if len(rows[-1]) != len(rows[0]):
                raise ValueError(f"{path}:{lineno}: expected {len(rows[0])} values, got {len(rows[-1])}")
    return labels, np.array(rows, dtype=np.float64)


def write_embeddings_binary(path, X) -> None:
    """8-byte header ``(n, d)`` as little-endian uint32, then float32 row-major data."""
    X = np.asarray(X)
    n, d = X.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(n, d))
        fh.write(np.ascontiguousarray(X, dtype="<f4").tobytes())


def read_embeddings_binary(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    n, d = _HEADER.unpack_from(raw)
    body = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    if body.size != n * d:
        raise ValueError(f"{path}: header says {n}x{d} but file holds {body.size} values")
    return body.reshape(n, d).astype(np.float64)


def read_embeddings(path):
    """Load either format, deciding by extension (``.bin`` is binary).

    Returns ``(labels or None, X)``.
    """
    if str(path).endswith(".bin"):
        return None, read_embeddings_binary(path)
    return read_embeddings_text(path)
