"""Locating and loading the citation benchmarks (Cora, CiteSeer, PubMed).

Nothing is downloaded.  Files are looked up in ``$DIMREG_DATA`` (default
``./data``) under any of these names, first match wins:

* ``<name>.edgelist`` / ``<name>.txt``: integer edge list,
* ``<name>.cites``: whitespace-separated citation pairs, ids may be strings,
* ``ind.<name>.graph``: Planetoid adjacency pickle.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .graph import EdgeListParseError, Graph, _graph_from_labelled_pairs, load_edge_list, load_planetoid_graph

DATA_ENV = "DIMREG_DATA"
KNOWN = ("cora", "citeseer", "pubmed")


class DatasetNotFound(FileNotFoundError):
    pass


def data_dir() -> Path:
    return Path(os.environ.get(DATA_ENV, "data"))


def candidates(name: str, root=None) -> list[Path]:
    root = Path(root) if root is not None else data_dir()
    name = name.lower()
    return [root / f"{name}.edgelist", root / f"{name}.txt", root / f"{name}.cites",
            root / name / f"{name}.cites", root / f"ind.{name}.graph"]


def load_cites(path) -> Graph:
    """Citation pairs with arbitrary (string) ids; ids re-indexed in sorted order."""
    src, dst = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            tok = line.split()
            if not tok or tok[0].startswith("#"):
                continue
            if len(tok) < 2:
                raise EdgeListParseError(path, lineno, line.rstrip("\n"))
            src.append(tok[0])
            dst.append(tok[1])
    if not src:
        raise ValueError(f"{path}: no edges found")
    return _graph_from_labelled_pairs(np.array(src), np.array(dst), True, str(path))


def load_dataset(name: str, root=None) -> Graph:
    for p in candidates(name, root):
        if not p.exists():
            continue
        if p.name.startswith("ind."):
            return load_planetoid_graph(p)
        if p.suffix == ".cites":
            return load_cites(p)
        return load_edge_list(p)
    tried = ", ".join(str(p) for p in candidates(name, root))
    raise DatasetNotFound(f"dataset {name!r} not found; set {DATA_ENV} to a directory holding one of: {tried}")


def available(name: str, root=None) -> bool:
    return any(p.exists() for p in candidates(name, root))
