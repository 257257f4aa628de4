"""Reproducible runs on disk: train, evaluate, and staged hyperparameter sweeps."""

from __future__ import annotations

import csv
import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import datasets
from .config import RunConfig, apply_overrides
from .experiments import positive_pairs, run_variant, variant_config
from .graph import EdgeSplit, Graph, load_edge_list, load_planetoid_graph, split_edges
from .io import read_embeddings, write_embeddings_binary, write_embeddings_text
from .linkpred import ClassifierConfig, MetricReport, evaluate_link_prediction
from .trainer import train

log = logging.getLogger(__name__)


def load_graph(dataset: str) -> Graph:
    """A file path (edge list, ``.cites`` or Planetoid pickle) or a dataset name."""
    p = Path(dataset)
    if p.is_file():
        if p.name.startswith("ind."):
            return load_planetoid_graph(p)
        if p.suffix == ".cites":
            return datasets.load_cites(p)
        return load_edge_list(p)
    return datasets.load_dataset(dataset)


def graph_from_split(split: EdgeSplit) -> Graph:
    edges = np.concatenate([split.train_edges, split.validation_edges, split.test_edges])
    return Graph.from_edges(split.n, edges)


def train_run(cfg: RunConfig, out) -> Path:
    """Split, embed and write everything under the config's hashed run directory."""
    run = cfg.run_dir(out)
    run.mkdir(parents=True, exist_ok=True)
    cfg.write(run / "config.json")
    g = load_graph(cfg.dataset)
    split = split_edges(g, cfg.split_ratios, cfg.seed)
    split.save(run / "split")
    tg = split.train_graph()
    pairs = positive_pairs(tg, cfg.method, cfg.walk, cfg.seed)
    X, trace = train(tg, pairs, variant_config(cfg.train, cfg.variant), cfg.seed)
    write_embeddings_text(run / "embeddings.tsv", X, g.labels)
    write_embeddings_binary(run / "embeddings.bin", X)
    trace.to_csv(run / "trace.csv")
    log.info("wrote %s (%d pairs, %.2fs training)", run, len(pairs), trace.train_seconds)
    return run


def eval_run(embeddings, split_prefix, clf_cfg: ClassifierConfig, seed=0, metadata=None) -> MetricReport:
    _, X = read_embeddings(embeddings)
    split = EdgeSplit.load(split_prefix)
    if len(X) != split.n:
        raise ValueError(f"embeddings have {len(X)} rows but the split has {split.n} nodes")
    if len(split.test_edges) == 0:
        raise ValueError("empty test set")
    return evaluate_link_prediction(X, split.train_graph(), graph_from_split(split), split.test_edges,
                                    split.negative_test_edges, clf_cfg, seed, metadata)


# ---------------------------------------------------------------------------
# staged sweep
# ---------------------------------------------------------------------------

@dataclass
class SweepGrid:
    eta: tuple = (0.001, 0.01, 0.1, 1.0)
    p: tuple = (0.25, 0.5, 1.0, 2.0, 4.0)
    q: tuple = (0.25, 0.5, 1.0, 2.0, 4.0)
    n_negative: tuple = (5, 10, 100)
    lam: tuple = (0.1, 1.0, 10.0, 100.0)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepGrid":
        d = {("lam" if k == "lambda" else k): tuple(v) for k, v in (d or {}).items()}
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown grid key(s) {sorted(unknown)}")
        return cls(**d)


def sweep_stages(cfg: RunConfig, grid: SweepGrid):
    """Stages in order: learning rate, walk bias (node2vec), regulariser (variant II)."""
    yield "eta", [{"train.eta": v} for v in grid.eta]
    if cfg.method == "node2vec":
        yield "walk", [{"walk.p": p, "walk.q": q} for p, q in itertools.product(grid.p, grid.q)]
    if cfg.variant == "II":
        yield "regularizer", [{"train.n_negative": k, "train.lambda": v}
                              for k, v in itertools.product(grid.n_negative, grid.lam)]


def _cell_key(stage, params):
    return f"{stage}|{json.dumps(params, sort_keys=True)}"


def _evaluate_cell(base: dict, params: dict, on_validation: bool) -> MetricReport:
    cfg = RunConfig.from_dict(apply_overrides(base, [f"{k}={json.dumps(v)}" for k, v in params.items()]))
    g = load_graph(cfg.dataset)
    split = split_edges(g, cfg.split_ratios, cfg.seed)
    try:
        return run_variant(g, split, cfg.method, cfg.variant, cfg.train, cfg.walk, cfg.classifier, cfg.seed,
                           dataset=cfg.dataset, on_validation=on_validation).report
    except FloatingPointError as exc:
        log.warning("cell %s diverged: %s", params, exc)
        return None


FIELDS = ["stage", "params", "val_auc_roc", "val_mrr", "best"]


def run_sweep(base: dict, grid: SweepGrid, out_csv, workers: int = 1) -> dict:
    """Grid search maximising validation AUC-ROC; finished cells in ``out_csv`` are reused.

    Returns the winning parameter overrides together with the test metrics
    of the winning configuration.
    """
    out_csv = Path(out_csv)
    done = {}
    if out_csv.exists():
        with out_csv.open() as fh:
            for row in csv.DictReader(fh):
                done[_cell_key(row["stage"], json.loads(row["params"]))] = row
    chosen: dict = {}
    stage = None
    cfg = RunConfig.from_dict(base)
    new = not out_csv.exists()
    with out_csv.open("a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=FIELDS)
        if new:
            w.writeheader()
        for stage, cells in sweep_stages(cfg, grid):
            cells = [{**chosen, **c} for c in cells]
            todo = [c for c in cells if _cell_key(stage, c) not in done]
            if workers > 1 and len(todo) > 1:
                with ProcessPoolExecutor(workers) as pool:
                    reports = list(pool.map(_evaluate_cell, [base] * len(todo), todo, [True] * len(todo)))
            else:
                reports = [_evaluate_cell(base, c, True) for c in todo]
            for c, rep in zip(todo, reports):
                row = {"stage": stage, "params": json.dumps(c, sort_keys=True),
                       "val_auc_roc": "nan" if rep is None else rep.auc_roc,
                       "val_mrr": "nan" if rep is None else rep.mrr, "best": 0}
                w.writerow(row)
                fh.flush()
                done[_cell_key(stage, c)] = row
            scored = [(float(done[_cell_key(stage, c)]["val_auc_roc"]), i) for i, c in enumerate(cells)]
            scored = [(s, i) for s, i in scored if s == s]
            if not scored:
                raise RuntimeError(f"every cell of stage {stage!r} diverged")
            chosen = cells[max(scored)[1]]
    _mark_best(out_csv, stage, chosen)
    final = _evaluate_cell(base, chosen, False)
    return {"params": chosen, "test": final.to_dict() if final is not None else None}


def _mark_best(path: Path, stage: str, chosen: dict) -> None:
    with path.open() as fh:
        rows = list(csv.DictReader(fh))
    target = json.dumps(chosen, sort_keys=True)
    for r in rows:
        r["best"] = int(r["params"] == target and r["stage"] == stage)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=FIELDS)
        w.writeheader()
        w.writerows(rows)
