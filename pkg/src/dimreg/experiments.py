"""End-to-end link-prediction runs shared by the CLI, scripts and acceptance tests."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .graph import EdgeSplit, Graph, generate_sbm, split_edges
from .linkpred import ClassifierConfig, MetricReport, evaluate_link_prediction
from .trainer import TrainConfig, train
from .walks import PairSet, WalkConfig, generate_walks, pairs_from_edges, pairs_from_walks

VARIANT_MODES = {"I": "sgns", "II0": "none", "II": "dimreg"}
METHODS = ("line", "node2vec")


def variant_config(base: TrainConfig, variant: str) -> TrainConfig:
    try:
        mode = VARIANT_MODES[variant]
    except KeyError:
        raise ValueError(f"unknown variant {variant!r}; expected one of {sorted(VARIANT_MODES)}") from None
    return replace(base, repulsion_mode=mode)


def positive_pairs(train_graph: Graph, method: str, walk_cfg: WalkConfig | None = None, seed=0) -> PairSet:
    if method == "line":
        return pairs_from_edges(train_graph)
    if method == "node2vec":
        walks = generate_walks(train_graph, walk_cfg or WalkConfig(), seed)
        return pairs_from_walks(walks, (walk_cfg or WalkConfig()).context_size, train_graph.n)
    raise ValueError(f"method must be one of {METHODS}")


@dataclass
class RunResult:
    report: MetricReport
    X: np.ndarray
    trace: object
    pair_count: int
    train_seconds: float


def run_variant(g: Graph, split: EdgeSplit, method: str, variant: str, train_cfg: TrainConfig,
                walk_cfg: WalkConfig | None = None, clf_cfg: ClassifierConfig = ClassifierConfig(),
                seed=0, dataset: str = "", on_validation: bool = False, pairs: PairSet | None = None) -> RunResult:
    """Embed the training graph with one variant and score held-out edges.

    ``on_validation`` scores the validation edges (for model selection)
    instead of the test edges.  Pass ``pairs`` to reuse walks across variants.
    """
    tg = split.train_graph()
    if pairs is None:
        pairs = positive_pairs(tg, method, walk_cfg, seed)
    cfg = variant_config(train_cfg, variant)
    X, trace = train(tg, pairs, cfg, seed)
    pos, neg = ((split.validation_edges, split.negative_validation_edges) if on_validation
                else (split.test_edges, split.negative_test_edges))
    report = evaluate_link_prediction(X, tg, g, pos, neg, clf_cfg, seed,
                                      metadata={"dataset": dataset, "variant": variant, "seed": seed,
                                                "method": method})
    return RunResult(report, X, trace, len(pairs), trace.train_seconds)


# ---------------------------------------------------------------------------
# two-block SBM study
# ---------------------------------------------------------------------------

@dataclass
class SbmStudyConfig:
    n: int = 200
    # p_within + p_between is held fixed so only community strength varies
    total_probability: float = 0.9
    ratios: tuple = (100.0, 30.0, 10.0, 5.0, 3.0, 2.0)
    seeds: tuple = (0, 1, 2)
    variants: tuple = ("I", "II0", "II")
    train: TrainConfig = field(default_factory=lambda: TrainConfig(dim=16, eta=0.01, epochs=10, batch_size=256))
    classifier: ClassifierConfig = field(default_factory=lambda: ClassifierConfig(epochs=30))


def sbm_probabilities(ratio: float, total: float) -> tuple[float, float]:
    """``(p_within, p_between)`` with ``p_within / p_between = ratio`` and sum ``total``."""
    if ratio <= 0 or not 0 < total <= 2:
        raise ValueError("ratio must be positive and total in (0, 2]")
    p_within = total * ratio / (1.0 + ratio)
    p_between = total / (1.0 + ratio)
    if p_within > 1:
        raise ValueError(f"ratio {ratio} with total {total} gives p_within > 1")
    return p_within, p_between


def sbm_study(cfg: SbmStudyConfig = SbmStudyConfig(), progress=None) -> list[dict]:
    """LINE link prediction on two-block SBMs of decreasing community strength."""
    rows = []
    for ratio in cfg.ratios:
        p_in, p_out = sbm_probabilities(ratio, cfg.total_probability)
        for seed in cfg.seeds:
            g = generate_sbm(cfg.n, 2, p_in, p_out, seed)
            split = split_edges(g, seed=seed)
            pairs = pairs_from_edges(split.train_graph())
            for variant in cfg.variants:
                t = time.perf_counter()
                res = run_variant(g, split, "line", variant, cfg.train, clf_cfg=cfg.classifier, seed=seed,
                                  dataset=f"sbm-{ratio:g}", pairs=pairs)
                rows.append({"ratio": ratio, "p_within": p_in, "p_between": p_out, "seed": seed,
                             "variant": variant, "auc_roc": res.report.auc_roc, "mrr": res.report.mrr,
                             "seconds": time.perf_counter() - t})
                if progress:
                    progress(rows[-1])
    return rows


def mean_by(rows, keys=("ratio", "variant"), value="auc_roc") -> dict:
    groups: dict = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r[value])
    return {k: float(np.mean(v)) for k, v in groups.items()}


# ---------------------------------------------------------------------------
# citation benchmarks
# ---------------------------------------------------------------------------

def table_config(method: str) -> TrainConfig:
    """Untuned defaults for the citation benchmarks (tune with ``dimreg sweep``)."""
    if method == "line":
        return TrainConfig(dim=128, eta=0.01, epochs=5, batch_size=1024)
    if method == "node2vec":
        return TrainConfig(dim=128, eta=0.01, epochs=1, batch_size=1024)
    raise ValueError(f"method must be one of {METHODS}")


def benchmark_rows(g: Graph, dataset: str, method: str, variants=("I", "II0", "II"), seed=0,
                   train_cfg: TrainConfig | None = None, walk_cfg: WalkConfig | None = None,
                   clf_cfg: ClassifierConfig = ClassifierConfig()) -> list[dict]:
    """Test-set metrics and training time of each variant on one graph and split."""
    split = split_edges(g, seed=seed)
    train_cfg = train_cfg or table_config(method)
    pairs = positive_pairs(split.train_graph(), method, walk_cfg, seed)
    rows = []
    for variant in variants:
        res = run_variant(g, split, method, variant, train_cfg, walk_cfg, clf_cfg, seed, dataset, pairs=pairs)
        rows.append({"dataset": dataset, "method": method, "variant": variant, "seed": seed,
                     "auc_roc": res.report.auc_roc, "mrr": res.report.mrr,
                     **{f"hits@{k}": v for k, v in res.report.hits_at_k.items()},
                     "train_seconds": res.train_seconds, "pairs": res.pair_count})
    return rows
