"""``dimreg`` command line: train, eval, sweep, validate, generate, split."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

from . import checks
from .config import ConfigError, RunConfig, apply_overrides, parse_value
from .graph import generate_erdos_renyi, generate_sbm, split_edges, write_edge_list
from .runs import SweepGrid, eval_run, load_graph, run_sweep, train_run

log = logging.getLogger("dimreg")


def _config(args) -> RunConfig:
    overrides = list(args.override or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    return RunConfig.from_dict(apply_overrides(data, overrides))


def cmd_train(args) -> int:
    cfg = _config(args)
    run = train_run(cfg, args.out)
    print(run)
    return 0


def cmd_eval(args) -> int:
    emb = Path(args.embeddings)
    cfg_path = Path(args.config) if args.config else emb.parent / "config.json"
    if cfg_path.exists():
        data = json.loads(cfg_path.read_text())
    else:
        data = {}
    overrides = list(args.override or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    cfg = RunConfig.from_dict(apply_overrides(data, overrides))
    split = args.split or str(emb.parent / "split")
    report = eval_run(emb, split, cfg.classifier, cfg.seed,
                      metadata={"dataset": cfg.dataset, "variant": cfg.variant, "seed": cfg.seed})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.write_json(out / "metrics.json")
    report.append_csv(out / "results.csv")
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


def cmd_sweep(args) -> int:
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    grid = SweepGrid.from_dict(data.pop("grid", None))
    overrides = list(args.override or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    base = apply_overrides(data, overrides)
    RunConfig.from_dict(base)  # validate before any work
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    best = run_sweep(base, grid, out / "sweep.csv", workers=max(1, args.threads))
    (out / "best.json").write_text(json.dumps(best, indent=2, sort_keys=True) + "\n")
    print(json.dumps(best, sort_keys=True))
    return 0


def cmd_validate(args) -> int:
    names = list(checks.CHECKS) if "all" in args.selectors else args.selectors
    params = {}
    for item in args.override or []:
        key, _, value = item.partition("=")
        params[key] = parse_value(value)
    if args.seed is not None:
        params["seed"] = args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for name in names:
        fn = checks.CHECKS[name]
        accepted = fn.__code__.co_varnames[:fn.__code__.co_argcount]
        t = time.perf_counter()
        res = fn(**{k: v for k, v in params.items() if k in accepted})
        summary[name] = {"passed": res.passed, "seconds": round(time.perf_counter() - t, 3), **res.summary}
        if res.rows:
            with (out / f"{name}.csv").open("w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=list(res.rows[0]))
                w.writeheader()
                w.writerows(res.rows)
        print(f"{'PASS' if res.passed else 'FAIL'} {name}")
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=str) + "\n")
    return 0 if all(s["passed"] for s in summary.values()) else 1


def cmd_generate(args) -> int:
    if args.model == "sbm":
        g = generate_sbm(args.n, args.blocks, args.p_within, args.p_between, args.seed or 0)
        header = f"sbm n={args.n} blocks={args.blocks} p_within={args.p_within} p_between={args.p_between}"
    else:
        g = generate_erdos_renyi(args.n, args.p, args.seed or 0)
        header = f"erdos-renyi n={args.n} p={args.p}"
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_edge_list(args.out, g.edges, header=f"{header} seed={args.seed or 0}")
    print(f"{args.out}: n={g.n} m={g.m}")
    return 0


def cmd_split(args) -> int:
    g = load_graph(args.graph)
    s = split_edges(g, tuple(args.ratios), args.seed or 0)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    s.save(args.out)
    print(f"{args.out}: train={len(s.train_edges)} valid={len(s.validation_edges)} test={len(s.test_edges)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", default="runs", help="output directory")
    common.add_argument("--threads", type=int, default=1, help="parallel worker processes (sweep)")
    common.add_argument("--override", action="append", metavar="KEY=VALUE",
                        help="set a config value; dotted keys reach sections, e.g. train.eta=0.1")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="dimreg", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="embed a graph and write a run directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="link-prediction metrics for an embedding file")
    p.add_argument("embeddings")
    p.add_argument("--split", help="split prefix (default: <run dir>/split)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", parents=[common], help="staged grid search on validation AUC-ROC")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", parents=[common], help="numerical checks of the theory")
    p.add_argument("selectors", nargs="+", choices=[*checks.CHECKS, "all"])
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate", parents=[common], help="write a synthetic graph as an edge list")
    p.add_argument("model", choices=["sbm", "er"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--p-within", type=float, default=0.1)
    p.add_argument("--p-between", type=float, default=0.01)
    p.add_argument("--p", type=float, default=0.1)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("split", parents=[common], help="write train/valid/test edge files")
    p.add_argument("graph")
    p.add_argument("--ratios", type=float, nargs=3, default=[0.7, 0.1, 0.2])
    p.set_defaults(func=cmd_split)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
