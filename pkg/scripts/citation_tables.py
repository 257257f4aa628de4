"""LINE and node2vec link prediction on Cora, CiteSeer and PubMed.

Datasets are read from $DIMREG_DATA (see dimreg.datasets); missing ones are
reported and skipped.
"""

import argparse
import csv
from pathlib import Path

from dimreg import datasets
from dimreg.experiments import benchmark_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--datasets", nargs="+", default=list(datasets.KNOWN))
    ap.add_argument("--methods", nargs="+", default=["line", "node2vec"])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/tables")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for name in args.datasets:
        try:
            g = datasets.load_dataset(name)
        except datasets.DatasetNotFound as exc:
            print(f"skip: {exc}")
            continue
        for method in args.methods:
            for row in benchmark_rows(g, name, method, seed=args.seed):
                print(f"{name:<9} {method:<8} {row['variant']:>3} auc={row['auc_roc']:.3f} "
                      f"mrr={row['mrr']:.3f} train={row['train_seconds']:.1f}s", flush=True)
                rows.append(row)
    if rows:
        with (out / "link_prediction.csv").open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()
