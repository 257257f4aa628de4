"""Training wall time of variant I (k=1 negatives) against variant II.

Runs on PubMed by default; ``--synthetic`` uses an Erdos-Renyi graph with
PubMed's node and edge counts instead.
"""

import argparse
from dataclasses import replace

from dimreg import datasets
from dimreg.experiments import positive_pairs, table_config, variant_config
from dimreg.graph import generate_erdos_renyi, split_edges
from dimreg.trainer import train


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dataset", default="pubmed")
    ap.add_argument("--synthetic", action="store_true")
    ap.add_argument("--optimizer", choices=["adam", "sgd"], default="adam")
    ap.add_argument("--epochs", type=int, default=5)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    if args.synthetic:
        n, m = 19717, 44324
        g = generate_erdos_renyi(n, 2 * m / (n * (n - 1)), 0)
    else:
        g = datasets.load_dataset(args.dataset)
    tg = split_edges(g, seed=0).train_graph()
    pairs = positive_pairs(tg, "line")
    base = replace(table_config("line"), epochs=args.epochs, k=1, optimizer=args.optimizer,
                   track_constriction=False)
    for variant in ("I", "II") * args.repeats:
        _, trace = train(tg, pairs, variant_config(base, variant), 0)
        print(f"{variant:>2} {trace.train_seconds:.3f}s", flush=True)


if __name__ == "__main__":
    main()
