"""LINE link prediction on two-block SBMs as the community signal weakens.

p_within + p_between is fixed, and the within/between ratio sweeps down.
"""

import argparse
import csv
from pathlib import Path

from dimreg.experiments import SbmStudyConfig, mean_by, sbm_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ratios", type=float, nargs="+", default=list(SbmStudyConfig.ratios))
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--out", default="results/sbm")
    args = ap.parse_args()

    cfg = SbmStudyConfig(ratios=tuple(args.ratios), seeds=tuple(range(args.seeds)))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = sbm_study(cfg, progress=lambda r: print(f"ratio={r['ratio']:g} seed={r['seed']} "
                                                   f"{r['variant']:>3} auc={r['auc_roc']:.3f}", flush=True))
    with (out / "sbm_auc.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    means = mean_by(rows)
    print("\nratio   " + "  ".join(f"{v:>6}" for v in cfg.variants))
    for r in cfg.ratios:
        print(f"{r:<7g} " + "  ".join(f"{means[(r, v)]:6.3f}" for v in cfg.variants))


if __name__ == "__main__":
    main()
