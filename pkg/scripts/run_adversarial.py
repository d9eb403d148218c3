"""Worst-of-chi mean regret on the adversarial 1-D process, EW (practical) against OGD."""

import argparse
import os
import time
import warnings

from ewlogreg.harness import worst_of_chi, write_table_csv
from ewlogreg.svg import line_plot


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", default="75,150,300")
    ap.add_argument("--seeds", type=int, default=70)
    ap.add_argument("--predictors", default="ew-practical,ogd")
    ap.add_argument("--out", default="runs/adversarial")
    args = ap.parse_args()
    warnings.simplefilter("ignore", RuntimeWarning)
    os.makedirs(args.out, exist_ok=True)
    rows, t0 = [], time.time()
    for n in [int(v) for v in args.n.split(",")]:
        for pred in args.predictors.split(","):
            worst, per = worst_of_chi(n, range(args.seeds), pred)
            row = {"n": n, "predictor": pred, "worst": worst,
                   "mean_chi+1": per[1][0], "se_chi+1": per[1][1],
                   "mean_chi-1": per[-1][0], "se_chi-1": per[-1][1]}
            rows.append(row)
            print(f"n={n} {pred:13s} worst={worst:.4f} chi+1={per[1][0]:.4f}+-{per[1][1]:.4f} "
                  f"chi-1={per[-1][0]:.4f}+-{per[-1][1]:.4f} ({time.time() - t0:.0f}s)", flush=True)
    cols = list(rows[0])
    write_table_csv(rows, os.path.join(args.out, "worst_of_chi.csv"), cols)
    series = {}
    for r in rows:
        xs, ys = series.setdefault(r["predictor"], ([], []))
        xs.append(r["n"])
        ys.append(r["worst"])
    with open(os.path.join(args.out, "worst_of_chi.svg"), "w", encoding="utf-8") as fh:
        fh.write(line_plot(series, "worst-of-chi mean regret", "n", "regret", logx=True))


if __name__ == "__main__":
    main()
