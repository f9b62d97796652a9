"""Print a compact power / error-rate table from a long-format results CSV."""

import argparse
import csv
from collections import defaultdict

METHODS = ("optimal", "hommel", "hochberg", "holm", "bonferroni")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv")
    ap.add_argument("--metric", default="pi_K")
    args = ap.parse_args()

    cells = defaultdict(dict)
    with open(args.csv) as fh:
        for row in csv.DictReader(fh):
            if row["metric"] in (args.metric, "max_fwer"):
                key = (row["K"], row["alpha"], row["model"], row["param"])
                cells[key][(row["method"], row["metric"])] = float(row["value"])

    print(f"{'K':>3} {'alpha':>6} {'model':>14} {'param':>14} "
          + " ".join(f"{m:>10}" for m in METHODS) + f" {'maxFWER(opt)':>13}")
    for (K, alpha, model, param), vals in cells.items():
        line = " ".join(f"{vals[(m, args.metric)]:10.3f}" if (m, args.metric) in vals else f"{'':>10}"
                        for m in METHODS)
        fw = vals.get(("optimal", "max_fwer"))
        print(f"{K:>3} {alpha:>6} {model:>14} {param:>14} {line} {'' if fw is None else f'{fw:13.4f}'}")


if __name__ == "__main__":
    main()
