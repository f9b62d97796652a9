"""Regenerate every experiment grid as CSV under one output directory.

    python scripts/reproduce_tables.py --out results/ --cache-dir results/fits
    python scripts/reproduce_tables.py --only scaling camerer --k 3 --k 6
"""

import argparse
import logging
import time
from pathlib import Path

from optfwer.harness import DEFAULT_SEED, TABLE_IDS, reproduce_table


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--only", nargs="+", choices=TABLE_IDS, default=list(TABLE_IDS))
    ap.add_argument("--k", type=int, action="append", help="restrict K grids (repeatable)")
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ap.add_argument("--n-eval", type=int, default=50_000)
    ap.add_argument("--n-opt", type=int, default=100_000)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--cache-dir", type=Path, default=None)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    args.out.mkdir(parents=True, exist_ok=True)
    for table in args.only:
        t0 = time.perf_counter()
        rows = reproduce_table(table, args.out / f"{table}.csv", seed=args.seed, ks=args.k,
                               n_eval=args.n_eval, n_opt=args.n_opt, threads=args.threads,
                               cache_dir=args.cache_dir)
        print(f"{table:>20}: {len(rows):5d} rows in {time.perf_counter() - t0:6.1f}s")


if __name__ == "__main__":
    main()
