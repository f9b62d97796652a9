"""Fit a policy for the bundled application data sets and print each decision."""

import argparse

import numpy as np

from optfwer import OptimizerConfig, decide, parse_model
from optfwer.harness import DEFAULT_SEED, get_fit, load_fixture


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("datasets", nargs="*", default=["camerer", "osc", "sprint"])
    ap.add_argument("--model", help="override the data set's alternative model")
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ap.add_argument("--cache-dir", default=None)
    args = ap.parse_args()

    for name in args.datasets:
        data = load_fixture(name)
        model = parse_model(args.model or data["model"])
        p = np.array([s["p"] for s in data["studies"]])
        cfg = OptimizerConfig(alpha=data["alpha"], seed=args.seed)
        fitted = get_fit(model, len(p), cfg, cache_dir=args.cache_dir)
        result, _, rejected = decide(model, fitted.mu_hat, p)
        print(f"== {name}: model {model}, alpha {data['alpha']}, l* = {result.l_star}")
        for s, r in sorted(zip(data["studies"], rejected), key=lambda x: x[0]["p"]):
            print(f"   {s['p']:<8g} {'REJECT' if r else 'retain':<7} {s['study']}")


if __name__ == "__main__":
    main()
