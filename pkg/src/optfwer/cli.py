"""Command-line front end: fit, apply, experiment, table, hierarchical."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .densities import ParameterError, parse_model
from .harness import (
    DEFAULT_SEED,
    TABLE_IDS,
    ExperimentSpec,
    experiment_rows,
    hierarchical_apply,
    reproduce_table,
    run_experiment,
    write_csv,
)
from .optimizer import FitResult, OptimizerConfig, fit, load_fit, save_fit
from .policy import decide

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_USAGE = 64
EXIT_DATA = 65


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _model(text: str):
    try:
        return parse_model(text)
    except ParameterError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _p_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse p-values from {text!r}") from None


def _add_fit_flags(p: argparse.ArgumentParser, need_model: bool):
    p.add_argument("--k", type=int, help="number of hypotheses")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--model", type=_model, required=need_model, help="e.g. trunc:-2.0, mixture:2, t:4, beta:0.5")
    p.add_argument("--n-opt", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--delta", type=float, default=1e-4)
    p.add_argument("--epsilon", type=float, default=1e-2)
    p.add_argument("--t-max", type=int, default=20)
    p.add_argument("--u-max", type=float, default=50.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="optfwer", description=__doc__)
    parser.add_argument("--threads", type=int, default=None,
                        help="worker cap for batch generation (default: $OPTFWER_THREADS or 1)")
    parser.add_argument("--cache-dir", default=None, help="reuse fitted multipliers across runs")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit the dual multipliers and write them as JSON")
    _add_fit_flags(p, need_model=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("apply", help="apply a fitted (or freshly fitted) policy to p-values")
    p.add_argument("--mu", help="JSON written by `fit`")
    _add_fit_flags(p, need_model=False)
    p.add_argument("--p", dest="p_values", type=_p_list, required=True, help="comma-separated p-values")

    p = sub.add_parser("experiment", help="run one experiment from a JSON spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("table", help="reproduce a named experiment grid as CSV")
    p.add_argument("--id", required=True, choices=TABLE_IDS)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, action="append", help="restrict the K grid (repeatable)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--n-eval", type=int, default=50_000)
    p.add_argument("--n-opt", type=int, default=100_000)

    p = sub.add_parser("hierarchical", help="apply the policy within groups at level alpha / G")
    p.add_argument("--groups", required=True, help="JSON: {alpha, groups: [{name, model, p}]}")
    p.add_argument("--alpha", type=float, default=None, help="overrides the file's alpha")
    p.add_argument("--n-opt", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    return parser


def _config(args) -> OptimizerConfig:
    try:
        return OptimizerConfig(alpha=args.alpha, delta=args.delta, epsilon=args.epsilon, t_max=args.t_max,
                               u_max=args.u_max, n_opt=args.n_opt, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed JSON: {exc}") from None
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from None


def cmd_fit(args) -> int:
    if args.k is None or args.k < 2:
        raise UsageError("--k must be given and at least 2")
    result = fit(args.model, args.k, _config(args), threads=args.threads)
    save_fit(result, args.out)
    mu = ", ".join(f"{m:.4f}" for m in result.mu_hat.mu)
    state = "converged" if result.converged else "did NOT converge"
    print(f"K={args.k} model={args.model} alpha={args.alpha}: {state} after {result.iterations} iterations")
    print(f"mu = [{mu}]")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _fitted_for_apply(args, K: int) -> FitResult:
    if args.mu:
        try:
            fitted = load_fit(args.mu)
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{args.mu}: not a fit document: {exc}") from None
        if fitted.K != K:
            raise UsageError(f"{args.mu} was fitted for K={fitted.K} but {K} p-values were given")
        return fitted
    if args.model is None:
        raise UsageError("give either --mu or --model (with --alpha/--seed)")
    if args.k is not None and args.k != K:
        raise UsageError(f"--k {args.k} does not match the {K} p-values given")
    if K < 2:
        raise UsageError("need at least two p-values")
    return fit(args.model, K, _config(args), threads=args.threads)


def cmd_apply(args) -> int:
    p = np.array(args.p_values)
    if np.any(~(p > 0) | ~(p <= 1)):
        raise UsageError("p-values must lie in (0, 1]")
    fitted = _fitted_for_apply(args, len(p))
    result, _, rejected = decide(fitted.model, fitted.mu_hat, p)
    for i, (pv, r) in enumerate(zip(p, rejected), start=1):
        print(f"H{i}\tp={pv:g}\t{'REJECT' if r else 'RETAIN'}")
    print(f"l* = {result.l_star}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    doc = _read_json(args.spec)
    try:
        spec = ExperimentSpec.from_json(doc)
    except (TypeError, ValueError, ParameterError) as exc:
        raise DataError(f"{args.spec}: invalid experiment spec: {exc}") from None
    res = run_experiment(spec, threads=args.threads, cache_dir=args.cache_dir)
    write_csv(experiment_rows("experiment", res), args.out)
    for name, r in res.methods.items():
        fw = f"  max FWER={r.max_fwer:.4f}" if r.fwer else ""
        print(f"{name:>10}: pi_K={r.pi_K:.4f} (se {r.pi_K_se:.4f})  pi_any={r.pi_any:.4f}{fw}")
    if res.fit is not None and not res.fit.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_table(args) -> int:
    rows = reproduce_table(args.id, args.out, seed=args.seed, ks=args.k, n_eval=args.n_eval,
                           n_opt=args.n_opt, threads=args.threads, cache_dir=args.cache_dir)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_hierarchical(args) -> int:
    doc = _read_json(args.groups)
    try:
        alpha = float(args.alpha if args.alpha is not None else doc.get("alpha", 0.05))
        names = [str(g.get("name", i)) for i, g in enumerate(doc["groups"])]
        groups = [([float(x) for x in g["p"]], parse_model(g["model"])) for g in doc["groups"]]
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise DataError(f"{args.groups}: invalid groups document: {exc}") from None
    cfg = OptimizerConfig(n_opt=args.n_opt, seed=args.seed)
    for d, (p, _) in zip(hierarchical_apply(groups, alpha, cfg, names, args.cache_dir, args.threads), groups):
        print(f"group {d.name} (alpha={d.alpha:g}): l* = {d.policy.l_star}")
        for pv, r in zip(p, d.rejected):
            print(f"  p={pv:g}\t{'REJECT' if r else 'RETAIN'}")
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "apply": cmd_apply,
    "experiment": cmd_experiment,
    "table": cmd_table,
    "hierarchical": cmd_hierarchical,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"optfwer {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"optfwer {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
