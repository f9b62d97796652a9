"""Experiment runner: fit, evaluate against the baselines, write long-format CSV."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .baselines import METHODS
from .densities import AlternativeModel, parse_model
from .estimator import make_batch
from .optimizer import FitResult, OptimizerConfig, contraction_diagnostic, fit, load_fit, save_fit
from .policy import PolicyResult, decide, optimal_l_star
from .rng import derive_seed

log = logging.getLogger(__name__)

DEFAULT_SEED = 20240601
ALL_METHODS = ("optimal", "bonferroni", "holm", "hochberg", "hommel")
ALL_METRICS = ("pi_K", "pi_any", "pi_l", "fwer_all")
CSV_COLUMNS = ("table", "K", "alpha", "model", "param", "method", "metric", "value", "se", "seed")
TABLE_IDS = ("scaling", "alpha_sensitivity", "n_sensitivity", "camerer", "camerer_sensitivity",
             "sprint", "osc", "power_curves", "convergence")
SCALING_KS = (3, 4, 5, 6, 8, 10, 12)
# signal grids for the four alternative families; the mixture grid is our choice
POWER_CURVE_MODELS = (
    [f"trunc:{t}" for t in (-1.0, -1.5, -2.0, -2.5, -3.0, -3.5, -4.0)]
    + [f"mixture:{t}" for t in (1.0, 1.5, 2.0, 2.5, 3.0)]
    + [f"t:{d}" for d in range(2, 21, 2)]
    + [f"beta:{t}" for t in (0.8, 0.6, 0.4, 0.2)]
)


@dataclass(frozen=True)
class ExperimentSpec:
    K: int
    model: AlternativeModel
    alpha: float = 0.05
    n_eval: int = 50_000
    n_opt: int = 100_000
    seed: int = DEFAULT_SEED
    methods: tuple[str, ...] = ALL_METHODS
    metrics: tuple[str, ...] = ("pi_K", "pi_any", "fwer_all")
    delta: float = 1e-4
    epsilon: float = 1e-2
    t_max: int = 20
    u_max: float = 50.0

    def __post_init__(self):
        if self.K < 2:
            raise ValueError(f"need K >= 2, got {self.K}")
        if self.n_eval < 1000 or self.n_opt < 1000:
            raise ValueError("n_eval and n_opt must be at least 1000")
        bad = set(self.methods) - set(ALL_METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        bad = set(self.metrics) - set(ALL_METRICS)
        if bad:
            raise ValueError(f"unknown metrics {sorted(bad)}")
        self.optimizer_config()  # validates alpha and tolerances

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(alpha=self.alpha, delta=self.delta, epsilon=self.epsilon,
                               t_max=self.t_max, u_max=self.u_max, n_opt=self.n_opt, seed=self.seed)

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentSpec":
        doc = dict(doc)
        if "model" not in doc or "K" not in doc:
            raise ValueError("experiment spec needs at least 'K' and 'model'")
        doc["model"] = parse_model(str(doc["model"]))
        for key in ("methods", "metrics"):
            if key in doc:
                doc[key] = tuple(doc[key])
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown experiment fields {sorted(unknown)}")
        return cls(**doc)


@dataclass
class MethodResult:
    pi_K: float = math.nan
    pi_K_se: float = math.nan
    pi_any: float = math.nan
    pi_any_se: float = math.nan
    fwer: list[float] = field(default_factory=list)
    fwer_se: list[float] = field(default_factory=list)
    pi_l: dict[int, tuple[float, float]] = field(default_factory=dict)

    @property
    def max_fwer(self) -> float:
        return max(self.fwer) if self.fwer else math.nan

    @property
    def max_fwer_se(self) -> float:
        if not self.fwer:
            return math.nan
        return self.fwer_se[int(np.argmax(self.fwer))]


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    methods: dict[str, MethodResult]
    fit: FitResult | None = None
    fit_seconds: float = math.nan


def _prop(x: np.ndarray) -> tuple[float, float]:
    m = float(np.mean(x))
    return m, math.sqrt(m * (1.0 - m) / x.size)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    return float(np.mean(x)), float(np.std(x) / math.sqrt(x.size))


def get_fit(model: AlternativeModel, K: int, cfg: OptimizerConfig, cache_dir=None,
            threads: int | None = None) -> FitResult:
    """Fit, reusing a cached result keyed by every input that affects it."""
    if cache_dir is None:
        return fit(model, K, cfg, threads=threads)
    key = json.dumps({"model": str(model), "K": K, "config": asdict(cfg)}, sort_keys=True)
    path = Path(cache_dir) / f"fit-{hashlib.sha1(key.encode()).hexdigest()[:16]}.json"
    if path.exists():
        return load_fit(path)
    result = fit(model, K, cfg, threads=threads)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_fit(result, path)
    return result


def evaluate(spec: ExperimentSpec, mu=None, threads: int | None = None) -> dict[str, MethodResult]:
    """Score every requested method on shared evaluation batches."""
    K = spec.K
    methods = [m for m in spec.methods if m != "optimal" or mu is not None]
    out = {m: MethodResult() for m in methods}
    gammas = [K]
    if "fwer_all" in spec.metrics:
        gammas = list(range(K)) + gammas
    if "pi_l" in spec.metrics:
        gammas = sorted(set(gammas) | set(range(1, K + 1)))
    fw: dict[str, list] = {m: [None] * K for m in methods}
    mu_arr = None if mu is None else np.asarray(mu.mu if hasattr(mu, "mu") else mu, dtype=float)
    for gamma in gammas:
        batch = make_batch(spec.model, K, gamma, spec.n_eval, derive_seed(spec.seed, "eval", gamma),
                           threads=threads)
        for m in methods:
            if m == "optimal":
                ls = optimal_l_star(batch.a[:, None] - np.einsum("l,nlk->nk", mu_arr, batch.b))
                any_null = batch.first_null <= ls
                hits = np.take_along_axis(batch.alt_cum, ls[:, None], axis=1)[:, 0]
            else:
                rej = METHODS[m](batch.raw_p, spec.alpha)
                any_null = rej[:, gamma:].any(axis=1)
                hits = rej[:, :gamma].sum(axis=1)
            if gamma < K:
                fw[m][gamma] = _prop(any_null)
            if gamma >= 1:
                out[m].pi_l[gamma] = _mean_se(hits / gamma)
            if gamma == K:
                out[m].pi_K, out[m].pi_K_se = _mean_se(hits / K)
                out[m].pi_any, out[m].pi_any_se = _prop(hits >= 1)
        del batch
    for m in methods:
        if "fwer_all" in spec.metrics:
            out[m].fwer = [v for v, _ in fw[m]]
            out[m].fwer_se = [s for _, s in fw[m]]
    return out


def run_experiment(spec: ExperimentSpec, threads: int | None = None, fit_result: FitResult | None = None,
                   cache_dir=None) -> ExperimentResult:
    fitted, seconds = fit_result, math.nan
    if "optimal" in spec.methods and fitted is None:
        t0 = time.perf_counter()
        fitted = get_fit(spec.model, spec.K, spec.optimizer_config(), cache_dir, threads)
        seconds = time.perf_counter() - t0
    mu = fitted.mu_hat if fitted is not None and "optimal" in spec.methods else None
    methods = evaluate(spec, mu, threads)
    return ExperimentResult(spec=spec, methods=methods, fit=fitted, fit_seconds=seconds)


# -- applications ---------------------------------------------------------------


def load_fixture(name: str) -> dict:
    text = resources.files("optfwer").joinpath("data", f"{name}.json").read_text()
    return json.loads(text)


@dataclass
class GroupDecision:
    name: str
    alpha: float
    policy: PolicyResult
    rejected: np.ndarray  # per input index within the group
    fit: FitResult


def fit_and_decide(model: AlternativeModel, p, alpha: float, cfg: OptimizerConfig | None = None,
                   cache_dir=None, threads: int | None = None):
    cfg = replace(cfg or OptimizerConfig(), alpha=alpha)
    fitted = get_fit(model, len(p), cfg, cache_dir, threads)
    result, _, rejected = decide(model, fitted.mu_hat, p)
    return result, rejected, fitted


def hierarchical_apply(groups, alpha: float, cfg: OptimizerConfig | None = None, names=None,
                       cache_dir=None, threads: int | None = None) -> list[GroupDecision]:
    """Fit and apply the policy separately in each group at level alpha / G."""
    groups = list(groups)
    if not groups:
        raise ValueError("need at least one group")
    level = min(alpha, 1.0) / len(groups)
    names = names or [str(i) for i in range(len(groups))]
    out = []
    for name, (p, model) in zip(names, groups):
        if len(p) < 2:
            raise ValueError(f"group {name} has fewer than two hypotheses")
        result, rejected, fitted = fit_and_decide(model, p, level, cfg, cache_dir, threads)
        out.append(GroupDecision(name=name, alpha=level, policy=result, rejected=rejected, fit=fitted))
    return out


# -- tables -----------------------------------------------------------------------


def _row(table, K, alpha, model, param, method, metric, value, se=None, seed=None):
    return {"table": table, "K": K, "alpha": alpha, "model": str(model), "param": param,
            "method": method, "metric": metric, "value": value,
            "se": "" if se is None or (isinstance(se, float) and math.isnan(se)) else se,
            "seed": "" if seed is None else seed}


def experiment_rows(table: str, res: ExperimentResult, param: str = "") -> list[dict]:
    s = res.spec
    rows = []
    for name, r in res.methods.items():
        common = (table, s.K, s.alpha, s.model, param, name)
        if "pi_K" in s.metrics:
            rows.append(_row(*common, "pi_K", r.pi_K, r.pi_K_se, s.seed))
        if "pi_any" in s.metrics:
            rows.append(_row(*common, "pi_any", r.pi_any, r.pi_any_se, s.seed))
        for l, (v, se) in sorted(r.pi_l.items()) if "pi_l" in s.metrics else []:
            rows.append(_row(table, s.K, s.alpha, s.model, f"{param};l={l}".lstrip(";"), name,
                             "pi_l", v, se, s.seed))
        if r.fwer:
            for g, (v, se) in enumerate(zip(r.fwer, r.fwer_se)):
                rows.append(_row(table, s.K, s.alpha, s.model, f"{param};gamma={g}".lstrip(";"), name,
                                 "fwer", v, se, s.seed))
            rows.append(_row(*common, "max_fwer", r.max_fwer, r.max_fwer_se, s.seed))
    if res.fit is not None and "optimal" in res.methods:
        f = res.fit
        common = (table, s.K, s.alpha, s.model, param, "optimal")
        rows.append(_row(*common, "iterations", f.iterations, None, s.seed))
        rows.append(_row(*common, "converged", int(f.converged), None, s.seed))
        if not math.isnan(res.fit_seconds):
            rows.append(_row(*common, "fit_seconds", round(res.fit_seconds, 2), None, s.seed))
        for g, m in enumerate(f.mu_hat.mu):
            rows.append(_row(table, s.K, s.alpha, s.model, f"{param};gamma={g}".lstrip(";"), "optimal",
                             "mu", m, None, s.seed))
    return rows


def _application_rows(table, fixture, seed, n_opt, cache_dir, threads, model=None):
    alpha = fixture["alpha"]
    model = model or parse_model(fixture["model"])
    names = [s["study"] for s in fixture["studies"]]
    p = np.array([s["p"] for s in fixture["studies"]])
    K = len(p)
    cfg = OptimizerConfig(alpha=alpha, n_opt=n_opt, seed=seed)
    result, rejected, fitted = fit_and_decide(model, p, alpha, cfg, cache_dir, threads)
    decisions = {"optimal": rejected}
    for m in ("bonferroni", "holm", "hochberg", "hommel"):
        decisions[m] = np.array(METHODS[m](p, alpha).rejected)
    rows = []
    for i in np.argsort(p, kind="stable"):
        for m, rej in decisions.items():
            rows.append(_row(table, K, alpha, model, f"{names[i]} (p={p[i]:g})", m, "reject",
                             int(rej[i]), None, seed))
    for m, rej in decisions.items():
        rows.append(_row(table, K, alpha, model, "", m, "n_reject", int(rej.sum()), None, seed))
    rows.append(_row(table, K, alpha, model, "", "optimal", "l_star", result.l_star, None, seed))
    rows.append(_row(table, K, alpha, model, "", "optimal", "converged", int(fitted.converged), None, seed))
    return rows


def reproduce_table(table_id: str, out_path=None, seed: int = DEFAULT_SEED, ks=None,
                    n_eval: int = 50_000, n_opt: int = 100_000, threads: int | None = None,
                    cache_dir=None, models=None) -> list[dict]:
    """Run one of the named experiment grids and optionally write its CSV."""
    if table_id not in TABLE_IDS:
        raise ValueError(f"unknown table {table_id!r}; expected one of {TABLE_IDS}")
    rows: list[dict] = []
    trunc2 = parse_model("trunc:-2.0")

    def run(table, K, model, param="", **kw):
        spec = ExperimentSpec(K=K, model=model, n_eval=n_eval, n_opt=kw.pop("n_opt", n_opt), seed=seed, **kw)
        log.info("%s: K=%d model=%s %s", table, K, model, param)
        res = run_experiment(spec, threads=threads, cache_dir=cache_dir)
        rows.extend(experiment_rows(table, res, param))
        return res

    if table_id == "scaling":
        for K in ks or SCALING_KS:
            run("scaling", K, trunc2)
    elif table_id == "alpha_sensitivity":
        for K in ks or (6,):
            for a in (0.01, 0.05, 0.10):
                run("alpha_sensitivity", K, trunc2, f"alpha={a}", alpha=a)
    elif table_id == "n_sensitivity":
        for K in ks or (6,):
            for n in (50_000, 100_000, 200_000):
                run("n_sensitivity", K, trunc2, f"n_opt={n}", n_opt=n, methods=("optimal",))
    elif table_id in ("camerer", "osc"):
        rows.extend(_application_rows(table_id, load_fixture(table_id), seed, n_opt, cache_dir, threads))
    elif table_id == "camerer_sensitivity":
        fixture = load_fixture("camerer")
        grid = models or ([f"beta:{t / 10:g}" for t in range(2, 9)]
                          + [f"trunc:{t}" for t in (-1.0, -1.5, -2.0, -2.5)])
        for text in grid:
            app = _application_rows("camerer_sensitivity", fixture, seed, n_opt, cache_dir, threads,
                                    model=parse_model(text))
            rows.extend(r for r in app if r["metric"] in ("n_reject", "l_star"))
    elif table_id == "sprint":
        fixture = load_fixture("sprint")
        rows.extend(_application_rows("sprint", fixture, seed, n_opt, cache_dir, threads))
        by_name = {s["study"]: s["p"] for s in fixture["studies"]}
        groups = [([by_name[s] for s in g["studies"]], parse_model(g["model"])) for g in fixture["groups"]]
        cfg = OptimizerConfig(n_opt=n_opt, seed=seed)
        decisions = hierarchical_apply(groups, fixture["alpha"], cfg, [g["name"] for g in fixture["groups"]],
                                       cache_dir, threads)
        for g, d in zip(fixture["groups"], decisions):
            rows.append(_row("sprint", len(g["studies"]), d.alpha, parse_model(g["model"]), f"group={d.name}",
                             "optimal_hierarchical", "l_star", d.policy.l_star, None, seed))
            for name, rej in zip(g["studies"], d.rejected):
                rows.append(_row("sprint", len(g["studies"]), d.alpha, parse_model(g["model"]), f"group={d.name};{name}",
                                 "optimal_hierarchical", "reject", int(rej), None, seed))
    elif table_id == "power_curves":
        for K in ks or (3, 6):
            for text in models or POWER_CURVE_MODELS:
                run("power_curves", K, parse_model(text), text, metrics=("pi_K", "pi_any"))
    elif table_id == "convergence":
        for K in ks or SCALING_KS:
            res = run("convergence", K, trunc2, metrics=("pi_K",), methods=("optimal",))
            f = res.fit
            for t, step in enumerate(f.trajectory, start=1):
                rows.append(_row("convergence", K, 0.05, trunc2, f"t={t}", "optimal", "step_norm", step, None, seed))
            if len(f.trajectory) >= 2:
                rep = contraction_diagnostic(f.trajectory, K, f.config.delta)
                for t, r in enumerate(rep.ratios, start=1):
                    rows.append(_row("convergence", K, 0.05, trunc2, f"t={t}", "optimal", "ratio", r, None, seed))

    if out_path is not None:
        write_csv(rows, out_path)
    return rows


def write_csv(rows, out_path) -> None:
    with open(out_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
