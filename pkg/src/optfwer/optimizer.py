"""Coordinate descent over the dual multipliers with a bisection inner solver."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .densities import AlternativeModel, parse_model
from .estimator import LabeledSampleBatch, make_batch
from .policy import DualVector, optimal_l_star
from .rng import derive_seed

log = logging.getLogger(__name__)

MAX_DOUBLINGS = 10


class BracketError(RuntimeError):
    """The error rate stays above alpha even at the largest admissible multiplier."""


@dataclass(frozen=True)
class OptimizerConfig:
    alpha: float = 0.05
    delta: float = 1e-4
    epsilon: float = 1e-2
    t_max: int = 20
    u_max: float = 50.0
    n_opt: int = 100_000
    seed: int = 20240601

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 < self.delta <= self.epsilon:
            raise ValueError("need 0 < delta <= epsilon")
        if self.t_max < 1 or self.n_opt < 1 or not self.u_max > 0:
            raise ValueError("t_max, n_opt and u_max must be positive")


@dataclass
class FitResult:
    model: AlternativeModel
    K: int
    config: OptimizerConfig
    mu_hat: DualVector
    iterations: int
    trajectory: list[float]
    coordinate_status: list[str]
    converged: bool
    history: list[list[float]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "alpha": self.config.alpha,
            "model": str(self.model),
            "mu": list(self.mu_hat.mu),
            "seed": self.config.seed,
            "config": asdict(self.config),
            "converged": self.converged,
            "iterations": self.iterations,
            "trajectory": self.trajectory,
            "coordinate_status": self.coordinate_status,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "FitResult":
        cfg = OptimizerConfig(**doc["config"])
        mu = DualVector(tuple(doc["mu"]))
        K = int(doc["K"])
        if mu.K != K:
            raise ValueError(f"document has K={K} but {mu.K} multipliers")
        traj = [float(x) for x in doc.get("trajectory", [])]
        return cls(model=parse_model(doc["model"]), K=K, config=cfg, mu_hat=mu,
                   iterations=int(doc.get("iterations", len(traj))), trajectory=traj,
                   coordinate_status=list(doc.get("coordinate_status", [])),
                   converged=bool(doc["converged"]))


def save_fit(result: FitResult, path) -> None:
    with open(path, "w") as fh:
        json.dump(result.to_json(), fh, indent=2)


def load_fit(path) -> FitResult:
    with open(path) as fh:
        return FitResult.from_json(json.load(fh))


def bisect_root(F: Callable[[float], float], alpha: float, delta: float, u_max: float,
                trace: list | None = None) -> float:
    """Smallest-bracket search for the crossing of a non-increasing F through alpha.

    Returns 0 when F(0) <= alpha. Otherwise keeps F(lo) > alpha >= F(hi),
    doubling ``hi`` up to ``MAX_DOUBLINGS`` times, and returns the bracket
    midpoint once its width is at most ``delta``.
    """
    f0 = F(0.0)
    if f0 <= alpha:
        return 0.0
    lo, hi = 0.0, float(u_max)
    f_hi = F(hi)
    doublings = 0
    while f_hi > alpha:
        if doublings == MAX_DOUBLINGS:
            raise BracketError(
                f"F stays at {f_hi:.4g} > alpha={alpha} up to mu={hi:g}; "
                "increase u_max or check the model")
        lo, hi = hi, 2.0 * hi
        f_hi = F(hi)
        doublings += 1
    f_lo = f0 if lo == 0.0 else F(lo)
    if trace is not None:
        trace.append((lo, hi, f_lo, f_hi))
    while hi - lo > delta:
        mid = 0.5 * (lo + hi)
        f_mid = F(mid)
        if f_mid > alpha:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
        if trace is not None:
            trace.append((lo, hi, f_lo, f_hi))
    return 0.5 * (lo + hi)


def coordinate_target(gamma: int, mu, batch: LabeledSampleBatch) -> Callable[[float], float]:
    """Estimated error rate on ``batch`` as a function of mu[gamma] alone."""
    mu = np.array(mu.mu if isinstance(mu, DualVector) else mu, dtype=float)
    if batch.gamma != gamma:
        raise ValueError(f"batch was drawn under gamma={batch.gamma}, not {gamma}")
    others = mu.copy()
    others[gamma] = 0.0
    base = batch.a[:, None] - np.einsum("l,nlk->nk", others, batch.b)
    row = batch.b[:, gamma, :]
    first_null = batch.first_null

    def F(x: float) -> float:
        return float(np.mean(first_null <= optimal_l_star(base - x * row)))

    return F


def bisect_coordinate(gamma: int, mu, batch_gamma: LabeledSampleBatch, cfg: OptimizerConfig,
                      trace: list | None = None) -> float:
    F = coordinate_target(gamma, mu, batch_gamma)
    return bisect_root(F, cfg.alpha, cfg.delta, cfg.u_max, trace=trace)


def optimisation_batches(model: AlternativeModel, K: int, cfg: OptimizerConfig,
                         threads: int | None = None) -> list[LabeledSampleBatch]:
    return [make_batch(model, K, g, cfg.n_opt, derive_seed(cfg.seed, "opt", g), threads=threads)
            for g in range(K)]


def fit(model: AlternativeModel, K: int, cfg: OptimizerConfig | None = None,
        threads: int | None = None, batches: list[LabeledSampleBatch] | None = None) -> FitResult:
    """Gauss-Seidel sweeps over gamma = 0..K-1, one fixed batch per coordinate."""
    cfg = cfg or OptimizerConfig()
    if K < 2:
        raise ValueError(f"need K >= 2, got {K}")
    if batches is None:
        batches = optimisation_batches(model, K, cfg, threads)
    mu = np.zeros(K)
    trajectory: list[float] = []
    history = [mu.tolist()]
    converged = False
    for t in range(1, cfg.t_max + 1):
        prev = mu.copy()
        for gamma in range(K):
            mu[gamma] = bisect_coordinate(gamma, mu, batches[gamma], cfg)
        step = float(np.linalg.norm(mu - prev))
        trajectory.append(step)
        history.append(mu.tolist())
        log.info("iteration %d: |dmu| = %.3g, mu = %s", t, step, np.array2string(mu, precision=4))
        if step < cfg.epsilon:
            converged = True
            break
    status = ["zero" if m == 0.0 else "root" for m in mu]
    return FitResult(model=model, K=K, config=cfg, mu_hat=DualVector(tuple(mu)),
                     iterations=len(trajectory), trajectory=trajectory,
                     coordinate_status=status, converged=converged, history=history)


@dataclass(frozen=True)
class ContractionReport:
    ratios: list[float]
    contracting: bool


def contraction_diagnostic(trajectory, K: int | None = None, delta: float | None = None,
                           ratio_cap: float = 0.95) -> ContractionReport:
    """Successive step ratios over the geometric phase of a fit.

    When K and delta are given, the phase ends at the first step at or below
    the bisection noise floor sqrt(K) * delta; later steps are noise.
    """
    steps = [float(x) for x in trajectory]
    if len(steps) < 2:
        raise ValueError("need at least two steps to form a ratio")
    if K is not None and delta is not None:
        floor = math.sqrt(K) * delta
        cut = next((i for i, s in enumerate(steps) if s <= floor), len(steps))
        steps = steps[: max(cut + 1, 2)]
    ratios = [b / a if a > 0 else math.inf for a, b in zip(steps, steps[1:])]
    return ContractionReport(ratios=ratios, contracting=all(r < ratio_cap for r in ratios))
