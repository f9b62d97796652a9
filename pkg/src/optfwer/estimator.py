"""Monte-Carlo estimates of error rates and power on fixed sample batches.

A batch is drawn once under a configuration with ``gamma`` alternatives and
then re-scored at as many dual vectors as needed. Because the rejection
count of every sample is non-increasing in the multipliers, the estimated
error rate on a fixed batch is exactly monotone (common random numbers).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coefficients import batch_coeffs
from .densities import AlternativeModel
from .policy import DualVector, optimal_l_star
from .rng import uniforms

CHUNK = 8192


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("OPTFWER_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class LabeledSampleBatch:
    model: AlternativeModel
    K: int
    gamma: int
    N: int
    seed: int
    p: np.ndarray  # (N, K) ascending within each row
    is_null: np.ndarray  # (N, K) per sorted position
    raw_p: np.ndarray  # (N, K) alternatives in the first gamma columns
    g: np.ndarray
    a: np.ndarray  # (N,) scaled power weight
    b: np.ndarray  # (N, K, K) scaled error weights
    first_null: np.ndarray = field(init=False)  # 1-based; K + 1 when there is none
    alt_cum: np.ndarray = field(init=False)  # alternatives among the first j positions

    def __post_init__(self):
        has_null = self.is_null.any(axis=1)
        first = np.where(has_null, np.argmax(self.is_null, axis=1) + 1, self.K + 1)
        alt_cum = np.zeros((self.N, self.K + 1), dtype=np.int64)
        np.cumsum(~self.is_null, axis=1, out=alt_cum[:, 1:])
        object.__setattr__(self, "first_null", first)
        object.__setattr__(self, "alt_cum", alt_cum)


def _sorted_chunk(model, K, gamma, seed, start, stop, with_coeffs=True):
    v = uniforms(seed, start, stop, K)
    raw = np.empty_like(v)
    raw[:, :gamma] = model.sample_p(v[:, :gamma]) if gamma else v[:, :0]
    raw[:, gamma:] = v[:, gamma:]
    order = np.argsort(raw, axis=1, kind="stable")
    p = np.take_along_axis(raw, order, axis=1)
    is_null = order >= gamma
    g = model.g(p)
    if not with_coeffs:
        return raw, p, is_null, g, None, None
    a, b = batch_coeffs(g)
    return raw, p, is_null, g, a, b


def _chunks(N: int):
    return [(s, min(s + CHUNK, N)) for s in range(0, N, CHUNK)]


def _check_gamma(K: int, gamma: int, N: int):
    if K < 2:
        raise ValueError(f"need K >= 2, got {K}")
    if not 0 <= gamma <= K:
        raise ValueError(f"gamma must lie in 0..{K}, got {gamma}")
    if N < 1:
        raise ValueError("batch size must be positive")


def make_batch(model: AlternativeModel, K: int, gamma: int, N: int, seed: int,
               threads: int | None = None) -> LabeledSampleBatch:
    """Draw N samples with ``gamma`` alternatives and K - gamma nulls.

    Each sample consumes exactly K uniforms keyed by ``(seed, sample index)``;
    the first ``gamma`` feed the alternative sampler. Content depends only on
    the arguments, never on ``threads``.
    """
    _check_gamma(K, gamma, N)
    threads = threads or default_threads()
    spans = _chunks(N)

    def work(span):
        return _sorted_chunk(model, K, gamma, seed, *span)

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, spans))
    else:
        parts = [work(s) for s in spans]
    raw, p, is_null, g, a, b = (np.concatenate(x) for x in zip(*parts))
    return LabeledSampleBatch(model=model, K=K, gamma=gamma, N=N, seed=seed, p=p,
                              is_null=is_null, raw_p=raw, g=g, a=a, b=b)


def _mu_array(mu, K: int) -> np.ndarray:
    arr = mu.as_array() if isinstance(mu, DualVector) else np.asarray(mu, dtype=float)
    if arr.shape != (K,):
        raise ValueError(f"mu must have length {K}, got shape {arr.shape}")
    return arr


def l_star(batch: LabeledSampleBatch, mu) -> np.ndarray:
    mu = _mu_array(mu, batch.K)
    R = batch.a[:, None] - np.einsum("l,nlk->nk", mu, batch.b)
    return optimal_l_star(R)


def proportion_se(p_hat: float, n: int) -> float:
    return math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n)


def fwer_hat(batch: LabeledSampleBatch, mu) -> float:
    """Fraction of samples in which some null lands in the rejected prefix."""
    if batch.gamma >= batch.K:
        raise ValueError("error rate is undefined for a batch without nulls")
    return float(np.mean(batch.first_null <= l_star(batch, mu)))


def power_hat(batch: LabeledSampleBatch, mu) -> tuple[float, float]:
    """Average power and probability of at least one rejection, all alternatives."""
    if batch.gamma != batch.K:
        raise ValueError("power_hat needs an all-alternatives batch (gamma == K)")
    ls = l_star(batch, mu)
    return float(np.mean(ls) / batch.K), float(np.mean(ls >= 1))


def avg_power_hat(batch: LabeledSampleBatch, mu) -> float:
    if batch.gamma < 1:
        raise ValueError("average power needs at least one alternative")
    ls = l_star(batch, mu)
    hits = np.take_along_axis(batch.alt_cum, ls[:, None], axis=1)[:, 0]
    return float(np.mean(hits) / batch.gamma)


def fwer_integral_oracle(model: AlternativeModel, K: int, gamma: int, mu, N: int, seed: int,
                         with_se: bool = False):
    """Integral-form error rate from sorted uniforms, independent of labelled sampling.

    Averages ``sum_k b[gamma, k](u) D_k(u) / K!`` over sorted uniform vectors;
    the 1/K! converts the integral over the ordered simplex into an
    expectation under the order statistics of K uniforms.
    """
    _check_gamma(K, gamma, N)
    if gamma == K:
        raise ValueError("gamma must be below K")
    mu = _mu_array(mu, K)
    sums = []
    for start, stop in _chunks(N):
        u = np.sort(uniforms(seed, start, stop, K, stream=1), axis=1)
        g = model.g(u)
        a_s, b_s = batch_coeffs(g)
        ls = optimal_l_star(a_s[:, None] - np.einsum("l,nlk->nk", mu, b_s))
        _, b = batch_coeffs(g, scaled=False)
        weights = np.cumsum(b[:, gamma, :], axis=1)
        weights = np.concatenate([np.zeros((len(u), 1)), weights], axis=1)
        sums.append(np.take_along_axis(weights, ls[:, None], axis=1)[:, 0] / math.factorial(K))
    vals = np.concatenate(sums)
    est = float(vals.mean())
    if with_se:
        return est, float(vals.std(ddof=1) / math.sqrt(N))
    return est
