"""Power and error coefficients of a sorted p-value vector.

For sorted likelihood ratios g_1, ..., g_K the power weight is
``(K-1)! * prod(g)`` at every position, and the error weight of rejecting
position k under configuration l (l alternatives, K - l nulls) is::

    b[l, k] = l! (K-l)! * g_1 ... g_{k-1} * e_{l-k+1}(g_{k+1}, ..., g_K)

where e_m is the m-th elementary symmetric polynomial. Rows are indexed by
l = 0..K-1 and columns by zero-based position k - 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_K = 20


class CoefficientOverflow(ArithmeticError):
    """K exceeds the range in which factorial prefactors are computed directly."""


@dataclass(frozen=True)
class CoefficientBundle:
    K: int
    a: float
    b: np.ndarray  # (K, K): b[l, k-1]


def esp_all(values) -> list[float]:
    """All elementary symmetric polynomials e_0..e_n of ``values``."""
    e = [1.0]
    for x in values:
        e.append(0.0)
        for m in range(len(e) - 1, 0, -1):
            e[m] += x * e[m - 1]
    return e


def _check_k(K: int, n_values: int | None = None):
    if K < 2:
        raise ValueError(f"need at least two hypotheses, got K={K}")
    if K > MAX_K:
        raise CoefficientOverflow(f"K={K} exceeds the factorial-safe limit {MAX_K}")
    if n_values is not None and n_values != K:
        raise ValueError(f"expected {K} likelihood ratios, got {n_values}")


def power_coeff(K: int, g_values) -> float:
    g = [float(x) for x in g_values]
    _check_k(K, len(g))
    return math.factorial(K - 1) * math.prod(g)


def error_coeffs(K: int, g_values) -> CoefficientBundle:
    """Coefficient bundle for one sorted sample, straight from the closed form."""
    g = [float(x) for x in g_values]
    _check_k(K, len(g))
    b = np.zeros((K, K))
    prefix = 1.0
    for k in range(1, K + 1):
        tail = esp_all(g[k:])
        for l in range(k - 1, K):
            m = l - k + 1
            if m < len(tail):
                b[l, k - 1] = math.factorial(l) * math.factorial(K - l) * prefix * tail[m]
        prefix *= g[k - 1]
    return CoefficientBundle(K=K, a=power_coeff(K, g), b=b)


def net_benefits(bundle: CoefficientBundle, mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (bundle.K,):
        raise ValueError(f"mu must have length {bundle.K}, got shape {mu.shape}")
    return bundle.a - mu @ bundle.b


def batch_coeffs(g: np.ndarray, scaled: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised coefficients for an ``(N, K)`` array of sorted likelihood ratios.

    Returns ``a`` with shape (N,) and ``b`` with shape (N, K, K). With
    ``scaled=True`` every sample's coefficients are divided by
    ``prod_j max(g_j, 1)``, which keeps all entries within the factorial
    prefactors even for unbounded densities. The division is by a positive
    per-sample constant, so the decision rule is unchanged.
    """
    g = np.asarray(g, dtype=float)
    N, K = g.shape
    _check_k(K)
    if scaled:
        big = np.maximum(g, 1.0)
        w_alt = g / big  # an alternative at position j
        w_null = 1.0 / big  # a null at position j
    else:
        w_alt = g
        w_null = np.ones_like(g)

    fact = np.array([math.factorial(i) for i in range(K + 1)], dtype=float)
    row_const = fact[:K] * fact[K:0:-1]  # l! (K-l)! for l = 0..K-1

    b = np.zeros((N, K, K))
    # tail[:, m] = weighted e_m over positions k+1..K, built from the right
    tail = np.zeros((N, K + 1))
    tail[:, 0] = 1.0
    tails = [None] * K
    for k in range(K, 0, -1):
        tails[k - 1] = tail.copy()
        j = k - 1
        tail[:, 1:] = tail[:, 1:] * w_null[:, j : j + 1] + tail[:, :-1] * w_alt[:, j : j + 1]
        tail[:, 0] *= w_null[:, j]
    prefix = np.ones(N)
    for k in range(1, K + 1):
        t = tails[k - 1]
        head = prefix * w_null[:, k - 1]
        for l in range(k - 1, K):
            m = l - k + 1
            if m <= K - k:
                b[:, l, k - 1] = row_const[l] * head * t[:, m]
        prefix = prefix * w_alt[:, k - 1]
    a = fact[K - 1] * prefix
    return a, b
