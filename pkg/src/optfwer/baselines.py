"""Classical family-wise procedures on marginal p-values.

Each procedure accepts a single vector or an ``(N, K)`` matrix (one test
family per row) and returns boolean rejections in the input order.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .densities import DomainError


@dataclass(frozen=True)
class RejectionSet:
    rejected: tuple[bool, ...]

    @property
    def count(self) -> int:
        return sum(self.rejected)


def _prep(p, alpha):
    p = np.asarray(p, dtype=float)
    if p.ndim not in (1, 2) or p.shape[-1] < 1:
        raise ValueError("p must be a vector or a matrix with one family per row")
    if np.any(~(p > 0) | ~(p <= 1)):
        raise DomainError("p-values must lie in (0, 1]")
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    return np.atleast_2d(p), p.ndim == 1


def _wrap(rej: np.ndarray, single: bool):
    return RejectionSet(tuple(bool(x) for x in rej[0])) if single else rej


def bonferroni(p, alpha: float = 0.05):
    P, single = _prep(p, alpha)
    K = P.shape[1]
    return _wrap(P <= alpha / K, single)


def _cutoffs(P, alpha):
    K = P.shape[1]
    # Holm/Hochberg constants alpha / (K - k + 1) for k = 1..K
    return alpha / (K - np.arange(K))


def holm(p, alpha: float = 0.05):
    """Step-down: stop at the first sorted p-value above its Holm constant."""
    P, single = _prep(p, alpha)
    ps = np.sort(P, axis=1)
    ok = ps <= _cutoffs(P, alpha)
    n_rej = np.where(ok.all(axis=1), P.shape[1], np.argmin(ok, axis=1))
    return _wrap(_reject_smallest(P, ps, n_rej), single)


def hochberg(p, alpha: float = 0.05):
    """Step-up: largest k whose sorted p-value is under its Holm constant."""
    P, single = _prep(p, alpha)
    K = P.shape[1]
    ps = np.sort(P, axis=1)
    ok = ps <= _cutoffs(P, alpha)
    n_rej = np.where(ok.any(axis=1), K - np.argmax(ok[:, ::-1], axis=1), 0)
    return _wrap(_reject_smallest(P, ps, n_rej), single)


def _reject_smallest(P, ps, n_rej):
    # threshold on values so tied p-values are never split
    K = P.shape[1]
    thresh = np.where(n_rej > 0, ps[np.arange(len(ps)), np.clip(n_rej - 1, 0, K - 1)], -np.inf)
    return P <= thresh[:, None]


def hommel(p, alpha: float = 0.05):
    """Hommel (1988) via the largest index set with no Simes-type rejection."""
    P, single = _prep(p, alpha)
    N, K = P.shape
    ps = np.sort(P, axis=1)
    j = np.zeros(N, dtype=np.int64)
    for i in range(1, K + 1):
        k = np.arange(1, i + 1)
        # p_(K-i+k) > k alpha / i for all k = 1..i
        ok = (ps[:, K - i + k - 1] > k * alpha / i).all(axis=1)
        j = np.where(ok, i, j)
    thresh = np.where(j > 0, alpha / np.maximum(j, 1), np.inf)
    return _wrap(P <= thresh[:, None], single)


def simes_rejects(p_subset, alpha: float) -> bool:
    q = np.sort(np.asarray(p_subset, dtype=float))
    m = q.size
    return bool(np.min(q * m / np.arange(1, m + 1)) <= alpha)


def hommel_closure_oracle(p, alpha: float = 0.05) -> RejectionSet:
    """Closed testing with Simes local tests over every non-empty subset."""
    P, single = _prep(p, alpha)
    if not single:
        raise ValueError("the closure oracle takes one p-value vector")
    q = P[0]
    K = q.size
    if K > 12:
        raise ValueError("closure oracle is exponential; K must be at most 12")
    rejected_sets = {}
    for size in range(1, K + 1):
        for S in combinations(range(K), size):
            rejected_sets[S] = simes_rejects(q[list(S)], alpha)
    out = []
    for i in range(K):
        out.append(all(r for S, r in rejected_sets.items() if i in S))
    return RejectionSet(tuple(out))


METHODS = {
    "bonferroni": bonferroni,
    "holm": holm,
    "hochberg": hochberg,
    "hommel": hommel,
}
