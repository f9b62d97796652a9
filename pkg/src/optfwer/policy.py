"""The dual decision rule: reject the leading block maximising cumulative net benefit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import batch_coeffs
from .densities import AlternativeModel, DomainError


@dataclass(frozen=True)
class DualVector:
    mu: tuple[float, ...]

    def __post_init__(self):
        mu = tuple(float(m) for m in self.mu)
        if any(not np.isfinite(m) or m < 0 for m in mu):
            raise ValueError(f"dual multipliers must be finite and non-negative, got {mu}")
        object.__setattr__(self, "mu", mu)

    @classmethod
    def zeros(cls, K: int) -> "DualVector":
        return cls((0.0,) * K)

    @property
    def K(self) -> int:
        return len(self.mu)

    def as_array(self) -> np.ndarray:
        return np.array(self.mu)


@dataclass(frozen=True)
class PolicyResult:
    l_star: int
    decisions: tuple[bool, ...]  # per sorted position


def optimal_l_star(R) -> np.ndarray | int:
    """Largest l in 0..K maximising sum(R[:l]); works row-wise on 2-D input.

    Ties go to the largest maximiser, the convention under which the number
    of rejections is monotone in the multipliers.
    """
    R = np.asarray(R, dtype=float)
    S = np.cumsum(R, axis=-1)
    S = np.concatenate([np.zeros(S.shape[:-1] + (1,)), S], axis=-1)
    K = R.shape[-1]
    l_star = K - np.argmax(S[..., ::-1], axis=-1)
    return int(l_star) if np.ndim(l_star) == 0 else l_star


def decide(model: AlternativeModel, mu, p_values):
    """Apply the policy at ``mu`` to raw p-values.

    Returns ``(result, order, rejected)`` where ``result`` is in sorted
    order, ``order[k]`` is the input index of the k-th smallest p-value and
    ``rejected`` flags hypotheses by input index.
    """
    p = np.asarray(p_values, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ValueError("need a one-dimensional vector of at least two p-values")
    if np.any(~(p > 0) | ~(p <= 1)):
        raise DomainError("p-values must lie in (0, 1]")
    mu = mu if isinstance(mu, DualVector) else DualVector(tuple(mu))
    if mu.K != p.size:
        raise ValueError(f"mu has length {mu.K} but {p.size} p-values were given")
    order = np.argsort(p, kind="stable")
    # same scaled path as the Monte-Carlo estimator, so fitted and applied rules agree
    a, b = batch_coeffs(model.g(p[order])[None, :])
    l_star = int(optimal_l_star(a[0] - mu.as_array() @ b[0]))
    decisions = tuple(k < l_star for k in range(p.size))
    rejected = np.zeros(p.size, dtype=bool)
    rejected[order[:l_star]] = True
    return PolicyResult(l_star=l_star, decisions=decisions), order, rejected
