"""Alternative p-value densities g(u) and their inverse-transform samplers.

Under the null every p-value is uniform, so g is also the likelihood ratio
of a p-value. Four families are supported:

* ``trunc``   one-sided test of N(theta, 1) vs N(0, 1), both truncated to [-T, T]
* ``mixture`` two-sided test of 0.5 N(theta, 1) + 0.5 N(-theta, 1) vs N(0, 1)
* ``t``       two-sided test of t_df vs N(0, 1)
* ``beta``    p-values drawn from Beta(theta, 1)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special, stats

FAMILIES = ("trunc", "mixture", "t", "beta")
DEFAULT_TRUNC_BOUND = 8.0
U_FLOOR = 1e-300


class DomainError(ValueError):
    """An argument lies outside the domain of a density or sampler."""


class ParameterError(ValueError):
    """A model parameterisation violates the family's constraints."""


@dataclass(frozen=True)
class AlternativeModel:
    family: str
    theta: float = 0.0
    df: int | None = None
    trunc_bound: float = DEFAULT_TRUNC_BOUND

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "beta" and not 0.0 < self.theta <= 1.0:
            raise ParameterError(f"beta shape must lie in (0, 1], got {self.theta}")
        if self.family == "t" and (self.df is None or int(self.df) != self.df or self.df < 1):
            raise ParameterError(f"student-t needs an integer df >= 1, got {self.df}")
        if self.family == "trunc":
            if not self.trunc_bound > 0:
                raise ParameterError("trunc_bound must be positive")
            if not -self.trunc_bound <= self.theta <= 0.0:
                raise ParameterError(f"trunc shift must lie in [-T, 0], got {self.theta}")
        if self.family == "mixture" and not np.isfinite(self.theta):
            raise ParameterError("mixture shift must be finite")

    # -- g -----------------------------------------------------------------

    def log_g(self, u) -> np.ndarray:
        u = _check_unit(u, closed_right=True)
        u = np.maximum(u, U_FLOOR)
        th = self.theta
        if self.family == "beta":
            return np.log(th) + (th - 1.0) * np.log(u)
        if self.family == "trunc":
            x = self._null_quantile(u)
            return self._log_norm_ratio + th * x - 0.5 * th * th
        z = special.ndtri(1.0 - u / 2.0)
        # ndtri loses the tail for tiny u; isf on u/2 is accurate there
        small = u < 1e-3
        if np.any(small):
            z = np.where(small, stats.norm.isf(u / 2.0), z)
        z = np.maximum(z, 0.0)
        if self.family == "mixture":
            az = np.abs(th) * z
            # log cosh(az) = az + log1p(exp(-2 az)) - log 2
            return -0.5 * th * th + az + np.log1p(np.exp(-2.0 * az)) - np.log(2.0)
        return stats.t.logpdf(z, self.df) - stats.norm.logpdf(z)

    def g(self, u) -> np.ndarray:
        return np.exp(self.log_g(u))

    # -- sampling ------------------------------------------------------------

    def sample_p(self, v) -> np.ndarray:
        """Inverse CDF of the alternative p-value distribution, evaluated at v."""
        v = np.asarray(v, dtype=float)
        if np.any(~(v > 0.0) | ~(v < 1.0)):
            raise DomainError("uniform draws must lie in the open interval (0, 1)")
        th = self.theta
        if self.family == "beta":
            p = v ** (1.0 / th)
        elif self.family == "trunc":
            T = self.trunc_bound
            x = th + _trunc_std_quantile(v, -T - th, T - th)
            p = self._null_cdf(x)
        elif self.family == "mixture":
            p = 2.0 * special.ndtr(-_mixture_abs_isf(v, abs(th)))
        else:
            # P(U <= p) = 2 P_t(X > z_p), so |X| = t.isf(v / 2)
            p = 2.0 * special.ndtr(-stats.t.isf(v / 2.0, self.df))
        return np.clip(p, U_FLOOR, 1.0)

    # -- truncated-normal helpers -----------------------------------------------

    @property
    def _log_norm_ratio(self) -> float:
        T, th = self.trunc_bound, self.theta
        z0 = special.ndtr(T) - special.ndtr(-T)
        za = special.ndtr(T - th) - special.ndtr(-T - th)
        return float(np.log(z0) - np.log(za))

    def _null_quantile(self, u):
        T = self.trunc_bound
        return _trunc_std_quantile(u, -T, T)

    def _null_cdf(self, x):
        T = self.trunc_bound
        z0 = special.ndtr(T) - special.ndtr(-T)
        lower = (special.ndtr(x) - special.ndtr(-T)) / z0
        upper = 1.0 - (special.ndtr(-x) - special.ndtr(-T)) / z0
        return np.where(x <= 0.0, lower, upper)

    # -- misc -------------------------------------------------------------------

    def __str__(self) -> str:
        if self.family == "t":
            return f"t:{self.df}"
        if self.family == "trunc":
            return f"trunc:{self.theta:g}:{self.trunc_bound:g}"
        return f"{self.family}:{self.theta:g}"


def _check_unit(u, closed_right: bool) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    hi_ok = (u <= 1.0) if closed_right else (u < 1.0)
    if np.any(~(u > 0.0) | ~hi_ok):
        raise DomainError("p-values must lie in (0, 1]")
    return u


def _trunc_std_quantile(v, lo: float, hi: float):
    """Quantile of N(0, 1) truncated to [lo, hi], accurate in both tails."""
    mass = special.ndtr(hi) - special.ndtr(lo)
    v = np.asarray(v, dtype=float)
    left = special.ndtri(special.ndtr(lo) + v * mass)
    right = -special.ndtri(special.ndtr(-hi) + (1.0 - v) * mass)
    return np.clip(np.where(v <= 0.5, left, right), lo, hi)


def _mixture_abs_isf(v, theta: float, iters: int = 64):
    """Solve P(|X| > z) = v for X ~ 0.5 N(theta, 1) + 0.5 N(-theta, 1).

    The survival function of |X| is Phi(theta - z) + Phi(-theta - z); it is
    strictly decreasing on z >= 0, so a vectorised bisection in log space
    works down to v ~ 1e-300.
    """
    logv = np.log(np.asarray(v, dtype=float))
    lo = np.zeros_like(logv)
    hi = np.full_like(logv, theta + 40.0)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        log_sf = np.logaddexp(special.log_ndtr(theta - mid), special.log_ndtr(-theta - mid))
        above = log_sf > logv
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return 0.5 * (lo + hi)


def parse_model(text: str) -> AlternativeModel:
    """Parse ``trunc:-2.0[:T]``, ``mixture:2.0``, ``t:4`` or ``beta:0.5``."""
    parts = text.strip().split(":")
    fam = parts[0].lower()
    aliases = {"trunc-normal": "trunc", "truncnorm": "trunc", "student-t": "t", "mixture-normal": "mixture"}
    fam = aliases.get(fam, fam)
    try:
        if fam == "trunc" and len(parts) in (2, 3):
            bound = float(parts[2]) if len(parts) == 3 else DEFAULT_TRUNC_BOUND
            return AlternativeModel("trunc", theta=float(parts[1]), trunc_bound=bound)
        if fam in ("mixture", "beta") and len(parts) == 2:
            return AlternativeModel(fam, theta=float(parts[1]))
        if fam == "t" and len(parts) == 2:
            df = float(parts[1])
            if df != int(df):
                raise ParameterError(f"student-t df must be an integer, got {parts[1]}")
            return AlternativeModel("t", df=int(df))
    except ValueError as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"cannot parse model {text!r}: {exc}") from None
    raise ParameterError(f"cannot parse model {text!r}")


def g_eval(model: AlternativeModel, u):
    """Likelihood ratio of a p-value ``u`` under ``model``; scalar in, scalar out."""
    out = model.g(u)
    return float(out) if np.ndim(out) == 0 else out


def sample_p(model: AlternativeModel, v):
    """Alternative p-value at uniform draw ``v`` (deterministic in ``v``)."""
    out = model.sample_p(v)
    return float(out) if np.ndim(out) == 0 else out
