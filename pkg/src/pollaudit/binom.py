"""Log-space binomial kernels: pmf, survival function, the likelihood
ratio of pmfs, the ratio of tails, and the truncate-then-convolve step
that carries a tail distribution across audit rounds.

All probabilities live in log space (natural log, -inf for zero mass)
so that null-hypothesis tails remain usable at sample sizes around
10**5, where linear-space survival functions underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError

LOG_ZERO = float("-inf")


@dataclass(frozen=True)
class BinomialSpec:
    """Trial count and per-ballot winner probability."""

    n: int
    p: float

    def __post_init__(self):
        if self.n < 0:
            raise DomainError(f"trial count must be >= 0, got {self.n}")
        if not 0.0 < self.p < 1.0:
            raise DomainError(f"success probability must be in (0,1), got {self.p}")


def log_binom_pmf(k: int, spec: BinomialSpec) -> float:
    """ln Pr[K = k] for K ~ Binomial(spec.n, spec.p)."""
    if not 0 <= k <= spec.n:
        raise DomainError(f"k={k} outside [0, {spec.n}]")
    return _kernels.log_binom_pmf(k, spec.n, spec.p)


def log_binom_sf(k: int, spec: BinomialSpec) -> float:
    """ln Pr[K >= k]; k may be spec.n + 1 (empty tail, -inf)."""
    if not 0 <= k <= spec.n + 1:
        raise DomainError(f"k={k} outside [0, {spec.n + 1}]")
    return _kernels.log_binom_sf(k, spec.n, spec.p)


def _check_shares(p_a: float, p_0: float) -> None:
    if not 0.0 < p_0 < p_a < 1.0:
        raise DomainError(f"need 0 < p_0 < p_a < 1, got p_0={p_0}, p_a={p_a}")


def sigma(k: int, p_a: float, p_0: float, n: int) -> float:
    """ln of the likelihood ratio of binomial pmfs at (k, n).

    Closed form: k ln(p_a/p_0) + (n-k) ln((1-p_a)/(1-p_0)).
    """
    _check_shares(p_a, p_0)
    if n < 0 or not 0 <= k <= n:
        raise DomainError(f"k={k} outside [0, {n}]")
    return k * math.log(p_a / p_0) + (n - k) * (math.log1p(-p_a) - math.log1p(-p_0))


def tau1(k: int, p_a: float, p_0: float, n: int) -> float:
    """ln of the ratio of upper binomial tails at (k, n)."""
    _check_shares(p_a, p_0)
    if n < 0 or not 0 <= k <= n:
        raise DomainError(f"k={k} outside [0, {n}]")
    if n == 0:
        return 0.0
    return _kernels.log_binom_sf(k, n, p_a) - _kernels.log_binom_sf(k, n, p_0)


def log_sum_exp(values: np.ndarray) -> float:
    """Max-shifted sum of exponentials; -inf-safe."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return LOG_ZERO
    best = float(np.max(values))
    if best == LOG_ZERO:
        return LOG_ZERO
    return best + math.log(float(np.sum(np.exp(values - best))))


@dataclass(frozen=True)
class TailDistribution:
    """Mass over cumulative winner tallies, in log space.

    ``log_mass[i]`` is the log mass at tally ``support_min + i``. After a
    truncation the total mass is below 0 (log of a sub-probability).
    """

    support_min: int
    log_mass: np.ndarray
    total_log_mass: float

    @property
    def support_max(self) -> int:
        return self.support_min + len(self.log_mass) - 1

    @staticmethod
    def point_mass(at: int = 0) -> "TailDistribution":
        return TailDistribution(at, np.zeros(1), 0.0)

    @staticmethod
    def from_binomial(spec: BinomialSpec) -> "TailDistribution":
        mass = np.array([_kernels.log_binom_pmf(k, spec.n, spec.p) for k in range(spec.n + 1)])
        return TailDistribution(0, mass, 0.0)

    def log_tail(self, k: int) -> float:
        """ln of the total mass at tallies >= k."""
        if k <= self.support_min:
            return self.total_log_mass
        idx = k - self.support_min
        if idx >= len(self.log_mass):
            return LOG_ZERO
        return log_sum_exp(self.log_mass[idx:])

    def log_tail_curve(self) -> np.ndarray:
        """ln tail mass at every supported tally (suffix-accumulated)."""
        rev = self.log_mass[::-1]
        acc = np.logaddexp.accumulate(rev)
        return acc[::-1]

    def truncated(self, kmin: int) -> "TailDistribution":
        """Zero all mass at tallies >= kmin."""
        if kmin <= self.support_min:
            return TailDistribution(self.support_min, np.full(1, LOG_ZERO), LOG_ZERO)
        idx = min(kmin - self.support_min, len(self.log_mass))
        kept = self.log_mass[:idx].copy()
        return TailDistribution(self.support_min, kept, log_sum_exp(kept))


def truncate_and_convolve(
    prior: TailDistribution, kmin_prev: int, marginal: BinomialSpec
) -> TailDistribution:
    """Drop mass at tallies >= kmin_prev, then add an independent
    Binomial(marginal) draw. Total mass is conserved by the convolution.
    """
    kept = prior.truncated(kmin_prev)
    if kept.total_log_mass == LOG_ZERO:
        return kept
    if marginal.n == 0:
        return kept
    out = _kernels.log_convolve_binom(kept.log_mass, marginal.n, marginal.p)
    return TailDistribution(kept.support_min, out, kept.total_log_mass)
