"""Pure-Python/numpy kernel implementations.

These are the reference versions of the hot numeric loops. The compiled
module ``_fast`` implements the same contract; ``pollaudit._kernels``
picks one at import time. Everything here works in log space so that
binomial tails stay meaningful at sample sizes around 10**5 and beyond,
where linear-space survival functions underflow.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

# Relative size at which tail-term accumulation stops.
_TERM_EPS = 1e-18

_NEG_INF = float("-inf")


def log_binom_pmf(k: int, n: int, p: float) -> float:
    """ln C(n,k) + k ln p + (n-k) ln(1-p), via log-gamma."""
    return (
        math.lgamma(n + 1.0)
        - math.lgamma(k + 1.0)
        - math.lgamma(n - k + 1.0)
        + k * math.log(p)
        + (n - k) * math.log1p(-p)
    )


def log_binom_sf(k: int, n: int, p: float) -> float:
    """ln Pr[K >= k] for K ~ Binomial(n, p).

    Sums pmf terms relative to the anchor term so all partial sums are
    positive and well scaled. Above the mode the upper tail is summed
    directly; at or below the mode the lower tail is summed (downward,
    from its largest term) and complemented, which keeps the relative
    error bounded because that lower tail is bounded away from 1.
    """
    if k <= 0:
        return 0.0
    if k > n:
        return _NEG_INF
    mode = math.floor((n + 1) * p)
    if k > mode:
        base = log_binom_pmf(k, n, p)
        total = 1.0
        term = 1.0
        odds = p / (1.0 - p)
        for i in range(k, n):
            term *= (n - i) / (i + 1.0) * odds
            total += term
            if term < _TERM_EPS * total:
                break
        return base + math.log(total)
    base = log_binom_pmf(k - 1, n, p)
    total = 1.0
    term = 1.0
    inv_odds = (1.0 - p) / p
    for i in range(k - 1, 0, -1):
        term *= i / (n - i + 1.0) * inv_odds
        total += term
        if term < _TERM_EPS * total:
            break
    log_cdf = base + math.log(total)
    return math.log1p(-math.exp(log_cdf))


def log_convolve_binom(prior_log: np.ndarray, m: int, p: float) -> np.ndarray:
    """Log-space convolution of a mass array with Binomial(m, p).

    out[j] = logsumexp_i(prior_log[i] + lpmf[j - i]); each output cell is
    max-shift accumulated, so cells keep full relative precision no
    matter how far below the global peak they sit.
    """
    lpmf = np.array([log_binom_pmf(k, m, p) for k in range(m + 1)])
    out = np.full(len(prior_log) + m, _NEG_INF)
    for i, v in enumerate(prior_log):
        if v == _NEG_INF:
            continue
        seg = out[i : i + m + 1]
        np.logaddexp(seg, v + lpmf, out=seg)
    return out


def so_crossing_curve(
    m: int,
    p: float,
    start_n: int,
    start_k: int,
    log_one_over_alpha: float,
    log_odds_a: float,
    log_odds_b: float,
) -> np.ndarray:
    """Cumulative first-crossing probability of per-ballot Bravo.

    A path starts at cumulative sample (start_n, start_k) and draws m
    further ballots, each for the winner with probability p. The Bravo
    condition at cumulative (nc, kc) is
    kc*log_odds_a - (nc-kc)*log_odds_b >= log_one_over_alpha, i.e.
    kc >= ceil((log_one_over_alpha + nc*log_odds_b) / (log_odds_a + log_odds_b)).
    Returns, for t = 1..m, the probability the path has crossed by ballot t.

    The state vector is pruned at the bottom: cells more than ~1e-15 of
    the total below the live bulk cannot change the curve at any useful
    tolerance; pruned mass is treated as never crossing.
    """
    denom = log_odds_a + log_odds_b
    crossed = 0.0
    curve = np.empty(m, dtype=np.float64)

    def threshold(nc: int) -> int:
        return math.ceil((log_one_over_alpha + nc * log_odds_b) / denom)

    # q[j] = Pr[marginal winner tally == lo + j, not yet crossed]
    c0 = threshold(start_n)
    if start_k >= c0:
        curve[:] = 1.0
        return curve
    q = np.array([1.0])
    lo = 0  # marginal tally of first live cell
    prune = 1e-15
    for t in range(1, m + 1):
        q = np.append(q, 0.0)
        q[1:] = q[1:] * (1.0 - p) + q[:-1] * p
        q[0] *= 1.0 - p
        c = threshold(start_n + t) - start_k  # marginal-tally threshold
        hi = lo + len(q) - 1
        if c <= hi:
            cut = max(c - lo, 0)
            crossed += float(q[cut:].sum())
            q = q[:cut]
            hi = lo + len(q) - 1
        if len(q) == 0:
            curve[t - 1 :] = crossed
            break
        # drop negligible bottom cells (they cannot cross later at any
        # probability visible beside the retained mass)
        total = q.sum()
        if len(q) > 8:
            csum = np.cumsum(q)
            drop = int(np.searchsorted(csum, prune * total))
            if drop > 0:
                q = q[drop:]
                lo += drop
        curve[t - 1] = crossed
    return curve
