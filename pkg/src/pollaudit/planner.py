"""Round-size planning: target conditional stopping probability,
misleading-limit-constrained first rounds, multiplier schedules for the
predetermined-schedule rule, and multi-candidate scaling.

Stopping probability is not monotone ballot-by-ballot (it saw-tooths as
the tally threshold steps), so searches bracket by doubling, bisect to a
crossing, then walk down to the plateau edge where the next-smaller size
no longer meets the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .binom import BinomialSpec, log_binom_sf
from .contest import PairwiseContest, RoundHistory, check_alpha, empty_history
from .errors import CapacityError, DomainError
from .rules import eor_bravo_kmin, providence_kmin

DEFAULT_MAX_N = 1_000_000


@dataclass(frozen=True)
class RoundPlan:
    """A proposed next cumulative round size and what it buys."""

    cumulative_n: int
    kmin: int
    stop_prob: float
    misleading_prob: float | None = None


@dataclass(frozen=True)
class PlannerConfig:
    target_p: float = 0.9
    misleading_limit: float | None = None
    max_n: int = DEFAULT_MAX_N
    minerva_multiplier: float = 1.5

    def __post_init__(self):
        if not 0.0 < self.target_p < 1.0:
            raise DomainError(f"target_p must be in (0,1), got {self.target_p}")
        if self.max_n < 1:
            raise DomainError("max_n must be >= 1")
        if self.misleading_limit is not None and not 0.0 < self.misleading_limit < 1.0:
            raise DomainError("misleading_limit must be in (0,1)")


def round_stop_prob(
    k_prev: int, n_prev: int, n_cur: int, contest: PairwiseContest, alpha: float
) -> float:
    """Chance the next round stops under the reported tally, given the
    previous cumulative state."""
    kmin = providence_kmin(k_prev, n_prev, n_cur, contest, alpha)
    if kmin > n_cur:
        return 0.0
    return math.exp(log_binom_sf(kmin - k_prev, BinomialSpec(n_cur - n_prev, contest.p_a)))


# Consecutive sub-target sizes after which the descending scan stops.
# The probability saw-tooths with the tally-threshold stride (2 ballots
# for an exact-tie null), so inside the crossing window passing sizes
# recur every few steps; a long all-fail streak means the envelope is
# decisively below the target and nothing smaller can pass.
_FAIL_STREAK = 64


def _search_round_size(sp, n_prev: int, max_n: int, target: float) -> int:
    """Smallest n > n_prev with sp(n) >= target.

    Doubles to bracket the crossing, bisects to one passing size, then
    scans downward through the whole saw-tooth window for the earliest
    passing size.
    """
    if max_n <= n_prev:
        raise DomainError(f"max_n={max_n} must exceed the current sample size {n_prev}")
    lo = n_prev
    hi = None
    step = 1
    while True:
        n = min(n_prev + step, max_n)
        if sp(n) >= target:
            hi = n
            break
        lo = n
        if n >= max_n:
            raise CapacityError(
                f"stopping probability {target} unattainable within max_n={max_n}",
            )
        step *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if sp(mid) >= target:
            hi = mid
        else:
            lo = mid
    best = hi
    fails = 0
    n = hi - 1
    while n > n_prev and fails < _FAIL_STREAK:
        if sp(n) >= target:
            best = n
            fails = 0
        else:
            fails += 1
        n -= 1
    return best


def next_round_size(
    history: RoundHistory | None,
    contest: PairwiseContest,
    alpha: float,
    target_p: float,
    max_n: int = DEFAULT_MAX_N,
) -> RoundPlan:
    """Smallest next cumulative round size whose conditional stopping
    probability meets ``target_p`` under the reported tally."""
    check_alpha(alpha)
    if not 0.0 < target_p < 1.0:
        raise DomainError(f"target_p must be in (0,1), got {target_p}")
    history = history or empty_history
    if history.rounds:
        n_prev = history.cumulative_n[-1]
        k_prev = history.cumulative_k[-1]
    else:
        n_prev = k_prev = 0

    def sp(n: int) -> float:
        return round_stop_prob(k_prev, n_prev, n, contest, alpha)

    try:
        n = _search_round_size(sp, n_prev, max_n, target_p)
    except CapacityError as exc:
        exc.best_plan = _plan_at(max_n, k_prev, n_prev, contest, alpha)
        raise
    return _plan_at(n, k_prev, n_prev, contest, alpha)


def _plan_at(
    n: int, k_prev: int, n_prev: int, contest: PairwiseContest, alpha: float
) -> RoundPlan:
    kmin = providence_kmin(k_prev, n_prev, n, contest, alpha)
    stop = round_stop_prob(k_prev, n_prev, n, contest, alpha)
    misleading = misleading_sample_prob(n, contest) if n_prev == 0 else None
    return RoundPlan(cumulative_n=n, kmin=kmin, stop_prob=stop, misleading_prob=misleading)


def minerva_schedule(first_round: int, multiplier: float, rounds: int) -> tuple[int, ...]:
    """Cumulative sizes where each marginal round is ``multiplier`` times
    the previous marginal, rounded half-up."""
    if first_round < 1:
        raise DomainError("first_round must be >= 1")
    if multiplier <= 1.0:
        raise DomainError("multiplier must exceed 1")
    if rounds < 1:
        raise DomainError("rounds must be >= 1")
    marginal = first_round
    out = [first_round]
    for _ in range(rounds - 1):
        marginal = math.floor(multiplier * marginal + 0.5)
        out.append(out[-1] + marginal)
    return tuple(out)


def misleading_sample_prob(n: int, contest: PairwiseContest) -> float:
    """Planning probability that the winner is not strictly ahead after n
    draws under the reported tally (a tied even-size sample counts)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    bad_max = n // 2  # winner strictly ahead requires k >= floor(n/2) + 1
    return -math.expm1(log_binom_sf(bad_max + 1, BinomialSpec(n, contest.p_a)))


_EXHAUSTIVE_SCAN_LIMIT = 1024


def misleading_min_round_size(
    contest: PairwiseContest, limit: float, max_n: int = DEFAULT_MAX_N
) -> int:
    """Smallest first round size whose misleading probability is at most
    ``limit``.

    The probability alternates between odd and even sizes (even sizes
    carry the tie mass), so small sizes are scanned exhaustively and
    larger ones are bisected per parity, where the probability is
    monotone.
    """
    if not 0.0 < limit < 1.0:
        raise DomainError(f"limit must be in (0,1), got {limit}")
    if max_n < 1:
        raise DomainError("max_n must be >= 1")
    for n in range(1, min(max_n, _EXHAUSTIVE_SCAN_LIMIT) + 1):
        if misleading_sample_prob(n, contest) <= limit:
            return n
    if max_n <= _EXHAUSTIVE_SCAN_LIMIT:
        raise CapacityError(f"misleading limit {limit} unattainable within max_n={max_n}")

    def parity_min(start: int) -> int | None:
        # smallest n of this parity in [start, max_n] with prob <= limit
        lo, hi = start, start + 2 * ((max_n - start) // 2)
        if misleading_sample_prob(hi, contest) > limit:
            return None
        if misleading_sample_prob(lo, contest) <= limit:
            return lo
        while hi - lo > 2:
            mid = lo + 2 * ((hi - lo) // 4)
            if misleading_sample_prob(mid, contest) <= limit:
                hi = mid
            else:
                lo = mid
        return hi

    candidates = [
        m
        for m in (parity_min(_EXHAUSTIVE_SCAN_LIMIT + 1), parity_min(_EXHAUSTIVE_SCAN_LIMIT + 2))
        if m is not None
    ]
    if not candidates:
        raise CapacityError(f"misleading limit {limit} unattainable within max_n={max_n}")
    return min(candidates)


@dataclass(frozen=True)
class StopProbs:
    providence: float
    so_bravo: float
    eor_bravo: float


def so_crossing_curve(
    marginal: int,
    contest: PairwiseContest,
    alpha: float,
    start_n: int = 0,
    start_k: int = 0,
    p: float | None = None,
) -> np.ndarray:
    """Cumulative probability that the per-ballot rule has crossed after
    each of the next ``marginal`` draws."""
    check_alpha(alpha)
    if marginal < 1:
        raise DomainError("marginal must be >= 1")
    a = math.log(contest.p_a / contest.p_0)
    b = math.log1p(-contest.p_0) - math.log1p(-contest.p_a)
    draw_p = contest.p_a if p is None else p
    return _kernels.so_crossing_curve(marginal, draw_p, start_n, start_k, -math.log(alpha), a, b)


def so_crossing_prob(
    n: int, contest: PairwiseContest, alpha: float, start_n: int = 0, start_k: int = 0
) -> float:
    curve = so_crossing_curve(n - start_n, contest, alpha, start_n, start_k)
    return float(curve[-1])


def so_next_round_size(
    k_prev: int,
    n_prev: int,
    contest: PairwiseContest,
    alpha: float,
    target_p: float,
    max_n: int = DEFAULT_MAX_N,
) -> int:
    """Smallest cumulative size at which the per-ballot rule crosses with
    probability >= target_p; one crossing-curve pass serves the search."""
    if max_n <= n_prev:
        raise DomainError(f"max_n={max_n} must exceed the current sample size {n_prev}")
    cap = 256
    while True:
        cap = min(cap, max_n - n_prev)
        curve = so_crossing_curve(cap, contest, alpha, n_prev, k_prev)
        if curve[-1] >= target_p:
            break
        if cap == max_n - n_prev:
            raise CapacityError(
                f"crossing probability {target_p} unattainable within max_n={max_n}"
            )
        cap *= 2
    t = int(np.searchsorted(curve, target_p, side="left")) + 1
    return n_prev + t


def eor_next_round_size(
    k_prev: int,
    n_prev: int,
    contest: PairwiseContest,
    alpha: float,
    target_p: float,
    max_n: int = DEFAULT_MAX_N,
) -> int:
    """Smallest cumulative size at which the end-of-round rule stops with
    probability >= target_p given the current cumulative state."""

    def sp(n: int) -> float:
        need = eor_bravo_kmin(n, contest, alpha) - k_prev
        m = n - n_prev
        if need > m:
            return 0.0
        return math.exp(log_binom_sf(max(need, 0), BinomialSpec(m, contest.p_a)))

    return _search_round_size(sp, n_prev, max_n, target_p)


def first_round_stop_probs_at(n: int, contest: PairwiseContest, alpha: float) -> StopProbs:
    """First-round stopping probability of the three round-compatible
    rules at a fixed round size, under the reported tally."""
    if n < 1:
        raise DomainError("n must be >= 1")
    check_alpha(alpha)
    kmin = providence_kmin(0, 0, n, contest, alpha)
    prov = 0.0 if kmin > n else math.exp(log_binom_sf(kmin, BinomialSpec(n, contest.p_a)))
    ek = eor_bravo_kmin(n, contest, alpha)
    eor = 0.0 if ek > n else math.exp(log_binom_sf(ek, BinomialSpec(n, contest.p_a)))
    so = so_crossing_prob(n, contest, alpha)
    return StopProbs(providence=prov, so_bravo=so, eor_bravo=eor)


def multi_candidate_round_size(
    contests: list[PairwiseContest],
    histories: list[RoundHistory | None],
    alpha: float,
    target_p: float,
    max_n: int = DEFAULT_MAX_N,
) -> int:
    """Full-sample draw count covering every pairwise contest: each
    pairwise plan is scaled up by its relevant fraction and the largest
    requirement wins."""
    if not contests:
        raise DomainError("at least one pairwise contest is required")
    if len(histories) != len(contests):
        raise DomainError("one history per pairwise contest is required")
    sizes = []
    for contest, history in zip(contests, histories):
        plan = next_round_size(history, contest, alpha, target_p, max_n)
        sizes.append(math.ceil(plan.cumulative_n / contest.relevant_fraction))
    return max(sizes)
