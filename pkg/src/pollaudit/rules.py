"""The four ballot-polling stopping rules and their risk measures.

Round-adaptive rule: the round-j ratio is the pmf likelihood ratio of
the previous cumulative sample times the tail ratio of the current
marginal round, so thresholds depend only on the previous round's
cumulative state and the audit stays risk-limiting under adaptively
chosen round sizes. The predetermined-schedule rule instead carries the
joint still-running distribution across rounds by truncation and
convolution. End-of-round and selection-ordered per-ballot rules apply
the pmf likelihood ratio directly.
"""

from __future__ import annotations

import math

from .binom import (
    BinomialSpec,
    TailDistribution,
    log_binom_sf,
    sigma,
    tau1,
    truncate_and_convolve,
)
from .contest import AuditVerdict, Decision, PairwiseContest, RoundHistory, check_alpha
from .errors import DomainError, ScheduleViolationError


def _clamp_risk(log_ratio: float) -> float:
    """Measured risk min(1, 1/ratio) from a log ratio."""
    if log_ratio <= 0.0:
        return 1.0
    return math.exp(-log_ratio)


def is_misleading_sample(n: int, k: int) -> bool:
    """Strictly more ballots for the loser than the winner; ties are not
    misleading."""
    return k < n - k


def providence_log_omega(
    history: RoundHistory, contest: PairwiseContest, round_index: int
) -> float:
    """ln of the round-adaptive ratio at the given 1-based round."""
    if not 1 <= round_index <= history.rounds:
        raise DomainError(f"round_index {round_index} outside history of {history.rounds}")
    p_a, p_0 = contest.p_a, contest.p_0
    if round_index == 1:
        return tau1(history.cumulative_k[0], p_a, p_0, history.cumulative_n[0])
    k_prev = history.cumulative_k[round_index - 2]
    n_prev = history.cumulative_n[round_index - 2]
    k_cur = history.cumulative_k[round_index - 1]
    n_cur = history.cumulative_n[round_index - 1]
    return sigma(k_prev, p_a, p_0, n_prev) + tau1(k_cur - k_prev, p_a, p_0, n_cur - n_prev)


def providence_kmin(
    k_prev: int, n_prev: int, n_cur: int, contest: PairwiseContest, alpha: float
) -> int:
    """Smallest cumulative tally that meets the risk limit this round.

    Returns the sentinel ``n_cur + 1`` when no tally in range qualifies.
    Binary search is valid because the ratio is strictly increasing in
    the tally.
    """
    check_alpha(alpha)
    if n_cur <= n_prev or n_prev < 0:
        raise DomainError(f"need n_cur > n_prev >= 0, got {n_prev}, {n_cur}")
    if not 0 <= k_prev <= n_prev:
        raise DomainError(f"k_prev={k_prev} outside [0, {n_prev}]")
    p_a, p_0 = contest.p_a, contest.p_0
    m = n_cur - n_prev
    target = -math.log(alpha)
    base = sigma(k_prev, p_a, p_0, n_prev)
    lo, hi = k_prev, k_prev + m
    if base + tau1(hi - k_prev, p_a, p_0, m) < target:
        return n_cur + 1
    while lo < hi:
        mid = (lo + hi) // 2
        if base + tau1(mid - k_prev, p_a, p_0, m) >= target:
            hi = mid
        else:
            lo = mid + 1
    return lo


def providence_verdict(
    history: RoundHistory, contest: PairwiseContest, alpha: float
) -> AuditVerdict:
    """Round-adaptive verdict for the latest round."""
    check_alpha(alpha)
    if history.rounds == 0:
        raise DomainError("empty history")
    j = history.rounds
    log_omega = providence_log_omega(history, contest, j)
    n_prev = history.cumulative_n[j - 2] if j >= 2 else 0
    k_prev = history.cumulative_k[j - 2] if j >= 2 else 0
    kmin = providence_kmin(k_prev, n_prev, history.cumulative_n[j - 1], contest, alpha)
    n_j, k_j = history.cumulative_n[j - 1], history.cumulative_k[j - 1]
    decision = Decision.CORRECT if log_omega >= -math.log(alpha) else Decision.UNDETERMINED
    return AuditVerdict(
        decision=decision,
        measured_risk=_clamp_risk(log_omega),
        kmin=kmin,
        misleading_now=is_misleading_sample(n_j, k_j),
    )


class PredeterminedChain:
    """Per-round thresholds and tail curves for a predetermined schedule.

    Carries the joint (tally, still-running) distribution under both
    hypotheses across rounds via truncation at the previous threshold
    followed by convolution with the marginal round's binomial.
    """

    def __init__(self, schedule: tuple[int, ...], contest: PairwiseContest, alpha: float):
        check_alpha(alpha)
        if not schedule or any(b <= a for a, b in zip((0,) + schedule, schedule)):
            raise DomainError("schedule must be nonempty and strictly increasing")
        self.schedule = tuple(schedule)
        self.contest = contest
        self.alpha = alpha
        self.kmins: list[int] = []
        self._tails_a: list = []  # log tail curves per round, index = tally
        self._tails_0: list = []
        dist_a = TailDistribution.point_mass(0)
        dist_0 = TailDistribution.point_mass(0)
        log_inv_alpha = -math.log(alpha)
        prev_n = 0
        prev_kmin = None
        for n in self.schedule:
            m = n - prev_n
            if prev_kmin is None:
                # round 1: the joint distribution is the plain binomial and
                # the threshold is the round-adaptive one, so compute both
                # through the same scalar code path (keeps single-round
                # verdicts identical between the two rules, bit for bit)
                dist_a = TailDistribution.from_binomial(BinomialSpec(m, contest.p_a))
                dist_0 = TailDistribution.from_binomial(BinomialSpec(m, contest.p_0))
                kmin = providence_kmin(0, 0, n, contest, alpha)
                self._tails_a.append(None)
                self._tails_0.append(None)
            else:
                dist_a = truncate_and_convolve(dist_a, prev_kmin, BinomialSpec(m, contest.p_a))
                dist_0 = truncate_and_convolve(dist_0, prev_kmin, BinomialSpec(m, contest.p_0))
                tail_a = dist_a.log_tail_curve()
                tail_0 = dist_0.log_tail_curve()
                ratio = tail_a - tail_0
                qualifying = ratio >= log_inv_alpha
                kmin = int(qualifying.argmax()) if qualifying.any() else n + 1
                self._tails_a.append(tail_a)
                self._tails_0.append(tail_0)
            self.kmins.append(kmin)
            prev_n = n
            prev_kmin = kmin
        self._dist_a = dist_a
        self._dist_0 = dist_0

    def log_tau(self, j: int, k: int) -> float:
        """ln of the round-j tail ratio at cumulative tally k (1-based j)."""
        if j == 1:
            return tau1(k, self.contest.p_a, self.contest.p_0, self.schedule[0])
        tail_a, tail_0 = self._tails_a[j - 1], self._tails_0[j - 1]
        if k >= len(tail_a):
            return math.inf
        if k < 0:
            k = 0
        return float(tail_a[k] - tail_0[k])

    def stop_prob_given(self, j: int, k_prev: int) -> float:
        """Chance round j stops under the reported tally, given the
        previous cumulative tally."""
        n_prev = self.schedule[j - 2] if j >= 2 else 0
        m = self.schedule[j - 1] - n_prev
        need = self.kmins[j - 1] - k_prev
        if need > m:
            return 0.0
        return math.exp(log_binom_sf(max(need, 0), BinomialSpec(m, self.contest.p_a)))


def minerva_verdict(
    history: RoundHistory,
    contest: PairwiseContest,
    alpha: float,
    schedule: tuple[int, ...],
) -> AuditVerdict:
    """Predetermined-schedule verdict; the history must follow the schedule."""
    check_alpha(alpha)
    if history.rounds == 0:
        raise DomainError("empty history")
    schedule = tuple(schedule)
    j = history.rounds
    if history.cumulative_n != schedule[:j]:
        raise ScheduleViolationError(
            f"history rounds {history.cumulative_n} deviate from schedule {schedule[:j]}"
        )
    chain = PredeterminedChain(schedule[:j], contest, alpha)
    k_j = history.cumulative_k[j - 1]
    n_j = history.cumulative_n[j - 1]
    log_tau = chain.log_tau(j, k_j)
    decision = Decision.CORRECT if log_tau >= -math.log(alpha) else Decision.UNDETERMINED
    return AuditVerdict(
        decision=decision,
        measured_risk=_clamp_risk(log_tau),
        kmin=chain.kmins[j - 1],
        misleading_now=is_misleading_sample(n_j, k_j),
    )


def eor_bravo_kmin(n: int, contest: PairwiseContest, alpha: float) -> int:
    """Smallest tally meeting the pmf likelihood-ratio condition at n.

    The condition is linear in the tally, so this is a ceiling; sentinel
    n + 1 when unattainable.
    """
    check_alpha(alpha)
    a = math.log(contest.p_a / contest.p_0)
    b = math.log1p(-contest.p_0) - math.log1p(-contest.p_a)
    k = math.ceil((-math.log(alpha) + n * b) / (a + b))
    if k > n:
        return n + 1
    return max(k, 0)


def eor_bravo_verdict(
    history: RoundHistory, contest: PairwiseContest, alpha: float
) -> AuditVerdict:
    """End-of-round verdict: the pmf likelihood ratio at each round end,
    decision from the latest round, risk from the best round so far."""
    check_alpha(alpha)
    if history.rounds == 0:
        raise DomainError("empty history")
    p_a, p_0 = contest.p_a, contest.p_0
    best_log = -math.inf
    for n, k in zip(history.cumulative_n, history.cumulative_k):
        best_log = max(best_log, sigma(k, p_a, p_0, n))
    j = history.rounds
    n_j, k_j = history.cumulative_n[j - 1], history.cumulative_k[j - 1]
    latest = sigma(k_j, p_a, p_0, n_j)
    decision = Decision.CORRECT if latest >= -math.log(alpha) else Decision.UNDETERMINED
    return AuditVerdict(
        decision=decision,
        measured_risk=_clamp_risk(best_log),
        kmin=eor_bravo_kmin(n_j, contest, alpha),
        misleading_now=is_misleading_sample(n_j, k_j),
    )


def so_bravo_verdict(
    history: RoundHistory, contest: PairwiseContest, alpha: float
) -> AuditVerdict:
    """Selection-ordered verdict: the per-ballot condition applied to
    every prefix of the concatenated order."""
    check_alpha(alpha)
    if history.rounds == 0:
        raise DomainError("empty history")
    if history.selection_order is None:
        raise DomainError("selection-ordered rule requires the selection order")
    p_a, p_0 = contest.p_a, contest.p_0
    a = math.log(p_a / p_0)
    b = math.log1p(-p_0) - math.log1p(-p_a)
    target = -math.log(alpha)
    best_log = -math.inf
    k = 0
    stopped = False
    for m, bit in enumerate(history.concatenated_order(), start=1):
        k += bit
        log_sigma = k * a - (m - k) * b
        best_log = max(best_log, log_sigma)
        if log_sigma >= target:
            stopped = True
    j = history.rounds
    n_j, k_j = history.cumulative_n[j - 1], history.cumulative_k[j - 1]
    return AuditVerdict(
        decision=Decision.CORRECT if stopped else Decision.UNDETERMINED,
        measured_risk=_clamp_risk(best_log),
        kmin=eor_bravo_kmin(n_j, contest, alpha),
        misleading_now=is_misleading_sample(n_j, k_j),
    )


def misleading_sequence_check(so: AuditVerdict, eor: AuditVerdict) -> bool:
    """True when the order stops the per-ballot rule although the final
    cumulative tally fails the end-of-round condition."""
    return so.decision is Decision.CORRECT and eor.decision is Decision.UNDETERMINED


def so_prefix_chart(history: RoundHistory, contest: PairwiseContest, alpha: float) -> dict:
    """Per-prefix cumulative winner tally and per-ballot stopping
    threshold, for plotting a selection order against the rule."""
    check_alpha(alpha)
    if history.selection_order is None:
        raise DomainError("chart requires the selection order")
    a = math.log(contest.p_a / contest.p_0)
    b = math.log1p(-contest.p_0) - math.log1p(-contest.p_a)
    la = -math.log(alpha)
    tallies = []
    thresholds = []
    k = 0
    for m, bit in enumerate(history.concatenated_order(), start=1):
        k += bit
        tallies.append(k)
        thresholds.append(math.ceil((la + m * b) / (a + b)))
    crossed = [t >= c for t, c in zip(tallies, thresholds)]
    first = crossed.index(True) + 1 if any(crossed) else None
    return {
        "ballot": list(range(1, len(tallies) + 1)),
        "cumulative_winner_tally": tallies,
        "stopping_threshold": thresholds,
        "first_crossing": first,
    }
