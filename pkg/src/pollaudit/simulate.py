"""Monte Carlo trials of the four audits under the reported tally or a
tied election, with optional precinct-touch and largest-county
accounting against a ballot manifest.

Each trial consumes only its own (seed, trial, round)-keyed streams, so
results are reproducible and independent of how trials are batched or
parallelized. Round sizes and tally thresholds depend only on the
cumulative (sample size, winner tally) state, so they are memoized
across trials.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .binom import sigma
from .contest import PairwiseContest, RoundHistory
from .election import BallotManifest
from .errors import DomainError
from .planner import (
    eor_next_round_size,
    minerva_schedule,
    next_round_size,
    so_next_round_size,
)
from .rng import derive_seed, position_stream, trial_stream
from .rules import PredeterminedChain, eor_bravo_kmin, providence_kmin


class AuditKind(str, enum.Enum):
    PROVIDENCE = "providence"
    MINERVA = "minerva"
    EOR_BRAVO = "eor_bravo"
    SO_BRAVO = "so_bravo"


class Hypothesis(str, enum.Enum):
    ALT = "alt"
    NULL = "null"


@dataclass(frozen=True)
class TargetP:
    p: float
    minerva_multiplier: float = 1.5


@dataclass(frozen=True)
class Predetermined:
    sizes: tuple[int, ...]


@dataclass(frozen=True)
class Adversarial:
    """Round-size rule with full view of the per-trial history."""

    rule: Callable[[RoundHistory], int]
    name: str = "custom"


@dataclass(frozen=True)
class TrialPolicy:
    audit_kind: AuditKind
    schedule: TargetP | Predetermined | Adversarial
    max_rounds: int = 5
    hypothesis: Hypothesis = Hypothesis.ALT

    def __post_init__(self):
        if self.max_rounds < 1:
            raise DomainError("max_rounds must be >= 1")
        if self.audit_kind is AuditKind.MINERVA and isinstance(self.schedule, Adversarial):
            raise DomainError("the predetermined-schedule rule cannot take adaptive round sizes")


@dataclass(frozen=True)
class LargestCountyStats:
    county: str
    ballots_mean: float
    rounds_mean: float
    precinct_touches_mean: float


@dataclass(frozen=True)
class SimulationReport:
    trials: int
    per_round_stops: tuple[int, ...]
    stop_fraction: float
    total_ballots_mean: float
    rounds_mean: float
    misleading_sample_fraction: float
    misleading_sequence_fraction: float | None
    paired_eor_stop_fraction: float | None
    precinct_touches_mean_per_round: tuple[float, ...] | None
    largest_county: LargestCountyStats | None
    seed: int
    audit_kind: AuditKind
    hypothesis: Hypothesis

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "per_round_stops": list(self.per_round_stops),
            "stop_fraction": self.stop_fraction,
            "total_ballots_mean": self.total_ballots_mean,
            "rounds_mean": self.rounds_mean,
            "misleading_sample_fraction": self.misleading_sample_fraction,
            "misleading_sequence_fraction": self.misleading_sequence_fraction,
            "paired_eor_stop_fraction": self.paired_eor_stop_fraction,
            "precinct_touches_mean_per_round": (
                None
                if self.precinct_touches_mean_per_round is None
                else list(self.precinct_touches_mean_per_round)
            ),
            "largest_county": (
                None
                if self.largest_county is None
                else {
                    "county": self.largest_county.county,
                    "ballots_mean": self.largest_county.ballots_mean,
                    "rounds_mean": self.largest_county.rounds_mean,
                    "precinct_touches_mean": self.largest_county.precinct_touches_mean,
                }
            ),
            "seed": self.seed,
            "audit_kind": self.audit_kind.value,
            "hypothesis": self.hypothesis.value,
        }


@dataclass
class _TrialState:
    """Mutable cumulative state of one live trial."""

    trial: int
    n_pair: int = 0  # cumulative pair-relevant sample size
    k: int = 0  # cumulative winner tally within the pair
    n_full: int = 0  # cumulative full-sample draws
    misleading: bool = False
    history_ns: tuple[int, ...] = ()
    history_ks: tuple[int, ...] = ()


class _PrecinctTracker:
    def __init__(self, manifest: BallotManifest, max_rounds: int, trials: int):
        self.cum = np.cumsum([e.ballot_count for e in manifest.entries])
        self.total = int(self.cum[-1])
        self.touch_sums = np.zeros(max_rounds)
        county_tot: dict[str, int] = {}
        for e in manifest.entries:
            county_tot[e.county] = county_tot.get(e.county, 0) + e.ballot_count
        self.largest = max(county_tot, key=lambda c: (county_tot[c], c))
        self.entry_in_largest = np.array([e.county == self.largest for e in manifest.entries])
        self.lc_ballots = 0.0
        self.lc_rounds = 0.0
        self.lc_touches = 0.0
        self.trials = trials

    def record(self, seed: int, trial: int, round_index: int, draws: int) -> None:
        if draws <= 0:
            return
        gen = position_stream(seed, trial, round_index)
        positions = gen.integers(1, self.total + 1, size=draws)
        entries = np.searchsorted(self.cum, positions, side="left")
        distinct = np.unique(entries)
        self.touch_sums[round_index - 1] += len(distinct)
        in_lc = self.entry_in_largest[entries]
        n_lc = int(in_lc.sum())
        if n_lc:
            self.lc_ballots += n_lc
            self.lc_rounds += 1
            self.lc_touches += len(np.unique(entries[in_lc]))

    def summarize(self) -> tuple[tuple[float, ...], LargestCountyStats]:
        per_round = tuple(self.touch_sums / self.trials)
        stats = LargestCountyStats(
            county=self.largest,
            ballots_mean=self.lc_ballots / self.trials,
            rounds_mean=self.lc_rounds / self.trials,
            precinct_touches_mean=self.lc_touches / self.trials,
        )
        return per_round, stats


class _Engine:
    """Shared planning caches for one run_trials call."""

    def __init__(
        self,
        contest: PairwiseContest,
        policy: TrialPolicy,
        alpha: float,
        max_n: int,
    ):
        self.contest = contest
        self.policy = policy
        self.alpha = alpha
        self.max_n = max_n
        self.size_cache: dict = {}
        self.kmin_cache: dict = {}
        self.minerva_sched: tuple[int, ...] | None = None
        self.chain: PredeterminedChain | None = None
        kind = policy.audit_kind
        if kind is AuditKind.MINERVA:
            if contest.relevant_fraction < 1.0:
                raise DomainError(
                    "predetermined-schedule trials need relevant_fraction 1 "
                    "(realized pairwise sizes would deviate from the schedule)"
                )
            if isinstance(policy.schedule, TargetP):
                first = next_round_size(None, contest, alpha, policy.schedule.p, max_n).cumulative_n
                self.minerva_sched = minerva_schedule(
                    first, policy.schedule.minerva_multiplier, policy.max_rounds
                )
            elif isinstance(policy.schedule, Predetermined):
                self.minerva_sched = tuple(policy.schedule.sizes)
            self.chain = PredeterminedChain(self.minerva_sched, contest, alpha)
        if kind is AuditKind.SO_BRAVO:
            a = math.log(contest.p_a / contest.p_0)
            b = math.log1p(-contest.p_0) - math.log1p(-contest.p_a)
            la = -math.log(alpha)
            self._so_a, self._so_b, self._so_la = a, b, la

    def so_thresholds(self, n_cum: np.ndarray) -> np.ndarray:
        return np.ceil((self._so_la + n_cum * self._so_b) / (self._so_a + self._so_b))

    def next_size(self, st: _TrialState, round_index: int) -> int:
        """Next cumulative pair-relevant round size for one trial state."""
        sched = self.policy.schedule
        kind = self.policy.audit_kind
        if isinstance(sched, Predetermined) and kind is not AuditKind.MINERVA:
            if round_index > len(sched.sizes):
                raise DomainError("predetermined schedule exhausted")
            return sched.sizes[round_index - 1]
        if isinstance(sched, Adversarial):
            n = int(sched.rule(RoundHistory(st.history_ns, st.history_ks)))
            if n <= st.n_pair:
                raise DomainError("adversarial rule must grow the sample")
            return n
        if kind is AuditKind.MINERVA:
            if round_index > len(self.minerva_sched):
                raise DomainError("predetermined schedule exhausted")
            return self.minerva_sched[round_index - 1]
        key = (st.n_pair, st.k)
        hit = self.size_cache.get(key)
        if hit is not None:
            return hit
        p = sched.p
        if kind is AuditKind.PROVIDENCE:
            history = RoundHistory((st.n_pair,), (st.k,)) if st.n_pair else None
            n = next_round_size(history, self.contest, self.alpha, p, self.max_n).cumulative_n
        elif kind is AuditKind.EOR_BRAVO:
            n = eor_next_round_size(st.k, st.n_pair, self.contest, self.alpha, p, self.max_n)
        else:
            n = so_next_round_size(st.k, st.n_pair, self.contest, self.alpha, p, self.max_n)
        self.size_cache[key] = n
        return n

    def tally_threshold(self, st: _TrialState, n_next: int, round_index: int) -> int:
        """Cumulative winner tally needed to stop this round."""
        kind = self.policy.audit_kind
        if kind is AuditKind.MINERVA:
            return self.chain.kmins[round_index - 1]
        if kind is AuditKind.EOR_BRAVO:
            key = n_next
        else:
            key = (st.n_pair, st.k, n_next)
        hit = self.kmin_cache.get(key)
        if hit is not None:
            return hit
        if kind is AuditKind.EOR_BRAVO:
            kmin = eor_bravo_kmin(n_next, self.contest, self.alpha)
        else:
            kmin = providence_kmin(st.k, st.n_pair, n_next, self.contest, self.alpha)
        self.kmin_cache[key] = kmin
        return kmin


def run_trials(
    contest: PairwiseContest,
    policy: TrialPolicy,
    alpha: float,
    trials: int,
    seed: int,
    manifest: BallotManifest | None = None,
    max_n: int = 4_000_000,
) -> SimulationReport:
    """Simulate one audit rule on one pairwise contest.

    When the pair covers only part of the ballots, each round draws
    ceil(marginal / relevant_fraction) full-sample ballots of which a
    binomially distributed number land in the pair; the stopping rule
    sees the realized pair-relevant tallies.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    kind = policy.audit_kind
    p_pair = contest.p_a if policy.hypothesis is Hypothesis.ALT else contest.p_0
    frac = contest.relevant_fraction
    engine = _Engine(contest, policy, alpha, max_n)

    states = [_TrialState(trial=t) for t in range(trials)]
    per_round_stops = [0] * policy.max_rounds
    ballots_total = 0.0
    rounds_total = 0.0
    misleading_count = 0
    so_misleading_seq = 0
    so_paired_eor_stops = 0
    tracker = (
        _PrecinctTracker(manifest, policy.max_rounds, trials) if manifest is not None else None
    )

    for r in range(1, policy.max_rounds + 1):
        if not states:
            break
        survivors: list[_TrialState] = []
        for st in states:
            n_target = engine.next_size(st, r)
            m_pair_planned = n_target - st.n_pair
            m_full = math.ceil(m_pair_planned / frac)
            gen = trial_stream(seed, st.trial, r)
            m_pair = int(gen.binomial(m_full, frac)) if frac < 1.0 else m_pair_planned
            if tracker is not None:
                tracker.record(seed, st.trial, r, m_full)
            st.n_full += m_full
            if m_pair == 0:
                # no ballots landed in the pair; the pairwise test is unchanged
                survivors.append(st)
                continue
            n_next = st.n_pair + m_pair
            stopped = False
            if kind is AuditKind.SO_BRAVO:
                bits = (gen.random(m_pair) < p_pair).astype(np.int64)
                k_prefix = st.k + np.cumsum(bits)
                n_prefix = st.n_pair + np.arange(1, m_pair + 1)
                stopped = bool((k_prefix >= engine.so_thresholds(n_prefix)).any())
                k_new = st.k + int(bits.sum())
            else:
                k_new = st.k + int(gen.binomial(m_pair, p_pair))
                kmin = engine.tally_threshold(st, n_next, r)
                stopped = k_new >= kmin
            st.history_ns += (n_next,)
            st.history_ks += (k_new,)
            st.n_pair = n_next
            st.k = k_new
            if k_new < n_next - k_new:
                st.misleading = True
            if stopped:
                per_round_stops[r - 1] += 1
                ballots_total += st.n_full
                rounds_total += r
                misleading_count += st.misleading
                if kind is AuditKind.SO_BRAVO:
                    eor_ok = sigma(k_new, contest.p_a, contest.p_0, n_next) >= -math.log(alpha)
                    so_paired_eor_stops += eor_ok
                    so_misleading_seq += not eor_ok
            else:
                survivors.append(st)
        states = survivors

    for st in states:  # never stopped within max_rounds
        ballots_total += st.n_full
        rounds_total += policy.max_rounds
        misleading_count += st.misleading

    stops = sum(per_round_stops)
    touches, largest = (None, None)
    if tracker is not None:
        touches, largest = tracker.summarize()
    return SimulationReport(
        trials=trials,
        per_round_stops=tuple(per_round_stops),
        stop_fraction=stops / trials,
        total_ballots_mean=ballots_total / trials,
        rounds_mean=rounds_total / trials,
        misleading_sample_fraction=misleading_count / trials,
        misleading_sequence_fraction=(
            so_misleading_seq / trials if kind is AuditKind.SO_BRAVO else None
        ),
        paired_eor_stop_fraction=(
            so_paired_eor_stops / trials if kind is AuditKind.SO_BRAVO else None
        ),
        precinct_touches_mean_per_round=touches,
        largest_county=largest,
        seed=seed,
        audit_kind=kind,
        hypothesis=policy.hypothesis,
    )


def adversarial_policy_trials(
    contest: PairwiseContest,
    alpha: float,
    rule: Callable[[RoundHistory], int],
    trials: int,
    seed: int,
    max_rounds: int = 5,
    rule_name: str = "custom",
) -> SimulationReport:
    """Null-hypothesis trials of the round-adaptive rule under an
    adversary that picks each next round size after seeing the sample."""
    policy = TrialPolicy(
        audit_kind=AuditKind.PROVIDENCE,
        schedule=Adversarial(rule=rule, name=rule_name),
        max_rounds=max_rounds,
        hypothesis=Hypothesis.NULL,
    )
    return run_trials(contest, policy, alpha, trials, seed)


def precinct_touch_trials(
    manifest: BallotManifest,
    round_sizes: Sequence[Sequence[int]],
    seed: int,
) -> np.ndarray:
    """Distinct containers touched per round for each trial's marginal
    round sizes; rows are trials, columns are rounds."""
    if manifest.total() < 1:
        raise DomainError("manifest is empty")
    max_rounds = max(len(r) for r in round_sizes)
    cum = np.cumsum([e.ballot_count for e in manifest.entries])
    total = int(cum[-1])
    out = np.zeros((len(round_sizes), max_rounds))
    for t, sizes in enumerate(round_sizes):
        for r, m in enumerate(sizes, start=1):
            if m <= 0:
                continue
            gen = position_stream(seed, t, r)
            positions = gen.integers(1, total + 1, size=int(m))
            entries = np.searchsorted(cum, positions, side="left")
            out[t, r - 1] = len(np.unique(entries))
    return out


@dataclass(frozen=True)
class SweepCell:
    audit_kind: AuditKind
    p: float
    report: SimulationReport


def sweep_p(
    contest: PairwiseContest,
    kinds: Sequence[AuditKind],
    p_grid: Sequence[float],
    alpha: float,
    trials: int,
    seed: int,
    manifest: BallotManifest | None = None,
    max_rounds: int = 5,
) -> list[SweepCell]:
    """One report per (rule, target stopping probability) grid cell,
    each on its own derived substream."""
    cells: list[SweepCell] = []
    for ki, kind in enumerate(kinds):
        for pi, p in enumerate(p_grid):
            if not 0.0 < p < 1.0:
                raise DomainError(f"grid p must be in (0,1), got {p}")
            cell_seed = derive_seed(seed, ki, pi)
            policy = TrialPolicy(kind, TargetP(p), max_rounds, Hypothesis.ALT)
            report = run_trials(contest, policy, alpha, trials, cell_seed, manifest)
            cells.append(SweepCell(kind, p, report))
    return cells


SWEEP_CSV_COLUMNS = [
    "kind",
    "p",
    "round",
    "stops",
    "trials",
    "mean_ballots",
    "mean_rounds",
    "misleading_fraction",
    "misleading_sequence_fraction",
    "precinct_touches_mean",
    "largest_county_ballots_mean",
    "largest_county_rounds_mean",
    "largest_county_precinct_touches_mean",
]


def sweep_to_rows(cells: Sequence[SweepCell]) -> list[dict]:
    """Flat per-(cell, round) rows with stable columns for CSV export."""
    rows = []
    for cell in cells:
        rep = cell.report
        for round_index, stops in enumerate(rep.per_round_stops, start=1):
            touches = (
                rep.precinct_touches_mean_per_round[round_index - 1]
                if rep.precinct_touches_mean_per_round is not None
                else ""
            )
            lc = rep.largest_county
            rows.append(
                {
                    "kind": cell.audit_kind.value,
                    "p": cell.p,
                    "round": round_index,
                    "stops": stops,
                    "trials": rep.trials,
                    "mean_ballots": rep.total_ballots_mean,
                    "mean_rounds": rep.rounds_mean,
                    "misleading_fraction": rep.misleading_sample_fraction,
                    "misleading_sequence_fraction": (
                        ""
                        if rep.misleading_sequence_fraction is None
                        else rep.misleading_sequence_fraction
                    ),
                    "precinct_touches_mean": touches,
                    "largest_county_ballots_mean": "" if lc is None else lc.ballots_mean,
                    "largest_county_rounds_mean": "" if lc is None else lc.rounds_mean,
                    "largest_county_precinct_touches_mean": (
                        "" if lc is None else lc.precinct_touches_mean
                    ),
                }
            )
    return rows


def sweep_to_csv(cells: Sequence[SweepCell]) -> str:
    import csv
    import io

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_CSV_COLUMNS)
    writer.writeheader()
    for row in sweep_to_rows(cells):
        writer.writerow(row)
    return buf.getvalue()


def report_to_json(report: SimulationReport) -> str:
    return json.dumps(report.to_dict(), indent=2)
