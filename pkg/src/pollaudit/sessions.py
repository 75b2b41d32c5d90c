"""Audit-session records, their on-disk JSON store, and the
multi-candidate verdict aggregation used by the service and CLI.

Sessions persist raw tallies as the source of truth; verdicts and plans
are snapshots that must recompute identically on load. Writes are
atomic (temp file + rename) and guarded by a version counter, so a
concurrent stale writer gets a conflict instead of silently winning.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .contest import Decision, PairwiseContest, RoundHistory
from .election import ContestResults
from .errors import DomainError, IntegrityError, VersionConflictError
from .rules import (
    eor_bravo_verdict,
    minerva_verdict,
    providence_verdict,
    so_bravo_verdict,
)

SCHEMA_VERSION = 1

STATUS_OPEN = "Open"
STATUS_STOPPED = "Stopped-Correct"
STATUS_ESCALATED = "Escalated-FullCount"
STATUS_ABANDONED = "Abandoned"
STATUSES = (STATUS_OPEN, STATUS_STOPPED, STATUS_ESCALATED, STATUS_ABANDONED)

AUDIT_KINDS = ("providence", "minerva", "eor_bravo", "so_bravo")


@dataclass
class RoundRecord:
    round_index: int
    cumulative_n: int  # full-sample cumulative draws
    tallies: dict[str, int]  # cumulative per-candidate tallies
    selection_order: list[int] | None = None  # marginal winner bits, two-candidate only
    verdict: dict | None = None  # snapshot, recomputed on load
    plan: dict | None = None  # snapshot of the plan that chose this round
    correction: bool = False

    def to_dict(self) -> dict:
        return {
            "round_index": self.round_index,
            "cumulative_n": self.cumulative_n,
            "tallies": dict(self.tallies),
            "selection_order": self.selection_order,
            "verdict": self.verdict,
            "plan": self.plan,
            "correction": self.correction,
        }

    @staticmethod
    def from_dict(d: dict) -> "RoundRecord":
        return RoundRecord(
            round_index=d["round_index"],
            cumulative_n=d["cumulative_n"],
            tallies={str(k): int(v) for k, v in d["tallies"].items()},
            selection_order=d.get("selection_order"),
            verdict=d.get("verdict"),
            plan=d.get("plan"),
            correction=d.get("correction", False),
        )


@dataclass
class AuditSessionRecord:
    session_id: str
    contest_id: str
    alpha: float
    audit_kind: str
    seed: int
    created_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
    )
    rounds: list[RoundRecord] = field(default_factory=list)
    status: str = STATUS_OPEN
    version: int = 0
    schema_version: int = SCHEMA_VERSION
    # full-sample cumulative sizes fixed at creation (predetermined-schedule
    # audits only); submitted rounds must match it exactly
    schedule: list[int] | None = None

    def __post_init__(self):
        if self.audit_kind not in AUDIT_KINDS:
            raise DomainError(f"unknown audit kind {self.audit_kind!r}")
        if self.status not in STATUSES:
            raise DomainError(f"unknown status {self.status!r}")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("risk limit must be in (0,1)")
        if self.schedule is not None:
            if self.audit_kind != "minerva":
                raise DomainError("only predetermined-schedule audits take a schedule")
            if any(b <= a for a, b in zip([0] + list(self.schedule), self.schedule)):
                raise DomainError("schedule must be strictly increasing")

    def effective_rounds(self) -> list[RoundRecord]:
        """Latest record per round index (corrections supersede)."""
        latest: dict[int, RoundRecord] = {}
        for rec in self.rounds:
            latest[rec.round_index] = rec
        return [latest[i] for i in sorted(latest)]

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "session_id": self.session_id,
            "contest_id": self.contest_id,
            "alpha": self.alpha,
            "audit_kind": self.audit_kind,
            "seed": self.seed,
            "created_at": self.created_at,
            "status": self.status,
            "version": self.version,
            "schedule": self.schedule,
            "rounds": [r.to_dict() for r in self.rounds],
        }

    @staticmethod
    def from_dict(d: dict) -> "AuditSessionRecord":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise IntegrityError(f"unsupported schema_version {d.get('schema_version')!r}")
        return AuditSessionRecord(
            session_id=d["session_id"],
            contest_id=d["contest_id"],
            alpha=d["alpha"],
            audit_kind=d["audit_kind"],
            seed=d["seed"],
            created_at=d["created_at"],
            rounds=[RoundRecord.from_dict(r) for r in d["rounds"]],
            status=d["status"],
            version=d["version"],
            schedule=d.get("schedule"),
        )


def pairwise_history(
    results: ContestResults, rounds: list[RoundRecord], loser: str
) -> RoundHistory:
    """Pair-relevant history (winner + one loser) from per-candidate
    cumulative tallies; selection order carries over only when the
    contest has exactly two candidates."""
    ns, ks = [], []
    orders = []
    have_order = True
    for rec in rounds:
        w = rec.tallies.get(results.reported_winner, 0)
        l = rec.tallies.get(loser, 0)
        ns.append(w + l)
        ks.append(w)
        if rec.selection_order is None:
            have_order = False
        else:
            orders.append(tuple(rec.selection_order))
    order = tuple(orders) if (have_order and len(results.tallies) == 2 and orders) else None
    try:
        return RoundHistory(tuple(ns), tuple(ks), order)
    except DomainError as exc:
        raise DomainError(f"pair vs {loser!r}: {exc}") from exc


def validate_rounds(results: ContestResults, rounds: list[RoundRecord]) -> None:
    """Structural invariants of a round sequence against its contest."""
    prev_n = 0
    prev_tallies: dict[str, int] = {}
    for rec in rounds:
        if rec.cumulative_n <= prev_n:
            raise DomainError(
                f"round {rec.round_index}: cumulative_n must be strictly increasing"
            )
        unknown = set(rec.tallies) - set(results.tallies)
        if unknown:
            raise DomainError(f"round {rec.round_index}: unknown candidates {sorted(unknown)}")
        if any(v < 0 for v in rec.tallies.values()):
            raise DomainError(f"round {rec.round_index}: negative tally")
        if sum(rec.tallies.values()) > rec.cumulative_n:
            raise DomainError(f"round {rec.round_index}: tallies exceed cumulative_n")
        for cand, v in rec.tallies.items():
            if v < prev_tallies.get(cand, 0):
                raise DomainError(
                    f"round {rec.round_index}: cumulative tally for {cand!r} decreased"
                )
        prev_n = rec.cumulative_n
        prev_tallies = rec.tallies
    if rounds and sum(rounds[-1].tallies.values()) > results.total_ballots_cast:
        raise DomainError("sampled tallies exceed total ballots cast")


def round_verdicts(
    results: ContestResults,
    audit_kind: str,
    alpha: float,
    rounds: list[RoundRecord],
) -> dict:
    """Verdict snapshot for the latest of the given rounds.

    Every pairwise test must pass for the audit to stop; the reported
    risk is the worst pairwise risk.
    """
    if not rounds:
        raise DomainError("no rounds submitted")
    pairwise = []
    all_correct = True
    worst_risk = 0.0
    for loser in results.losers():
        w = results.tallies[results.reported_winner]
        l = results.tallies[loser]
        contest = PairwiseContest.from_tallies(w, l, results.total_ballots_cast)
        history = pairwise_history(results, rounds, loser)
        if history.cumulative_n and history.cumulative_n[-1] == 0:
            raise DomainError(f"pair vs {loser!r} has an empty sample")
        if audit_kind == "providence":
            v = providence_verdict(history, contest, alpha)
        elif audit_kind == "minerva":
            v = minerva_verdict(history, contest, alpha, history.cumulative_n)
        elif audit_kind == "eor_bravo":
            v = eor_bravo_verdict(history, contest, alpha)
        else:
            v = so_bravo_verdict(history, contest, alpha)
        pairwise.append(
            {
                "loser": loser,
                "decision": v.decision.value,
                "measured_risk": v.measured_risk,
                "kmin": v.kmin,
                "misleading_now": v.misleading_now,
                "pair_cumulative_n": history.cumulative_n[-1],
                "pair_cumulative_k": history.cumulative_k[-1],
            }
        )
        all_correct &= v.decision is Decision.CORRECT
        worst_risk = max(worst_risk, v.measured_risk)
    return {
        "decision": Decision.CORRECT.value if all_correct else Decision.UNDETERMINED.value,
        "measured_risk": worst_risk,
        "misleading_now": any(p["misleading_now"] for p in pairwise),
        "pairwise": pairwise,
    }


def session_plan(
    results: ContestResults,
    rounds: list[RoundRecord],
    alpha: float,
    target_p: float | None,
    misleading_limit: float | None,
    max_n: int,
) -> dict:
    """Next full-sample round size for a session, honoring the target
    stopping probability and, on the first round, the misleading limit.

    Reports which constraint binds and the binding pair's threshold and
    stopping probability.
    """
    from math import ceil

    from .planner import (
        misleading_min_round_size,
        misleading_sample_prob,
        next_round_size,
        round_stop_prob,
    )
    from .rules import providence_kmin

    if target_p is None and misleading_limit is None:
        raise DomainError("plan needs target_p and/or misleading_limit")
    first_round = not rounds
    if target_p is None and not first_round:
        raise DomainError("the misleading limit constrains the first round only; "
                          "later plans need target_p")
    pairs = []
    for loser in results.losers():
        w = results.tallies[results.reported_winner]
        l = results.tallies[loser]
        contest = PairwiseContest.from_tallies(w, l, results.total_ballots_cast)
        history = pairwise_history(results, rounds, loser) if rounds else None
        pairs.append((loser, contest, history))

    best: dict | None = None
    for loser, contest, history in pairs:
        n_prev = history.cumulative_n[-1] if history else 0
        k_prev = history.cumulative_k[-1] if history else 0
        target_pair_n = None
        binding = None
        if target_p is not None:
            plan = next_round_size(history, contest, alpha, target_p, max_n)
            target_pair_n = plan.cumulative_n
            binding = "target_p"
        if misleading_limit is not None and first_round:
            limit_n = misleading_min_round_size(contest, misleading_limit, max_n)
            if target_pair_n is None or limit_n > target_pair_n:
                target_pair_n = max(limit_n, target_pair_n or 0)
                binding = "misleading_limit" if (target_pair_n == limit_n) else binding
        full_n = ceil(target_pair_n / contest.relevant_fraction)
        kmin = providence_kmin(k_prev, n_prev, target_pair_n, contest, alpha)
        stop_prob = round_stop_prob(k_prev, n_prev, target_pair_n, contest, alpha)
        entry = {
            "loser": loser,
            "pair_cumulative_n": target_pair_n,
            "cumulative_n": full_n,
            "kmin": kmin,
            "stop_prob": stop_prob,
            "misleading_prob": (
                misleading_sample_prob(target_pair_n, contest) if first_round else None
            ),
            "binding_constraint": binding,
        }
        if best is None or entry["cumulative_n"] > best["cumulative_n"]:
            best = entry
    assert best is not None
    out = dict(best)
    out["first_round"] = first_round
    return out


class SessionStore:
    """One JSON document per session under a data directory."""

    def __init__(self, data_dir: str | Path):
        self.dir = Path(data_dir)
        self.dir.mkdir(parents=True, exist_ok=True)

    def _path(self, session_id: str) -> Path:
        safe = session_id.replace("/", "_")
        return self.dir / f"session-{safe}.json"

    def list_ids(self) -> list[str]:
        return sorted(
            p.name[len("session-") : -len(".json")] for p in self.dir.glob("session-*.json")
        )

    def exists(self, session_id: str) -> bool:
        return self._path(session_id).exists()

    def save(self, record: AuditSessionRecord) -> AuditSessionRecord:
        """Persist with an incremented version; stale writers conflict."""
        path = self._path(record.session_id)
        if path.exists():
            with open(path, encoding="utf-8") as f:
                current = json.load(f)["version"]
            if record.version != current:
                raise VersionConflictError(
                    f"session {record.session_id}: stored version {current}, "
                    f"writer has {record.version}"
                )
        elif record.version != 0:
            raise VersionConflictError(
                f"session {record.session_id}: new session must start at version 0"
            )
        record.version += 1
        payload = json.dumps(record.to_dict(), indent=2)
        fd, tmp = tempfile.mkstemp(dir=self.dir, prefix=".session-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                f.write(payload)
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
        return record

    def load_raw(self, session_id: str) -> AuditSessionRecord:
        path = self._path(session_id)
        if not path.exists():
            raise KeyError(session_id)
        with open(path, encoding="utf-8") as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as exc:
                raise IntegrityError(f"session {session_id}: malformed JSON: {exc}") from exc
        return AuditSessionRecord.from_dict(data)

    def load(self, session_id: str, results: ContestResults) -> AuditSessionRecord:
        """Load and revalidate: tallies must form a legal history and
        every verdict snapshot must recompute identically."""
        record = self.load_raw(session_id)
        rounds = record.effective_rounds()
        try:
            validate_rounds(results, rounds)
        except DomainError as exc:
            raise IntegrityError(f"session {session_id}: {exc}") from exc
        for j in range(1, len(rounds) + 1):
            prefix = rounds[:j]
            try:
                recomputed = round_verdicts(results, record.audit_kind, record.alpha, prefix)
            except DomainError as exc:
                raise IntegrityError(
                    f"session {session_id} round {prefix[-1].round_index}: "
                    f"stored tallies violate history invariants: {exc}"
                ) from exc
            stored = prefix[-1].verdict
            if stored is not None and stored != recomputed:
                raise IntegrityError(
                    f"session {session_id} round {prefix[-1].round_index}: "
                    "stored verdict does not recompute from stored tallies"
                )
        return record


class ContestStore:
    """Stored contests: results CSV plus optional manifest CSV."""

    def __init__(self, data_dir: str | Path):
        self.dir = Path(data_dir)
        self.dir.mkdir(parents=True, exist_ok=True)

    def _path(self, contest_id: str) -> Path:
        return self.dir / f"contest-{contest_id.replace('/', '_')}.json"

    def exists(self, contest_id: str) -> bool:
        return self._path(contest_id).exists()

    def list_ids(self) -> list[str]:
        return sorted(
            p.name[len("contest-") : -len(".json")] for p in self.dir.glob("contest-*.json")
        )

    def save(self, contest_id: str, results_csv: str, manifest_csv: str | None) -> None:
        path = self._path(contest_id)
        payload = json.dumps(
            {"contest_id": contest_id, "results_csv": results_csv, "manifest_csv": manifest_csv},
            indent=2,
        )
        fd, tmp = tempfile.mkstemp(dir=self.dir, prefix=".contest-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                f.write(payload)
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)

    def load(self, contest_id: str) -> tuple[str, str | None]:
        path = self._path(contest_id)
        if not path.exists():
            raise KeyError(contest_id)
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        return data["results_csv"], data.get("manifest_csv")
