"""Session records, persistence, integrity revalidation, planning."""

import json

import pytest

from pollaudit.election import parse_results
from pollaudit.errors import DomainError, IntegrityError, VersionConflictError
from pollaudit.sessions import (
    STATUS_STOPPED,
    AuditSessionRecord,
    RoundRecord,
    SessionStore,
    pairwise_history,
    round_verdicts,
    session_plan,
)

PILOT_CSV = "candidate,votes\nYes,12567\nNo,7433\n_total_ballots_cast,20000\n"
THREE_WAY = "candidate,votes\nAda,6000\nBen,3000\nCy,1000\n_total_ballots_cast,10000\n"


def pilot_results():
    return parse_results(PILOT_CSV, "pilot")


def make_record(**kw):
    defaults = dict(
        session_id="s1", contest_id="pilot", alpha=0.1, audit_kind="providence", seed=3
    )
    defaults.update(kw)
    return AuditSessionRecord(**defaults)


class TestRoundVerdicts:
    def test_two_candidate_round(self):
        results = pilot_results()
        rounds = [RoundRecord(1, 140, {"Yes": 81, "No": 59})]
        verdict = round_verdicts(results, "providence", 0.1, rounds)
        assert verdict["decision"] == "Correct"
        assert abs(verdict["measured_risk"] - 0.0418) <= 0.0005

    def test_three_candidate_conjunction(self):
        results = parse_results(THREE_WAY, "three")
        # strong vs Cy, weak vs Ben: combined verdict must not stop
        rounds = [RoundRecord(1, 100, {"Ada": 40, "Ben": 38, "Cy": 2})]
        verdict = round_verdicts(results, "providence", 0.1, rounds)
        assert verdict["decision"] == "Undetermined"
        risks = {p["loser"]: p["measured_risk"] for p in verdict["pairwise"]}
        assert verdict["measured_risk"] == max(risks.values())

    def test_selection_order_flows_to_pairwise_history(self):
        results = pilot_results()
        order = [1, 1, 1, 0]
        rounds = [RoundRecord(1, 4, {"Yes": 3, "No": 1}, selection_order=order)]
        history = pairwise_history(results, rounds, "No")
        assert history.selection_order == ((1, 1, 1, 0),)


class TestSessionPlan:
    def test_first_round_target(self):
        results = pilot_results()
        plan = session_plan(results, [], 0.1, 0.95, None, 10**6)
        assert plan["cumulative_n"] == 130
        assert plan["stop_prob"] >= 0.95
        assert plan["binding_constraint"] == "target_p"

    def test_misleading_limit_binds(self):
        results = parse_results(
            "candidate,votes\nA,5250\nB,4750\n_total_ballots_cast,10000\n", "m05"
        )
        plan = session_plan(results, [], 0.1, 0.5, 0.01, 10**6)
        assert plan["pair_cumulative_n"] == 2163
        assert plan["binding_constraint"] == "misleading_limit"

    def test_limit_only_first_round(self):
        results = pilot_results()
        rounds = [RoundRecord(1, 140, {"Yes": 70, "No": 70})]
        with pytest.raises(DomainError):
            session_plan(results, rounds, 0.1, None, 0.01, 10**6)


class TestStore:
    def test_round_trip(self, tmp_path):
        results = pilot_results()
        store = SessionStore(tmp_path)
        record = make_record()
        rounds = [RoundRecord(1, 140, {"Yes": 81, "No": 59})]
        record.rounds = rounds
        record.rounds[0].verdict = round_verdicts(results, "providence", 0.1, rounds)
        store.save(record)
        loaded = store.load("s1", results)
        assert loaded.to_dict() == record.to_dict()

    def test_tampered_tally_fails_integrity(self, tmp_path):
        results = pilot_results()
        store = SessionStore(tmp_path)
        record = make_record()
        record.rounds = [RoundRecord(1, 140, {"Yes": 81, "No": 59})]
        store.save(record)
        path = store._path("s1")
        data = json.loads(path.read_text())
        data["rounds"][0]["tallies"]["Yes"] = 200  # exceeds the round size
        path.write_text(json.dumps(data))
        with pytest.raises(IntegrityError):
            store.load("s1", results)

    def test_cached_risk_mismatch_fails_integrity(self, tmp_path):
        results = pilot_results()
        store = SessionStore(tmp_path)
        record = make_record()
        rounds = [RoundRecord(1, 140, {"Yes": 81, "No": 59})]
        rounds[0].verdict = round_verdicts(results, "providence", 0.1, rounds)
        record.rounds = rounds
        store.save(record)
        path = store._path("s1")
        data = json.loads(path.read_text())
        data["rounds"][0]["verdict"]["measured_risk"] = 0.00001
        path.write_text(json.dumps(data))
        with pytest.raises(IntegrityError):
            store.load("s1", results)

    def test_version_conflict(self, tmp_path):
        store = SessionStore(tmp_path)
        record = make_record()
        store.save(record)  # version -> 1
        stale = make_record()  # version 0 again
        with pytest.raises(VersionConflictError):
            store.save(stale)

    def test_new_session_must_start_at_zero(self, tmp_path):
        store = SessionStore(tmp_path)
        record = make_record(version=5)
        with pytest.raises(VersionConflictError):
            store.save(record)

    def test_corrections_supersede(self, tmp_path):
        results = pilot_results()
        store = SessionStore(tmp_path)
        record = make_record()
        record.rounds = [
            RoundRecord(1, 140, {"Yes": 70, "No": 70}),
            RoundRecord(1, 140, {"Yes": 81, "No": 59}, correction=True),
        ]
        effective = record.effective_rounds()
        assert len(effective) == 1 and effective[0].tallies["Yes"] == 81
        verdict = round_verdicts(results, record.audit_kind, record.alpha, effective)
        assert verdict["decision"] == "Correct"

    def test_status_validation(self):
        with pytest.raises(DomainError):
            make_record(status="Nope")
        record = make_record(status=STATUS_STOPPED)
        assert record.status == STATUS_STOPPED

    def test_schedule_only_for_predetermined(self):
        with pytest.raises(DomainError):
            make_record(schedule=[100, 250])
        record = make_record(audit_kind="minerva", schedule=[100, 250])
        assert record.schedule == [100, 250]
