"""JSON-over-HTTP facade: contests, live audit sessions, planning, risk
computation, background simulations, and workload sweeps.

Handlers contain no statistical arithmetic; every number in a response
comes from a library call, so service results match CLI results
bit for bit on the same inputs.
"""

from __future__ import annotations

import hashlib
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from fastapi import Depends, FastAPI, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .election import (
    BallotManifest,
    ContestResults,
    derive_pairwise,
    draw_sample,
    parse_manifest,
    parse_results,
    serialize_results,
)
from .errors import (
    CapacityError,
    DomainError,
    IntegrityError,
    ParseError,
    PollAuditError,
    ScheduleViolationError,
    VersionConflictError,
)
from .planner import DEFAULT_MAX_N
from .sessions import (
    STATUS_OPEN,
    STATUS_STOPPED,
    STATUSES,
    AuditSessionRecord,
    ContestStore,
    RoundRecord,
    SessionStore,
    round_verdicts,
    session_plan,
)
from .simulate import (
    AuditKind,
    Hypothesis,
    Predetermined,
    TargetP,
    TrialPolicy,
    run_trials,
)


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details: dict | None = None):
        self.status = status
        self.code = code
        self.message = message
        self.details = details or {}


_ERROR_MAP: list[tuple[type, int, str]] = [
    (VersionConflictError, 409, "version_conflict"),
    (ScheduleViolationError, 422, "schedule_violation"),
    (CapacityError, 422, "capacity_exceeded"),
    (ParseError, 400, "parse_error"),
    (DomainError, 400, "validation_error"),
    (IntegrityError, 500, "integrity_error"),
]


def _to_api_error(exc: Exception) -> ApiError:
    for etype, status, code in _ERROR_MAP:
        if isinstance(exc, etype):
            details = {}
            if isinstance(exc, CapacityError) and exc.best_plan is not None:
                plan = exc.best_plan
                details["best_plan"] = {
                    "cumulative_n": plan.cumulative_n,
                    "kmin": plan.kmin,
                    "stop_prob": plan.stop_prob,
                    "misleading_prob": plan.misleading_prob,
                }
            return ApiError(status, code, str(exc), details)
    if isinstance(exc, PollAuditError):
        return ApiError(400, "validation_error", str(exc))
    raise exc


class ContestBody(BaseModel):
    contest_id: str = Field(min_length=1)
    results_csv: str
    manifest_csv: str | None = None


class AuditBody(BaseModel):
    contest_id: str
    alpha: float
    audit_kind: str
    seed: int = 0
    schedule: list[int] | None = None


class PlanBody(BaseModel):
    target_p: float | None = None
    misleading_limit: float | None = None
    max_n: int = DEFAULT_MAX_N


class RoundBody(BaseModel):
    cumulative_n: int
    cumulative_k: int | None = None
    tallies: dict[str, int] | None = None
    selection_order: list[int] | None = None
    correction_of: int | None = None
    version: int | None = None


class StatusBody(BaseModel):
    status: str
    version: int | None = None


class SimulationBody(BaseModel):
    contest_id: str | None = None
    margin: float | None = None
    relevant_fraction: float = 1.0
    audit_kind: str = "providence"
    hypothesis: str = "alt"
    target_p: float | None = 0.9
    schedule: list[int] | None = None
    trials: int = 1000
    seed: int = 0
    max_rounds: int = 5
    alpha: float = 0.1


class _Jobs:
    def __init__(self, cache_dir: Path, workers: int = 2):
        self.cache_dir = cache_dir
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.pool = ThreadPoolExecutor(max_workers=workers)
        self.lock = threading.Lock()
        self.status: dict[str, str] = {}
        self.errors: dict[str, str] = {}

    def job_id(self, body: dict) -> str:
        canon = json.dumps(body, sort_keys=True)
        return hashlib.blake2b(canon.encode(), digest_size=12).hexdigest()

    def result_path(self, job_id: str) -> Path:
        return self.cache_dir / f"{job_id}.json"

    def submit(self, body: dict, fn) -> str:
        job_id = self.job_id(body)
        path = self.result_path(job_id)
        with self.lock:
            if path.exists() or self.status.get(job_id) in ("pending", "running"):
                return job_id
            self.status[job_id] = "pending"

        def work():
            with self.lock:
                self.status[job_id] = "running"
            try:
                result = fn()
                tmp = path.with_suffix(".tmp")
                tmp.write_text(json.dumps(result, indent=2))
                tmp.replace(path)
                with self.lock:
                    self.status[job_id] = "done"
            except Exception as exc:  # surfaced via GET
                with self.lock:
                    self.status[job_id] = "error"
                    self.errors[job_id] = f"{type(exc).__name__}: {exc}"

        self.pool.submit(work)
        return job_id

    def peek(self, job_id: str) -> dict:
        path = self.result_path(job_id)
        if path.exists():
            return {"status": "done", "result": json.loads(path.read_text())}
        with self.lock:
            status = self.status.get(job_id)
            err = self.errors.get(job_id)
        if status is None:
            raise KeyError(job_id)
        out = {"status": status}
        if err:
            out["error"] = err
        return out


def _session_view(record: AuditSessionRecord) -> dict:
    return record.to_dict()


def create_app(data_dir: str | Path, token: str | None = None) -> FastAPI:
    app = FastAPI(title="pollaudit service", version="0.1.0")
    data_dir = Path(data_dir)
    contests = ContestStore(data_dir)
    sessions = SessionStore(data_dir)
    jobs = _Jobs(data_dir / "simulations")
    lock = threading.Lock()  # serializes session mutation per process

    def auth(request: Request) -> None:
        if token is None or request.method in ("GET", "HEAD", "OPTIONS"):
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise ApiError(401, "unauthorized", "missing or invalid bearer token")

    @app.exception_handler(ApiError)
    async def on_api_error(_req, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "details": exc.details},
        )

    @app.exception_handler(PollAuditError)
    async def on_lib_error(_req, exc: PollAuditError):
        return await on_api_error(_req, _to_api_error(exc))

    def load_results(contest_id: str) -> tuple[ContestResults, BallotManifest | None]:
        try:
            results_csv, manifest_csv = contests.load(contest_id)
        except KeyError:
            raise ApiError(404, "not_found", f"unknown contest {contest_id!r}") from None
        results = parse_results(results_csv, contest_id)
        manifest = parse_manifest(manifest_csv) if manifest_csv else None
        return results, manifest

    def load_session(session_id: str) -> tuple[AuditSessionRecord, ContestResults, BallotManifest | None]:
        try:
            record = sessions.load_raw(session_id)
        except KeyError:
            raise ApiError(404, "not_found", f"unknown audit session {session_id!r}") from None
        results, manifest = load_results(record.contest_id)
        return record, results, manifest

    def contest_view(results: ContestResults, manifest: BallotManifest | None) -> dict:
        return {
            "contest_id": results.contest_id,
            "tallies": results.tallies,
            "total_ballots_cast": results.total_ballots_cast,
            "reported_winner": results.reported_winner,
            "results_csv": serialize_results(results),
            "has_manifest": manifest is not None,
            "pairwise": [
                {
                    "loser": loser,
                    "margin": pc.margin,
                    "p_a": pc.p_a,
                    "relevant_fraction": pc.relevant_fraction,
                }
                for loser, pc in zip(results.losers(), derive_pairwise(results))
            ],
        }

    @app.get("/spec")
    async def spec():
        return app.openapi()

    @app.post("/contests", status_code=201, dependencies=[Depends(auth)])
    async def post_contest(body: ContestBody):
        if contests.exists(body.contest_id):
            raise ApiError(409, "conflict", f"contest {body.contest_id!r} already exists")
        results = parse_results(body.results_csv, body.contest_id)
        manifest = parse_manifest(body.manifest_csv) if body.manifest_csv else None
        if manifest is not None and manifest.total() != results.total_ballots_cast:
            raise ApiError(
                400,
                "validation_error",
                f"manifest total {manifest.total()} != total ballots cast "
                f"{results.total_ballots_cast}",
            )
        contests.save(body.contest_id, body.results_csv, body.manifest_csv)
        return contest_view(results, manifest)

    @app.get("/contests/{contest_id}")
    async def get_contest(contest_id: str):
        results, manifest = load_results(contest_id)
        return contest_view(results, manifest)

    @app.post("/audits", status_code=201, dependencies=[Depends(auth)])
    async def post_audit(body: AuditBody):
        results, _ = load_results(body.contest_id)
        session_id = f"{body.contest_id}-{body.audit_kind}-{body.seed}"
        if sessions.exists(session_id):
            raise ApiError(409, "conflict", f"audit session {session_id!r} already exists")
        record = AuditSessionRecord(
            session_id=session_id,
            contest_id=body.contest_id,
            alpha=body.alpha,
            audit_kind=body.audit_kind,
            seed=body.seed,
            schedule=body.schedule,
        )
        with lock:
            sessions.save(record)
        return _session_view(record)

    @app.get("/audits/{session_id}")
    async def get_audit(session_id: str):
        record, _results, _ = load_session(session_id)
        return _session_view(record)

    @app.post("/audits/{session_id}/plan", dependencies=[Depends(auth)])
    async def post_plan(session_id: str, body: PlanBody):
        record, results, _ = load_session(session_id)
        if record.status != STATUS_OPEN:
            raise ApiError(400, "validation_error", f"session is {record.status}")
        plan = session_plan(
            results,
            record.effective_rounds(),
            record.alpha,
            body.target_p,
            body.misleading_limit,
            body.max_n,
        )
        with lock:
            rec = sessions.load_raw(session_id)
            if rec.rounds:
                rec.rounds[-1].plan = plan
                sessions.save(rec)
        return plan

    @app.post("/audits/{session_id}/rounds", dependencies=[Depends(auth)])
    async def post_round(session_id: str, body: RoundBody):
        with lock:
            record, results, _ = load_session(session_id)
            if record.status != STATUS_OPEN:
                raise ApiError(400, "validation_error", f"session is {record.status}")
            if body.version is not None and body.version != record.version:
                raise ApiError(
                    409,
                    "version_conflict",
                    f"stored version {record.version}, submission has {body.version}",
                )
            if body.tallies is not None:
                tallies = {str(c): int(v) for c, v in body.tallies.items()}
            elif body.cumulative_k is None and body.selection_order is not None:
                if len(results.tallies) != 2:
                    raise ApiError(
                        400,
                        "validation_error",
                        "selection-order-only submission needs a two-candidate contest",
                    )
                effective_prev = record.effective_rounds()
                prev = effective_prev[-1].tallies if effective_prev else {}
                loser = results.losers()[0]
                winner = results.reported_winner
                marginal_k = sum(1 for b in body.selection_order if b == 1)
                marginal_l = len(body.selection_order) - marginal_k
                tallies = {
                    winner: prev.get(winner, 0) + marginal_k,
                    loser: prev.get(loser, 0) + marginal_l,
                }
            elif body.cumulative_k is not None:
                if len(results.tallies) != 2:
                    raise ApiError(
                        400,
                        "validation_error",
                        "cumulative_k shorthand needs a two-candidate contest",
                    )
                loser = results.losers()[0]
                tallies = {
                    results.reported_winner: body.cumulative_k,
                    loser: body.cumulative_n - body.cumulative_k,
                }
            else:
                raise ApiError(400, "validation_error", "round needs tallies or cumulative_k")
            if sum(tallies.values()) > body.cumulative_n:
                raise ApiError(400, "validation_error", "tallies exceed cumulative_n")
            unknown = set(tallies) - set(results.tallies)
            if unknown:
                raise ApiError(400, "validation_error", f"unknown candidates {sorted(unknown)}")

            effective = record.effective_rounds()
            if record.schedule is not None and body.correction_of is None:
                idx = len(effective)
                if idx >= len(record.schedule) or body.cumulative_n != record.schedule[idx]:
                    raise ApiError(
                        422,
                        "schedule_violation",
                        f"round {idx + 1} must draw to cumulative size "
                        f"{record.schedule[idx] if idx < len(record.schedule) else 'n/a'} "
                        f"per the predetermined schedule, got {body.cumulative_n}",
                    )
            if body.correction_of is not None:
                if body.correction_of < 1 or body.correction_of > len(effective):
                    raise ApiError(400, "validation_error", "correction_of out of range")
                round_index = body.correction_of
            else:
                round_index = len(effective) + 1
            rec = RoundRecord(
                round_index=round_index,
                cumulative_n=body.cumulative_n,
                tallies=tallies,
                selection_order=body.selection_order,
                correction=body.correction_of is not None,
            )
            trial = {r.round_index: r for r in record.rounds}
            trial[round_index] = rec
            ordered = [trial[i] for i in sorted(trial)]
            prev_full = 0
            for r in ordered:
                if r.cumulative_n <= prev_full:
                    raise ApiError(
                        400, "validation_error", "cumulative_n must be strictly increasing"
                    )
                prev_full = r.cumulative_n
            verdict = round_verdicts(results, record.audit_kind, record.alpha, ordered)
            rec.verdict = verdict
            so_chart = None
            if body.selection_order is not None and len(results.tallies) == 2:
                from .rules import so_prefix_chart
                from .sessions import pairwise_history

                loser = results.losers()[0]
                contest = derive_pairwise(results)[0]
                history = pairwise_history(results, ordered, loser)
                so_chart = so_prefix_chart(history, contest, record.alpha)
            record.rounds.append(rec)
            if verdict["decision"] == "Correct":
                record.status = STATUS_STOPPED
            sessions.save(record)
        out = {"verdict": verdict, "session": _session_view(record)}
        if so_chart is not None:
            out["so_chart"] = so_chart
        return out

    @app.post("/audits/{session_id}/status", dependencies=[Depends(auth)])
    async def post_status(session_id: str, body: StatusBody):
        with lock:
            record, _results, _ = load_session(session_id)
            if body.status not in STATUSES:
                raise ApiError(400, "validation_error", f"unknown status {body.status!r}")
            if body.version is not None and body.version != record.version:
                raise ApiError(409, "version_conflict", "stale version")
            if record.status != STATUS_OPEN and body.status != record.status:
                raise ApiError(400, "validation_error", f"session already {record.status}")
            record.status = body.status
            sessions.save(record)
        return _session_view(record)

    @app.get("/audits/{session_id}/sample")
    async def get_sample(session_id: str, count: int = Query(ge=1)):
        record, results, manifest = load_session(session_id)
        if manifest is None:
            raise ApiError(400, "validation_error", "contest has no ballot manifest")
        effective = record.effective_rounds()
        already = effective[-1].cumulative_n if effective else 0
        draws = draw_sample(manifest, count, record.seed, already)
        return {
            "already_drawn": already,
            "draws": [
                {"county": county, "container": container, "position": pos}
                for county, container, pos in draws
            ],
        }

    @app.post("/simulations", status_code=202, dependencies=[Depends(auth)])
    async def post_simulation(body: SimulationBody):
        if body.contest_id is not None:
            results, _ = load_results(body.contest_id)
            contest = derive_pairwise(results)[0]
        elif body.margin is not None:
            from .contest import PairwiseContest

            contest = PairwiseContest(body.margin, body.relevant_fraction)
        else:
            raise ApiError(400, "validation_error", "simulation needs contest_id or margin")
        kind = AuditKind(body.audit_kind)
        hypothesis = Hypothesis.ALT if body.hypothesis == "alt" else Hypothesis.NULL
        if body.schedule:
            schedule: TargetP | Predetermined = Predetermined(tuple(body.schedule))
        elif body.target_p is not None:
            schedule = TargetP(body.target_p)
        else:
            raise ApiError(400, "validation_error", "simulation needs target_p or schedule")
        policy = TrialPolicy(kind, schedule, body.max_rounds, hypothesis)
        payload = body.model_dump()

        def work():
            report = run_trials(contest, policy, body.alpha, body.trials, body.seed)
            return report.to_dict()

        job_id = jobs.submit(payload, work)
        return {"job_id": job_id}

    @app.get("/simulations/{job_id}")
    async def get_simulation(job_id: str):
        try:
            return jobs.peek(job_id)
        except KeyError:
            raise ApiError(404, "not_found", f"unknown job {job_id!r}") from None

    return app
