"""Command-line entry points mirroring the service for batch use.

Exit codes: 0 success, 2 validation error, 3 capacity (target
unattainable within the search cap).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from .contest import PairwiseContest, RoundHistory
from .errors import CapacityError, PollAuditError
from .planner import (
    DEFAULT_MAX_N,
    first_round_stop_probs_at,
    misleading_min_round_size,
    next_round_size,
)
from .rules import (
    eor_bravo_verdict,
    minerva_verdict,
    providence_kmin,
    providence_verdict,
    so_bravo_verdict,
)
from .simulate import (
    AuditKind,
    Hypothesis,
    Predetermined,
    SweepCell,
    TargetP,
    TrialPolicy,
    report_to_json,
    run_trials,
    sweep_p,
    sweep_to_csv,
    sweep_to_rows,
)
from .workload import CostModel, RealTimeParams, WorkloadParams, optimal_p


def _parse_rounds(text: str) -> list[tuple[int, int]]:
    pairs = []
    for part in text.split(","):
        n, _, k = part.partition(":")
        pairs.append((int(n), int(k)))
    return pairs


def _parse_grid(text: str) -> list[float]:
    """Either 'lo:hi:step' or a comma-separated list."""
    if ":" in text:
        lo, hi, step = (float(x) for x in text.split(":"))
        out = []
        p = lo
        while p <= hi + 1e-9:
            out.append(round(p, 10))
            p += step
        return out
    return [float(x) for x in text.split(",")]


def _contest_from_args(args) -> PairwiseContest:
    if getattr(args, "winner_share", None) is not None:
        return PairwiseContest.from_winner_share(args.winner_share, args.relevant_fraction)
    if args.margin is None:
        raise PollAuditError("need --margin or --winner-share")
    return PairwiseContest(args.margin, args.relevant_fraction)


def _history_from_args(args) -> RoundHistory | None:
    if not getattr(args, "rounds", None):
        return None
    pairs = _parse_rounds(args.rounds)
    order = None
    if getattr(args, "order_file", None):
        with open(args.order_file, encoding="utf-8") as f:
            bits = [int(line.strip()) for line in f if line.strip()]
        order = []
        prev_n = 0
        used = 0
        for n, _ in pairs:
            m = n - prev_n
            order.append(tuple(bits[used : used + m]))
            used += m
            prev_n = n
        if used != len(bits):
            raise PollAuditError(
                f"order file has {len(bits)} ballots, history needs {used}"
            )
    return RoundHistory.from_rounds(pairs, order)


def _emit(args, payload: dict | list, table_lines: list[str]) -> None:
    fmt = args.format
    if fmt == "json":
        text = json.dumps(payload, indent=2)
    elif fmt == "csv":
        rows = payload if isinstance(payload, list) else [payload]
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue().rstrip("\n")
    else:
        text = "\n".join(table_lines)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        print(text)


def cmd_risk(args) -> None:
    contest = _contest_from_args(args)
    history = _history_from_args(args)
    if history is None:
        raise PollAuditError("risk needs --rounds")
    kind = AuditKind(args.audit)
    if kind is AuditKind.PROVIDENCE:
        verdict = providence_verdict(history, contest, args.alpha)
    elif kind is AuditKind.MINERVA:
        verdict = minerva_verdict(history, contest, args.alpha, history.cumulative_n)
    elif kind is AuditKind.EOR_BRAVO:
        verdict = eor_bravo_verdict(history, contest, args.alpha)
    else:
        verdict = so_bravo_verdict(history, contest, args.alpha)
    payload = {"audit": kind.value, **verdict.to_dict()}
    _emit(
        args,
        payload,
        [
            f"audit:          {kind.value}",
            f"decision:       {verdict.decision.value}",
            f"measured risk:  {verdict.measured_risk:.6g}",
            f"kmin:           {verdict.kmin}",
            f"misleading now: {verdict.misleading_now}",
        ],
    )


def cmd_kmin(args) -> None:
    contest = _contest_from_args(args)
    history = _history_from_args(args)
    k_prev, n_prev = (0, 0)
    if history is not None:
        k_prev, n_prev = history.cumulative_k[-1], history.cumulative_n[-1]
    kmin = providence_kmin(k_prev, n_prev, args.n, contest, args.alpha)
    payload = {"cumulative_n": args.n, "kmin": kmin, "attainable": kmin <= args.n}
    _emit(args, payload, [f"kmin at n={args.n}: {kmin}" + ("" if kmin <= args.n else " (round cannot stop)")])


def cmd_round_size(args) -> None:
    contest = _contest_from_args(args)
    history = _history_from_args(args)
    plan = next_round_size(history, contest, args.alpha, args.p, args.max_n)
    payload = {
        "cumulative_n": plan.cumulative_n,
        "kmin": plan.kmin,
        "stop_prob": plan.stop_prob,
        "misleading_prob": plan.misleading_prob,
    }
    lines = [
        f"next cumulative round size: {plan.cumulative_n}",
        f"kmin:                       {plan.kmin}",
        f"stopping probability:       {plan.stop_prob:.6g}",
    ]
    if plan.misleading_prob is not None:
        lines.append(f"misleading probability:     {plan.misleading_prob:.6g}")
    _emit(args, payload, lines)


def cmd_misleading(args) -> None:
    contest = _contest_from_args(args)
    n = misleading_min_round_size(contest, args.limit, args.max_n)
    payload = {"min_round_size": n, "limit": args.limit}
    if args.stop_probs:
        probs = first_round_stop_probs_at(n, contest, args.alpha)
        payload["stop_probs"] = {
            "providence": probs.providence,
            "so_bravo": probs.so_bravo,
            "eor_bravo": probs.eor_bravo,
        }
    lines = [f"minimum first round size: {n}"]
    if args.stop_probs:
        lines.append(
            "stop probabilities: providence %.4f, so %.4f, eor %.4f"
            % (probs.providence, probs.so_bravo, probs.eor_bravo)
        )
    _emit(args, payload, lines)


def cmd_simulate(args) -> None:
    contest = _contest_from_args(args)
    kind = AuditKind(args.audit)
    if args.schedule:
        schedule: TargetP | Predetermined = Predetermined(
            tuple(int(x) for x in args.schedule.split(","))
        )
    else:
        schedule = TargetP(args.p)
    policy = TrialPolicy(
        kind,
        schedule,
        args.max_rounds,
        Hypothesis.ALT if args.hypothesis == "alt" else Hypothesis.NULL,
    )
    manifest = None
    if args.manifest:
        from .election import parse_manifest

        with open(args.manifest, encoding="utf-8") as f:
            manifest = parse_manifest(f.read())
    report = run_trials(contest, policy, args.alpha, args.trials, args.seed, manifest)
    payload = report.to_dict()
    if args.format == "json":
        text = report_to_json(report)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as f:
                f.write(text + "\n")
        else:
            print(text)
        return
    _emit(
        args,
        payload,
        [
            f"trials:        {report.trials}",
            f"stop fraction: {report.stop_fraction:.4f}",
            f"per round:     {list(report.per_round_stops)}",
            f"mean ballots:  {report.total_ballots_mean:.1f}",
            f"mean rounds:   {report.rounds_mean:.3f}",
            f"misleading:    {report.misleading_sample_fraction:.4f}",
        ],
    )


def _sweep_cells(args) -> list[SweepCell]:
    contest = _contest_from_args(args)
    kinds = [AuditKind(k.strip()) for k in args.kinds.split(",")]
    grid = _parse_grid(args.grid)
    manifest = None
    if args.manifest:
        from .election import parse_manifest

        with open(args.manifest, encoding="utf-8") as f:
            manifest = parse_manifest(f.read())
    return sweep_p(
        contest, kinds, grid, args.alpha, args.trials, args.seed, manifest, args.max_rounds
    )


def cmd_sweep(args) -> None:
    cells = _sweep_cells(args)
    if args.format == "json":
        payload = [
            {"kind": c.audit_kind.value, "p": c.p, "report": c.report.to_dict()} for c in cells
        ]
        text = json.dumps(payload, indent=2)
    else:
        text = sweep_to_csv(cells).rstrip("\n")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        print(text)


def _cells_from_csv(path: str) -> list[SweepCell]:
    """Rebuild per-cell expectations from the sweep CSV format."""
    from .simulate import LargestCountyStats, SimulationReport

    by_cell: dict[tuple[str, float], dict] = {}
    with open(path, encoding="utf-8") as f:
        for row in csv.DictReader(f):
            key = (row["kind"], float(row["p"]))
            cell = by_cell.setdefault(
                key,
                {
                    "stops": {},
                    "trials": int(row["trials"]),
                    "mean_ballots": float(row["mean_ballots"]),
                    "mean_rounds": float(row["mean_rounds"]),
                    "misleading": float(row["misleading_fraction"]),
                    "touches": {},
                    "lc": None,
                },
            )
            rd = int(row["round"])
            cell["stops"][rd] = int(row["stops"])
            if row.get("precinct_touches_mean"):
                cell["touches"][rd] = float(row["precinct_touches_mean"])
            if row.get("largest_county_ballots_mean"):
                cell["lc"] = LargestCountyStats(
                    county="largest",
                    ballots_mean=float(row["largest_county_ballots_mean"]),
                    rounds_mean=float(row["largest_county_rounds_mean"]),
                    precinct_touches_mean=float(row["largest_county_precinct_touches_mean"]),
                )
    cells = []
    for (kind, p), c in sorted(by_cell.items()):
        rounds = sorted(c["stops"])
        stops = tuple(c["stops"][r] for r in rounds)
        touches = tuple(c["touches"][r] for r in rounds) if c["touches"] else None
        report = SimulationReport(
            trials=c["trials"],
            per_round_stops=stops,
            stop_fraction=sum(stops) / c["trials"],
            total_ballots_mean=c["mean_ballots"],
            rounds_mean=c["mean_rounds"],
            misleading_sample_fraction=c["misleading"],
            misleading_sequence_fraction=None,
            paired_eor_stop_fraction=None,
            precinct_touches_mean_per_round=touches,
            largest_county=c["lc"],
            seed=0,
            audit_kind=AuditKind(kind),
            hypothesis=Hypothesis.ALT,
        )
        cells.append(SweepCell(AuditKind(kind), p, report))
    return cells


def cmd_workload(args) -> None:
    if args.sweep_csv:
        cells = _cells_from_csv(args.sweep_csv)
    else:
        cells = _sweep_cells(args)
    if args.model == "real_time":
        params: WorkloadParams | RealTimeParams = RealTimeParams(
            t_b=args.tb, t_r=args.tr, t_p=args.tp
        )
        model = CostModel.REAL_TIME
    else:
        params = WorkloadParams(w_b=args.wb, w_r=args.wr, w_p=args.wp)
        model = CostModel.PRECINCT if args.wp > 0 else CostModel.WORKLOAD
        if args.model == "precinct":
            model = CostModel.PRECINCT
    best = optimal_p(cells, params, model)
    payload = {
        kind.value: {"p": cell.p, "cost": cell.cost} for kind, cell in sorted(best.items())
    }
    lines = [
        f"{kind.value}: optimal p = {cell.p}, expected cost = {cell.cost:.1f}"
        for kind, cell in sorted(best.items())
    ]
    _emit(args, payload, lines)


def cmd_serve(args) -> None:
    import uvicorn

    from .service import create_app

    host, _, port = args.listen.partition(":")
    app = create_app(args.data_dir, token=args.token)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="warning")


def _add_contest_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--margin", type=float, default=None, help="pairwise margin (w-l)/(w+l)")
    p.add_argument(
        "--winner-share",
        type=float,
        default=None,
        help="winner share among relevant ballots (alternative to --margin)",
    )
    p.add_argument("--relevant-fraction", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.1, help="risk limit")


def _add_common_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["json", "csv", "table"], default="json")
    p.add_argument("--out", default=None, help="write output to a file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pollaudit",
        description="Round-by-round ballot-polling risk-limiting audit toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("risk", help="compute a stopping decision and measured risk")
    _add_contest_flags(p)
    p.add_argument("--audit", choices=[k.value for k in AuditKind], default="providence")
    p.add_argument("--rounds", required=True, help="history as n1:k1,n2:k2,...")
    p.add_argument("--order-file", default=None, help="selection order, one 0/1 per line")
    _add_common_output(p)
    p.set_defaults(fn=cmd_risk)

    p = sub.add_parser("kmin", help="minimum stopping tally for a round")
    _add_contest_flags(p)
    p.add_argument("--rounds", default=None, help="previous history n1:k1,...")
    p.add_argument("--order-file", default=None, help=argparse.SUPPRESS)
    p.add_argument("--n", type=int, required=True, help="next cumulative round size")
    _add_common_output(p)
    p.set_defaults(fn=cmd_kmin)

    p = sub.add_parser("round-size", help="next round size for a target stopping probability")
    _add_contest_flags(p)
    p.add_argument("--rounds", default=None, help="previous history n1:k1,...")
    p.add_argument("--order-file", default=None, help=argparse.SUPPRESS)
    p.add_argument("--p", type=float, required=True, help="target stopping probability")
    p.add_argument("--max-n", type=int, default=DEFAULT_MAX_N)
    _add_common_output(p)
    p.set_defaults(fn=cmd_round_size)

    p = sub.add_parser("misleading", help="minimum first round size for a misleading limit")
    _add_contest_flags(p)
    p.add_argument("--limit", type=float, required=True, help="misleading probability limit")
    p.add_argument("--max-n", type=int, default=DEFAULT_MAX_N)
    p.add_argument("--stop-probs", action="store_true", help="include per-rule stop probabilities")
    _add_common_output(p)
    p.set_defaults(fn=cmd_misleading)

    p = sub.add_parser("simulate", help="Monte Carlo trials of one audit rule")
    _add_contest_flags(p)
    p.add_argument("--audit", choices=[k.value for k in AuditKind], default="providence")
    p.add_argument("--p", type=float, default=0.9, help="target stopping probability per round")
    p.add_argument("--schedule", default=None, help="predetermined cumulative sizes n1,n2,...")
    p.add_argument("--hypothesis", choices=["alt", "null"], default="alt")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-rounds", type=int, default=5)
    p.add_argument("--manifest", default=None, help="ballot manifest CSV for precinct counts")
    _add_common_output(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("sweep", help="stopping-probability grid sweep across audit rules")
    _add_contest_flags(p)
    p.add_argument("--kinds", default="providence,minerva,eor_bravo,so_bravo")
    p.add_argument("--grid", default="0.05:0.95:0.05", help="lo:hi:step or comma list")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-rounds", type=int, default=5)
    p.add_argument("--manifest", default=None)
    _add_common_output(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("workload", help="workload/real-time model over a sweep")
    _add_contest_flags(p)
    p.add_argument("--sweep-csv", default=None, help="reuse a saved sweep instead of re-running")
    p.add_argument("--kinds", default="providence,eor_bravo,so_bravo")
    p.add_argument("--grid", default="0.05:0.95:0.05")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-rounds", type=int, default=5)
    p.add_argument("--manifest", default=None)
    p.add_argument("--model", choices=["workload", "precinct", "real_time"], default="workload")
    p.add_argument("--wb", type=float, default=1.0)
    p.add_argument("--wr", type=float, default=0.0)
    p.add_argument("--wp", type=float, default=0.0)
    p.add_argument("--tb", type=float, default=75.0)
    p.add_argument("--tr", type=float, default=10800.0)
    p.add_argument("--tp", type=float, default=75.0)
    _add_common_output(p)
    p.set_defaults(fn=cmd_workload)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--listen", default="127.0.0.1:8000")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--token", default=None, help="require this bearer token on mutations")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.fn(args)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except PollAuditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
