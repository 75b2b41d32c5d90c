"""Affine workload and real-time models over simulation expectations,
plus the grid argmin that picks a workload-minimizing round schedule."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .errors import DomainError
from .simulate import AuditKind, SweepCell


@dataclass(frozen=True)
class WorkloadParams:
    """Person-effort weights in ballot-equivalents."""

    w_b: float = 1.0
    w_r: float = 0.0
    w_p: float = 0.0
    overhead: float = 0.0

    def __post_init__(self):
        if min(self.w_b, self.w_r, self.w_p, self.overhead) < 0:
            raise DomainError("workload weights must be nonnegative")


@dataclass(frozen=True)
class RealTimeParams:
    """Wall-clock weights in seconds; applied to largest-county
    expectations since counties draw concurrently."""

    t_b: float = 75.0
    t_r: float = 10800.0
    t_p: float = 75.0
    overhead: float = 0.0

    def __post_init__(self):
        if min(self.t_b, self.t_r, self.t_p, self.overhead) < 0:
            raise DomainError("real-time weights must be nonnegative")


def expected_workload(e_b: float, e_r: float, params: WorkloadParams) -> float:
    """Person-effort of an audit with expected ballots e_b and rounds e_r."""
    if e_b < 0 or e_r < 0:
        raise DomainError("expectations must be nonnegative")
    return e_b * params.w_b + e_r * params.w_r + params.overhead


def expected_workload_precinct(
    e_b: float, e_r: float, e_p: float, params: WorkloadParams
) -> float:
    """As expected_workload, plus per-precinct first-touch effort."""
    if min(e_b, e_r, e_p) < 0:
        raise DomainError("expectations must be nonnegative")
    return e_b * params.w_b + e_r * params.w_r + e_p * params.w_p + params.overhead


def expected_real_time(
    lc_e_b: float, lc_e_r: float, lc_e_p: float, params: RealTimeParams
) -> float:
    """Seconds of wall-clock audit time from largest-county expectations."""
    if min(lc_e_b, lc_e_r, lc_e_p) < 0:
        raise DomainError("expectations must be nonnegative")
    return lc_e_b * params.t_b + lc_e_r * params.t_r + lc_e_p * params.t_p + params.overhead


class CostModel(str, enum.Enum):
    WORKLOAD = "workload"
    PRECINCT = "precinct"
    REAL_TIME = "real_time"


def cell_cost(cell: SweepCell, params: WorkloadParams | RealTimeParams, model: CostModel) -> float:
    rep = cell.report
    if model is CostModel.WORKLOAD:
        return expected_workload(rep.total_ballots_mean, rep.rounds_mean, params)
    if model is CostModel.PRECINCT:
        if rep.precinct_touches_mean_per_round is None:
            raise DomainError("precinct model needs a sweep run with a manifest")
        e_p = sum(rep.precinct_touches_mean_per_round)
        return expected_workload_precinct(rep.total_ballots_mean, rep.rounds_mean, e_p, params)
    lc = rep.largest_county
    if lc is None:
        raise DomainError("real-time model needs a sweep run with a manifest")
    return expected_real_time(lc.ballots_mean, lc.rounds_mean, lc.precinct_touches_mean, params)


@dataclass(frozen=True)
class OptimalCell:
    audit_kind: AuditKind
    p: float
    cost: float


def optimal_p(
    cells: Sequence[SweepCell],
    params: WorkloadParams | RealTimeParams,
    model: CostModel = CostModel.WORKLOAD,
) -> dict[AuditKind, OptimalCell]:
    """Grid argmin of the chosen cost model per audit kind; ties break
    toward the smaller stopping-probability target."""
    if not cells:
        raise DomainError("empty sweep table")
    best: dict[AuditKind, OptimalCell] = {}
    for cell in sorted(cells, key=lambda c: c.p):
        cost = cell_cost(cell, params, model)
        cur = best.get(cell.audit_kind)
        if cur is None or cost < cur.cost:
            best[cell.audit_kind] = OptimalCell(cell.audit_kind, cell.p, cost)
    return best
