"""Workload and real-time models and the grid argmin."""

import pytest

from pollaudit.contest import PairwiseContest
from pollaudit.errors import DomainError
from pollaudit.simulate import AuditKind, sweep_p
from pollaudit.workload import (
    CostModel,
    RealTimeParams,
    WorkloadParams,
    cell_cost,
    expected_real_time,
    expected_workload,
    expected_workload_precinct,
    optimal_p,
)


class TestAffineModels:
    def test_basic_evaluation(self):
        assert expected_workload(100, 2, WorkloadParams(w_b=1, w_r=1000)) == 2100

    def test_ballots_only(self):
        assert expected_workload(123.5, 7, WorkloadParams(w_b=1, w_r=0)) == 123.5

    def test_precinct_reduces_without_touch_weight(self):
        p = WorkloadParams(w_b=1, w_r=10)
        assert expected_workload_precinct(50, 2, 9, p) == expected_workload(50, 2, p)

    def test_precinct_term(self):
        p = WorkloadParams(w_b=0, w_r=0, w_p=50)
        assert expected_workload_precinct(0, 0, 10, p) == 500

    def test_real_time_round_term(self):
        p = RealTimeParams(t_b=0, t_r=10800, t_p=0)
        assert expected_real_time(0, 2, 0, p) == 21600

    def test_real_time_ballot_term(self):
        p = RealTimeParams(t_b=75, t_r=0, t_p=0)
        assert expected_real_time(1000, 0, 0, p) == 75000

    def test_doubling_is_affine(self):
        p = WorkloadParams(w_b=1.5, w_r=800, overhead=42)
        w1 = expected_workload(100, 2, p)
        w2 = expected_workload(200, 4, p)
        assert w2 - p.overhead == pytest.approx(2 * (w1 - p.overhead))

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            WorkloadParams(w_b=-1)
        with pytest.raises(DomainError):
            expected_workload(-1, 0, WorkloadParams())


@pytest.fixture(scope="module")
def small_sweep():
    contest = PairwiseContest(0.25)
    return sweep_p(
        contest,
        [AuditKind.PROVIDENCE, AuditKind.EOR_BRAVO],
        [0.3, 0.5, 0.7, 0.9],
        0.1,
        trials=400,
        seed=12,
        max_rounds=4,
    )


class TestOptimalP:
    def test_single_cell(self, small_sweep):
        one = [small_sweep[0]]
        best = optimal_p(one, WorkloadParams(w_r=500))
        assert best[AuditKind.PROVIDENCE].p == one[0].p

    def test_grid_argmin(self, small_sweep):
        params = WorkloadParams(w_r=500)
        best = optimal_p(small_sweep, params)
        for cell in small_sweep:
            assert best[cell.audit_kind].cost <= cell_cost(cell, params, CostModel.WORKLOAD)

    def test_zero_round_weight_prefers_smallest_grid_p(self, small_sweep):
        best = optimal_p(small_sweep, WorkloadParams(w_r=0))
        grid_min = min(c.p for c in small_sweep)
        assert best[AuditKind.PROVIDENCE].p == grid_min

    def test_tie_breaks_toward_smaller_p(self, small_sweep):
        # force universal ties with an all-zero cost model
        best = optimal_p(small_sweep, WorkloadParams(w_b=0, w_r=0))
        assert best[AuditKind.PROVIDENCE].p == min(c.p for c in small_sweep)

    def test_empty_table(self):
        with pytest.raises(DomainError):
            optimal_p([], WorkloadParams())

    def test_models_needing_manifest_raise_without_one(self, small_sweep):
        with pytest.raises(DomainError):
            optimal_p(small_sweep, WorkloadParams(w_p=10), CostModel.PRECINCT)
        with pytest.raises(DomainError):
            optimal_p(small_sweep, RealTimeParams(), CostModel.REAL_TIME)


@pytest.fixture(scope="module")
def manifest_sweep():
    from pollaudit.election import BallotManifest, ManifestEntry

    manifest = BallotManifest(
        tuple(ManifestEntry("big", f"p{i}", 50) for i in range(10))
        + tuple(ManifestEntry("small", f"p{i}", 25) for i in range(4))
    )
    contest = PairwiseContest(0.4, relevant_fraction=1.0)
    return sweep_p(
        contest,
        [AuditKind.PROVIDENCE],
        [0.4, 0.6, 0.8],
        0.1,
        trials=300,
        seed=9,
        manifest=manifest,
        max_rounds=4,
    )


class TestManifestModels:
    def test_precinct_model_evaluates(self, manifest_sweep):
        best = optimal_p(manifest_sweep, WorkloadParams(w_r=50, w_p=20), CostModel.PRECINCT)
        assert best[AuditKind.PROVIDENCE].cost > 0

    def test_real_time_tracks_largest_county_rounds(self, manifest_sweep):
        # with only the per-round term, cost ordering must follow the
        # largest county's expected rounds
        params = RealTimeParams(t_b=0, t_r=10800, t_p=0)
        costs = [cell_cost(c, params, CostModel.REAL_TIME) for c in manifest_sweep]
        rounds = [c.report.largest_county.rounds_mean for c in manifest_sweep]
        order = sorted(range(len(costs)), key=lambda i: costs[i])
        assert order == sorted(range(len(rounds)), key=lambda i: rounds[i])
