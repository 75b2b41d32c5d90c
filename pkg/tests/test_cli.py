"""CLI: outputs equal library values, exit codes, stable CSV columns."""

import csv
import io
import json

import pytest

from pollaudit.cli import main
from pollaudit.contest import PairwiseContest, RoundHistory
from pollaudit.planner import misleading_min_round_size, next_round_size
from pollaudit.rules import providence_verdict, so_bravo_verdict
from pollaudit.simulate import SWEEP_CSV_COLUMNS


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestRisk:
    def test_providence_matches_library(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "risk",
            "--audit", "providence",
            "--margin", "0.2567",
            "--alpha", "0.1",
            "--rounds", "140:81",
        )
        assert code == 0
        payload = json.loads(out)
        want = providence_verdict(RoundHistory((140,), (81,)), PairwiseContest(0.2567), 0.1)
        assert payload["measured_risk"] == want.measured_risk
        assert abs(payload["measured_risk"] - 0.0418) <= 0.0005
        assert payload["decision"] == "Correct"

    def test_selection_order_file(self, capsys, tmp_path):
        order = [1, 1, 1, 1, 1, 0, 1, 1, 0, 1]
        path = tmp_path / "order.txt"
        path.write_text("\n".join(str(b) for b in order))
        code, out, _ = run_cli(
            capsys,
            "risk",
            "--audit", "so_bravo",
            "--margin", "0.5",
            "--rounds", f"10:{sum(order)}",
            "--order-file", str(path),
        )
        assert code == 0
        payload = json.loads(out)
        want = so_bravo_verdict(
            RoundHistory((10,), (sum(order),), (tuple(order),)), PairwiseContest(0.5), 0.1
        )
        assert payload["measured_risk"] == want.measured_risk

    def test_validation_exit_code(self, capsys):
        code, _, err = run_cli(
            capsys, "risk", "--margin", "0.2", "--rounds", "10:900"
        )
        assert code == 2
        assert "error" in err

    def test_table_format(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "risk", "--margin", "0.2567", "--rounds", "140:81", "--format", "table",
        )
        assert code == 0
        assert "measured risk" in out


class TestRoundSize:
    def test_matches_library(self, capsys):
        code, out, _ = run_cli(
            capsys, "round-size", "--margin", "0.2567", "--alpha", "0.1", "--p", "0.9"
        )
        assert code == 0
        payload = json.loads(out)
        want = next_round_size(None, PairwiseContest(0.2567), 0.1, 0.9)
        assert payload["cumulative_n"] == want.cumulative_n
        assert payload["stop_prob"] == want.stop_prob

    def test_capacity_exit_code(self, capsys):
        code, _, err = run_cli(
            capsys,
            "round-size", "--margin", "0.05", "--p", "0.95", "--max-n", "100",
        )
        assert code == 3
        assert "unattainable" in err


class TestMisleading:
    def test_published_value(self, capsys):
        code, out, _ = run_cli(capsys, "misleading", "--margin", "0.25", "--limit", "0.1")
        assert code == 0
        assert json.loads(out)["min_round_size"] == 25

    def test_matches_library(self, capsys):
        code, out, _ = run_cli(capsys, "misleading", "--margin", "0.15", "--limit", "0.01")
        want = misleading_min_round_size(PairwiseContest(0.15), 0.01)
        assert json.loads(out)["min_round_size"] == want


class TestKmin:
    def test_toy_value(self, capsys):
        code, out, _ = run_cli(
            capsys, "kmin", "--winner-share", "0.51", "--alpha", "0.1", "--n", "17272"
        )
        assert code == 0
        assert json.loads(out)["kmin"] == 8725


class TestSimulateAndSweep:
    def test_simulate_deterministic(self, capsys):
        args = (
            "simulate", "--margin", "0.3", "--p", "0.8",
            "--trials", "40", "--seed", "11",
        )
        code, out1, _ = run_cli(capsys, *args)
        assert code == 0
        _, out2, _ = run_cli(capsys, *args)
        assert out1 == out2
        payload = json.loads(out1)
        assert payload["trials"] == 40

    def test_sweep_csv_columns_stable(self, capsys, tmp_path):
        out_file = tmp_path / "sweep.csv"
        code, _, _ = run_cli(
            capsys,
            "sweep", "--margin", "0.3", "--kinds", "providence,eor_bravo",
            "--grid", "0.5,0.8", "--trials", "30", "--seed", "2",
            "--format", "csv", "--out", str(out_file),
        )
        assert code == 0
        with open(out_file) as f:
            rows = list(csv.reader(f))
        assert rows[0] == SWEEP_CSV_COLUMNS

    def test_workload_from_sweep_csv(self, capsys, tmp_path):
        out_file = tmp_path / "sweep.csv"
        run_cli(
            capsys,
            "sweep", "--margin", "0.3", "--kinds", "providence",
            "--grid", "0.4,0.6,0.8", "--trials", "60", "--seed", "5",
            "--format", "csv", "--out", str(out_file),
        )
        code, out, _ = run_cli(
            capsys,
            "workload", "--sweep-csv", str(out_file), "--wr", "500",
        )
        assert code == 0
        payload = json.loads(out)
        assert "providence" in payload
        assert payload["providence"]["p"] in (0.4, 0.6, 0.8)

    def test_workload_direct(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "workload", "--margin", "0.3", "--kinds", "providence",
            "--grid", "0.5,0.7", "--trials", "40", "--seed", "3", "--wr", "200",
        )
        assert code == 0
        assert "providence" in json.loads(out)
