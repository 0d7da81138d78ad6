import json
import os

import pytest
from click.testing import CliRunner

from ratbench.cli import main
from ratbench.records import record_from_line


@pytest.fixture()
def runner():
    return CliRunner()


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
    return str(path)


MULTI_RAT_POLICY = {"name": "multi-rat", "objective": "min_energy_per_byte"}
CELLULAR_ONLY_POLICY = {
    "name": "cellular-only",
    "objective": "min_energy_per_byte",
    "allowed": ["NBIoT"],
}
ALIVE_WORKLOAD = {
    "duration_h": 24.0,
    "context": {"scenario": "static-indoor"},
    "messages": [{"payload_bytes": 8, "rate_per_hour": 1.0, "weight": 1.0}],
}


class TestFitSimulateReport:
    def test_full_chain(self, runner, tmp_path):
        model = str(tmp_path / "model.json")
        result = runner.invoke(main, ["fit", "--out", model])
        assert result.exit_code == 0, result.output
        assert os.path.exists(model)
        doc = json.load(open(model))
        assert set(doc["scenarios"]) == {"static-indoor", "static-outdoor", "mobile-outdoor"}

        cfg = write_json(
            tmp_path / "cfg.json", {"scenario": "static-indoor", "cycles": 150, "seed": 5}
        )
        records = str(tmp_path / "records.jsonl")
        events = str(tmp_path / "events.jsonl")
        result = runner.invoke(
            main,
            ["simulate", "--config", cfg, "--out", records, "--model", model, "--events", events],
        )
        assert result.exit_code == 0, result.output
        lines = open(records).read().strip().splitlines()
        assert len(lines) == 450
        record_from_line(lines[0])  # parses back
        assert len(open(events).read().strip().splitlines()) == 600

        for fmt, probe in (("csv", "scenario,technology"), ("json", '"cells"'), ("md", "| 1-12 |")):
            result = runner.invoke(main, ["report", "--in", records, "--format", fmt])
            assert result.exit_code == 0, result.output
            assert probe in result.output

    def test_seed_override_changes_stream(self, runner, tmp_path):
        model = str(tmp_path / "model.json")
        assert runner.invoke(main, ["fit", "--out", model]).exit_code == 0
        cfg = write_json(
            tmp_path / "cfg.json", {"scenario": "static-outdoor", "cycles": 20, "seed": 5}
        )
        out_a = str(tmp_path / "a.jsonl")
        out_b = str(tmp_path / "b.jsonl")
        assert runner.invoke(
            main, ["simulate", "--config", cfg, "--out", out_a, "--model", model]
        ).exit_code == 0
        assert runner.invoke(
            main,
            ["simulate", "--config", cfg, "--out", out_b, "--model", model, "--seed", "99"],
        ).exit_code == 0
        assert open(out_a).read() != open(out_b).read()

    def test_report_writes_figures_next_to_output(self, runner, tmp_path):
        model = str(tmp_path / "model.json")
        assert runner.invoke(main, ["fit", "--out", model]).exit_code == 0
        cfg = write_json(
            tmp_path / "cfg.json", {"scenario": "static-indoor", "cycles": 120, "seed": 6}
        )
        records = str(tmp_path / "records.jsonl")
        assert runner.invoke(
            main, ["simulate", "--config", cfg, "--out", records, "--model", model]
        ).exit_code == 0
        out = str(tmp_path / "report.csv")
        result = runner.invoke(main, ["report", "--in", records, "--out", out])
        assert result.exit_code == 0, result.output
        assert os.path.exists(out)
        for name in ("eb_by_bucket.png", "pdr_by_bucket.png"):
            path = tmp_path / name
            assert path.exists() and path.stat().st_size > 1000
        # explicit figure dir and disabling both work
        figures = tmp_path / "figs"
        assert runner.invoke(
            main, ["report", "--in", records, "--figures", str(figures)]
        ).exit_code == 0
        assert (figures / "eb_by_bucket.png").exists()
        result = runner.invoke(main, ["report", "--in", records, "--out", out, "--no-figures"])
        assert result.exit_code == 0

    def test_report_delivered_only_flag(self, runner, tmp_path):
        model = str(tmp_path / "model.json")
        assert runner.invoke(main, ["fit", "--out", model]).exit_code == 0
        cfg = write_json(
            tmp_path / "cfg.json", {"scenario": "static-indoor", "cycles": 80, "seed": 7}
        )
        records = str(tmp_path / "records.jsonl")
        assert runner.invoke(
            main, ["simulate", "--config", cfg, "--out", records, "--model", model]
        ).exit_code == 0
        result = runner.invoke(
            main, ["report", "--in", records, "--delivered-only", "--format", "csv"]
        )
        assert result.exit_code == 0


class TestCompare:
    def test_savings_factor_json(self, runner, tmp_path):
        workload = write_json(tmp_path / "w.json", ALIVE_WORKLOAD)
        policy_a = write_json(tmp_path / "a.json", MULTI_RAT_POLICY)
        policy_b = write_json(tmp_path / "b.json", CELLULAR_ONLY_POLICY)
        result = runner.invoke(
            main,
            ["compare", "--workload", workload, "--policy-a", policy_a, "--policy-b", policy_b,
             "--seed", "3"],
        )
        assert result.exit_code == 0, result.output
        out = json.loads(result.output)
        assert out["savings_factor"] >= 4
        assert out["summary_a"]["per_technology"]["LoRaWAN"]["n_sent"] == 24

    def test_infeasible_policy_fails_cleanly(self, runner, tmp_path):
        workload = dict(ALIVE_WORKLOAD, messages=[{"payload_bytes": 999, "rate_per_hour": 1.0}])
        w = write_json(tmp_path / "w.json", workload)
        sigfox_only = write_json(
            tmp_path / "sf.json", {"objective": "min_energy_per_byte", "allowed": ["Sigfox"]}
        )
        ok = write_json(tmp_path / "ok.json", MULTI_RAT_POLICY)
        result = runner.invoke(
            main, ["compare", "--workload", w, "--policy-a", sigfox_only, "--policy-b", ok]
        )
        assert result.exit_code != 0
        assert "Error" in result.output


class TestErrors:
    def test_bad_config_surfaces_message(self, runner, tmp_path):
        cfg = write_json(tmp_path / "bad.json", {"scenario": "static-indoor", "cycles": 0})
        result = runner.invoke(
            main, ["simulate", "--config", cfg, "--out", str(tmp_path / "x.jsonl")]
        )
        assert result.exit_code != 0
        assert "cycles" in result.output

    def test_missing_file(self, runner):
        result = runner.invoke(main, ["report", "--in", "/nonexistent/records.jsonl"])
        assert result.exit_code != 0
