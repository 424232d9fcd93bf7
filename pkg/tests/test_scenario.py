import json
from pathlib import Path

import pytest

from polka_te.controller import Bus, replay_bus_log, sim_fingerprint
from polka_te.netsim import load_topology
from polka_te.scenario import (
    ScenarioError,
    load_script,
    run_scenario,
)
from polka_te.telemetry import read_csv

DATA = Path(__file__).resolve().parents[1] / "src" / "polka_te" / "data"


@pytest.fixture(scope="module")
def latency_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("latency")
    return run_scenario("latency_migration", out_dir=out)


@pytest.fixture(scope="module")
def aggregation_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("aggregation")
    return run_scenario("flow_aggregation", out_dir=out)


class TestLatencyMigration:
    @pytest.fixture()
    def report(self, latency_report):
        return latency_report

    def test_assertions_pass(self, report):
        assert report.passed, report.failures()

    def test_latency_steps_down(self, report):
        assert report.metrics["latency_before_ms"]["flow:1:latency"] == 23.0
        assert report.metrics["latency_after_ms"]["flow:1:latency"] == 4.0

    def test_single_minimal_migration(self, report):
        assert len(report.migrations) == 1
        m = report.migrations[0]
        assert (m.rules_changed, m.tunnels_changed, m.core_ids_changed) == (1, 0, 0)
        assert (m.from_tunnel, m.to_tunnel) == (1, 2)

    def test_report_files(self, report):
        out = report.out_dir
        for name in ("timeseries.csv", "summary.json", "events.ndjson",
                     "config_MIA_edge.txt", "figures/latency.png",
                     "figures/throughput.png"):
            assert (out / name).exists(), name
        summary = json.loads((out / "summary.json").read_text())
        assert summary["schema_version"] == 1
        assert summary["passed"] is True

    def test_timeseries_csv_contains_latency_series(self, report):
        series = read_csv(report.out_dir / "timeseries.csv")
        latency = [v for _, v in series["flow:1:latency"]]
        assert latency[:5] == [23.0] * 5
        assert latency[-5:] == [4.0] * 5


class TestFlowAggregation:
    @pytest.fixture()
    def report(self, aggregation_report):
        return aggregation_report

    def test_assertions_pass(self, report):
        assert report.passed, report.failures()

    def test_throughput_lift(self, report):
        assert report.metrics["aggregate_before_mbps"] == 20.0
        assert report.metrics["aggregate_after_mbps"] == 35.0

    def test_both_throughput_figures_reported(self, report):
        # the fluid-model result and the hardware measurement both appear
        assert report.metrics["fluid_model_after_mbps"] == 35.0
        assert report.metrics["testbed_measured_after_mbps"] == 30.0
        assert report.metrics["fluid_model_after_mbps"] >= 30.0

    def test_two_minimal_migrations(self, report):
        assert len(report.migrations) == 2
        for m in report.migrations:
            assert (m.rules_changed, m.tunnels_changed, m.core_ids_changed) \
                == (1, 0, 0)

    def test_flows_landed_on_distinct_tunnels(self, report):
        ctl = report.controller
        assert [ctl.flows[fid].tunnel_id for fid in sorted(ctl.flows)] == [1, 2, 3]


class TestDeterminismAndReplay:
    def test_byte_identical_reruns(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        run_scenario("flow_aggregation", out_dir=a)
        run_scenario("flow_aggregation", out_dir=b)
        for file in sorted(a.rglob("*")):
            if file.is_file():
                twin = b / file.relative_to(a)
                assert twin.read_bytes() == file.read_bytes(), file.name

    def test_bus_log_replay_rebuilds_state(self, tmp_path):
        report = run_scenario("flow_aggregation", out_dir=tmp_path / "run")
        messages = Bus.load_ndjson(tmp_path / "run" / "events.ndjson")
        replayed = replay_bus_log(messages, load_topology(DATA / "p4lab.topo"))
        assert sim_fingerprint(replayed) == sim_fingerprint(report.controller.sim)

    def test_seed_override_changes_nothing_structural(self, tmp_path):
        report = run_scenario("flow_aggregation", out_dir=None, seed=99)
        assert report.passed


class TestScriptValidation:
    def test_unknown_scenario_lists_available(self):
        with pytest.raises(ScenarioError, match="latency_migration"):
            load_script("warp_drive")

    def test_actions_must_be_ordered(self, tmp_path):
        script = json.loads((DATA / "latency_migration.json").read_text())
        script["actions"][0]["at"] = 999
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(script))
        with pytest.raises(ScenarioError, match="time-ordered"):
            load_script(path)

    def test_custom_script_from_path(self, tmp_path):
        script = {
            "schema_version": 1,
            "name": "mini",
            "topology": "p4lab.topo",
            "model": "DecisionTree",
            "actions": [
                {"at": 0, "op": "start_flow", "flow": "f1", "src": "host1",
                 "dst": "host2", "protocol": 6, "tos": 1, "demand_mbps": 5.0,
                 "tunnel": 1},
                {"at": 0, "op": "advance", "steps": 3},
            ],
            "assertions": [
                {"kind": "series_value", "series": "flow:1:throughput",
                 "at": 3, "equals": 5.0},
            ],
        }
        path = tmp_path / "mini.json"
        path.write_text(json.dumps(script))
        report = run_scenario(path, out_dir=None)
        assert report.passed

    def test_failing_assertion_reported(self, tmp_path):
        script = json.loads((DATA / "latency_migration.json").read_text())
        script["assertions"] = [
            {"kind": "series_value", "series": "flow:1:latency",
             "at": 90, "equals": 1234.0},
        ]
        path = tmp_path / "failing.json"
        path.write_text(json.dumps(script))
        report = run_scenario(path, out_dir=None)
        assert not report.passed
        assert "1234.0" in report.failures()[0].detail
