from pathlib import Path

import pytest

from polka_te import netsim
from polka_te.controller import (
    TOPIC_FLOW_MIGRATED,
    TOPIC_FLOW_REQUESTED,
    TOPIC_PATH_SELECTED,
    TOPIC_PBR_INSTALLED,
    TOPIC_PREDICTION_READY,
    TOPIC_TELEMETRY_REQUEST,
    Bus,
    Controller,
    ControllerError,
    FlowIntent,
    FlowState,
    replay_bus_log,
    sim_fingerprint,
)
from polka_te.netsim import load_topology
from polka_te.optimizer import Objective

DATA = Path(__file__).resolve().parents[1] / "src" / "polka_te" / "data"


def p4lab_controller(**kwargs) -> Controller:
    kwargs.setdefault("model_kind", "DecisionTree")
    return Controller(load_topology(DATA / "p4lab.topo"), **kwargs)


def intent(tos=1, demand=100.0, objective=Objective.MAX_PREDICTED_BANDWIDTH,
           pin=None, protocol=6):
    return FlowIntent("host1", "host2", protocol, tos, demand, objective, pin)


class TestBus:
    def test_seq_strictly_increasing(self):
        bus = Bus()
        for i in range(5):
            bus.publish("a.topic", {"i": i})
        seqs = [m.seq for m in bus.messages()]
        assert seqs == [1, 2, 3, 4, 5]

    def test_subscribe_backlog_plus_live(self):
        bus = Bus()
        bus.publish("t", {"n": 1})
        backlog, live = bus.subscribe()
        assert [m.payload["n"] for m in backlog] == [1]
        bus.publish("t", {"n": 2})
        assert live.get_nowait().payload["n"] == 2

    def test_since_filter(self):
        bus = Bus()
        for i in range(4):
            bus.publish("t", {"i": i})
        backlog, _ = bus.subscribe(since=2)
        assert [m.seq for m in backlog] == [3, 4]

    def test_ndjson_round_trip(self, tmp_path):
        bus = Bus()
        bus.publish("x", {"a": 1.5})
        bus.publish("y", {"b": "text"})
        out = tmp_path / "log.ndjson"
        bus.save_ndjson(out)
        back = Bus.load_ndjson(out)
        assert back == bus.messages()


class TestRequestFlow:
    def test_lifecycle_events(self):
        ctl = p4lab_controller()
        fid = ctl.request_flow(intent(pin=1))
        assert ctl.flows[fid].state == FlowState.PENDING
        ctl.run_pending()
        assert ctl.flows[fid].state == FlowState.ALLOCATED
        topics = [m.topic for m in ctl.bus.messages()]
        assert topics.index(TOPIC_FLOW_REQUESTED) < topics.index(TOPIC_PBR_INSTALLED)

    def test_unique_ids(self):
        ctl = p4lab_controller()
        ids = {ctl.request_flow(intent(tos=t, pin=1)) for t in (1, 2, 3)}
        assert len(ids) == 3

    def test_duplicate_match_rejected(self):
        ctl = p4lab_controller()
        ctl.request_flow(intent(tos=1))
        with pytest.raises(ControllerError, match="match tuple"):
            ctl.request_flow(intent(tos=1))

    def test_zero_demand_rejected(self):
        ctl = p4lab_controller()
        with pytest.raises(ControllerError, match="demand"):
            ctl.request_flow(intent(demand=0.0))

    def test_unknown_host_rejected(self):
        ctl = p4lab_controller()
        with pytest.raises(ControllerError, match="unknown host"):
            ctl.request_flow(FlowIntent("ghost", "host2", 6, 1, 1.0))


class TestAllocation:
    def test_pipeline_event_order(self):
        ctl = p4lab_controller()
        for _ in range(15):
            ctl.telemetry_tick()
        fid = ctl.request_flow(intent())
        ctl.run_pending()
        order = {m.topic: m.seq for m in ctl.bus.messages()
                 if m.topic in (TOPIC_TELEMETRY_REQUEST, TOPIC_PREDICTION_READY,
                                TOPIC_PATH_SELECTED, TOPIC_PBR_INSTALLED)}
        assert (order[TOPIC_TELEMETRY_REQUEST] < order[TOPIC_PREDICTION_READY]
                < order[TOPIC_PATH_SELECTED] < order[TOPIC_PBR_INSTALLED])
        assert ctl.flows[fid].state == FlowState.ALLOCATED

    def test_insufficient_history_fallback_flagged(self):
        ctl = p4lab_controller()
        fid = ctl.request_flow(intent())
        records = ctl.run_pending()
        assert records[0].fallback is True
        assert ctl.flows[fid].state == FlowState.ALLOCATED

    def test_modeled_forecast_not_flagged(self):
        ctl = p4lab_controller()
        for _ in range(15):
            ctl.telemetry_tick()
        records = []
        ctl.request_flow(intent())
        records = ctl.run_pending()
        assert records[0].fallback is False
        assert set(records[0].forecasts) == {1, 2, 3}
        assert all(len(v) == 10 for v in records[0].forecasts.values())

    def test_no_candidates_fails_flow(self):
        ctl = Controller(load_topology(DATA / "demo3.topo"),
                         model_kind="DecisionTree")
        fid = ctl.request_flow(FlowIntent("hostA", "hostB", 6, 1, 5.0))
        records = ctl.run_pending()
        assert records == [None]
        assert ctl.flows[fid].state == FlowState.FAILED
        assert "candidate" in ctl.flows[fid].reason

    def test_pinned_flow_skips_pipeline(self):
        ctl = p4lab_controller()
        fid = ctl.request_flow(intent(pin=2))
        records = ctl.run_pending()
        assert records[0].pinned and records[0].chosen_tunnel == 2
        topics = [m.topic for m in ctl.bus.messages()]
        assert TOPIC_PREDICTION_READY not in topics
        assert ctl.flows[fid].tunnel_id == 2

    def test_single_candidate_still_recorded(self):
        topo = load_topology(DATA / "p4lab.topo")
        keep = topo.tunnels[1]
        topo.tunnels.clear()
        topo.tunnels[1] = keep
        ctl = Controller(topo, model_kind="DecisionTree")
        ctl.request_flow(intent())
        records = ctl.run_pending()
        assert records[0].chosen_tunnel == 1


class TestExperimentReplays:
    def test_latency_migration(self):
        ctl = p4lab_controller()
        fid = ctl.request_flow(intent(tos=0, protocol=1, demand=2.0, pin=1))
        ctl.run_pending()
        for _ in range(60):
            ctl.telemetry_tick()
        record = ctl.reallocate_flow(fid, Objective.MIN_LATENCY)
        assert record.chosen_tunnel == 2
        assert record.objective_value == 4.0
        assert ctl.flows[fid].tunnel_id == 2

    def test_flow_aggregation(self):
        ctl = p4lab_controller()
        fids = [ctl.request_flow(intent(tos=t, pin=1)) for t in (1, 2, 3)]
        ctl.run_pending()
        for _ in range(60):
            ctl.telemetry_tick()
        rec2 = ctl.reallocate_flow(fids[1])
        assert rec2.chosen_tunnel == 2
        for _ in range(12):
            ctl.telemetry_tick()
        rec3 = ctl.reallocate_flow(fids[2])
        assert rec3.chosen_tunnel == 3
        ctl.telemetry_tick()
        alloc = {f["id"]: f["throughput_mbps"] for f in ctl.flows_view()}
        assert alloc == {fids[0]: 20.0, fids[1]: 10.0, fids[2]: 5.0}


class TestMigration:
    def allocated_controller(self):
        ctl = p4lab_controller()
        fid = ctl.request_flow(intent(pin=1))
        ctl.run_pending()
        return ctl, fid

    def test_exactly_one_rule_changes(self):
        ctl, fid = self.allocated_controller()
        before = dict(ctl.topo.rules)
        tunnels_before = dict(ctl.topo.tunnels)
        ctl.migrate_flow(fid, 2)
        after = dict(ctl.topo.rules)
        assert set(before) == set(after)
        changed = [k for k in before if before[k] != after[k]]
        assert len(changed) == 1
        assert ctl.topo.tunnels == tunnels_before

    def test_noop_migration_is_idempotent(self):
        ctl, fid = self.allocated_controller()
        seq_before = len(ctl.bus.messages())
        ctl.migrate_flow(fid, 1)
        assert len(ctl.bus.messages()) == seq_before

    def test_migrate_failed_flow_rejected(self):
        ctl = Controller(load_topology(DATA / "demo3.topo"),
                         model_kind="DecisionTree")
        fid = ctl.request_flow(FlowIntent("hostA", "hostB", 6, 1, 5.0))
        ctl.run_pending()
        with pytest.raises(ControllerError, match="FAILED"):
            ctl.migrate_flow(fid, 1)

    def test_foreign_edge_tunnel_rejected(self):
        ctl, fid = self.allocated_controller()
        netsim.add_tunnel(ctl.topo, "AMS_edge", "MIA_edge",
                          ["AMS", "SAO", "MIA"], tunnel_id=9)
        with pytest.raises(ControllerError, match="enters at"):
            ctl.migrate_flow(fid, 9)

    def test_migration_event_published(self):
        ctl, fid = self.allocated_controller()
        ctl.migrate_flow(fid, 3)
        migrations = [m for m in ctl.bus.messages()
                      if m.topic == TOPIC_FLOW_MIGRATED]
        assert len(migrations) == 1
        assert migrations[0].payload == {"flow_id": fid, "from_tunnel": 1,
                                         "to_tunnel": 3}


class TestTelemetryTick:
    def test_series_length_tracks_ticks(self):
        ctl = p4lab_controller()
        for _ in range(7):
            ctl.telemetry_tick()
        assert ctl.store.length("path:1:bandwidth") == 7
        assert ctl.store.length("link:MIA-SAO:utilization") == 7

    def test_tick_without_flows_records_zero_utilization(self):
        ctl = p4lab_controller()
        ctl.telemetry_tick()
        assert ctl.store.window("link:MIA-SAO:utilization", 1) == [0.0]

    def test_tick_event_carries_clock(self):
        ctl = p4lab_controller()
        ctl.telemetry_tick()
        tick = [m for m in ctl.bus.messages() if m.topic == "telemetry.tick"][0]
        assert tick.payload["t"] == 1.0 and tick.payload["dt"] == 1.0


class TestReplay:
    def run_busy_controller(self) -> Controller:
        ctl = p4lab_controller()
        fids = [ctl.request_flow(intent(tos=t, pin=1)) for t in (1, 2, 3)]
        ctl.run_pending()
        for _ in range(60):
            ctl.telemetry_tick()
        ctl.reallocate_flow(fids[1])
        for _ in range(12):
            ctl.telemetry_tick()
        ctl.reallocate_flow(fids[2])
        for _ in range(5):
            ctl.telemetry_tick()
        return ctl

    def test_replay_reproduces_final_state(self):
        ctl = self.run_busy_controller()
        fresh = load_topology(DATA / "p4lab.topo")
        replayed = replay_bus_log(ctl.bus.messages(), fresh)
        assert sim_fingerprint(replayed) == sim_fingerprint(ctl.sim)

    def test_replay_from_saved_log(self, tmp_path):
        ctl = self.run_busy_controller()
        log_path = tmp_path / "events.ndjson"
        ctl.bus.save_ndjson(log_path)
        replayed = replay_bus_log(Bus.load_ndjson(log_path),
                                  load_topology(DATA / "p4lab.topo"))
        assert sim_fingerprint(replayed) == sim_fingerprint(ctl.sim)

    def test_identical_runs_identical_logs(self):
        a = self.run_busy_controller()
        b = self.run_busy_controller()
        assert a.bus.messages() == b.bus.messages()


class TestViews:
    def test_flows_view_shape(self):
        ctl = p4lab_controller()
        fid = ctl.request_flow(intent(pin=1))
        ctl.run_pending()
        ctl.telemetry_tick()
        view = ctl.flows_view()
        assert view[0]["id"] == fid
        assert view[0]["state"] == "ALLOCATED"
        assert view[0]["tunnel_id"] == 1
        assert view[0]["throughput_mbps"] == 20.0

    def test_topology_view_live_utilization(self):
        ctl = p4lab_controller()
        ctl.request_flow(intent(pin=1))
        ctl.run_pending()
        view = ctl.topology_view()
        util = {(l["a"], l["b"]): l["utilization"] for l in view["links"]}
        assert util[("MIA", "SAO")] == 1.0
        assert util[("MIA", "CHI")] == 0.0
        assert {t["id"] for t in view["tunnels"]} == {1, 2, 3}
