"""Control plane: flow lifecycle, telemetry collection, path optimization.

One controller owns a simulation, a telemetry store, and an in-process
publish/subscribe bus.  Every state change funnels through controller
methods under one lock, so the whole system behaves as a single
serialized command stream; subscribers (gateway clients, the dashboard)
observe an ordered event log that can be saved and replayed to rebuild
the same final network state.

An allocation runs the fixed pipeline: pull telemetry windows for each
candidate tunnel, forecast the horizon per tunnel, select a path under
the flow's objective, then install the route by writing exactly one PBR
entry at the ingress edge.  Migrations reuse the same single-rule write.
"""

from __future__ import annotations

import json
import queue
import threading
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from . import netsim, predictor
from .netsim import (
    Flow,
    PbrMatch,
    PbrRule,
    Simulation,
    Topology,
    Tunnel,
    path_latency,
)
from .optimizer import Objective, PathCandidate, select_path
from .telemetry import TelemetryStore, lagged_dataset

# Stable bus topic names.
TOPIC_FLOW_REQUESTED = "flow.requested"
TOPIC_TELEMETRY_TICK = "telemetry.tick"
TOPIC_TELEMETRY_REQUEST = "telemetry.request"
TOPIC_PREDICTION_READY = "prediction.ready"
TOPIC_PATH_SELECTED = "path.selected"
TOPIC_PBR_INSTALLED = "pbr.installed"
TOPIC_FLOW_MIGRATED = "flow.migrated"
TOPIC_FLOW_FAILED = "flow.failed"


@dataclass(frozen=True)
class BusMessage:
    seq: int
    topic: str
    payload: dict

    def to_json(self) -> str:
        return json.dumps({"seq": self.seq, "topic": self.topic,
                           "payload": self.payload}, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "BusMessage":
        raw = json.loads(line)
        return cls(raw["seq"], raw["topic"], raw["payload"])


class Bus:
    """Ordered in-process pub/sub with a replayable log."""

    def __init__(self):
        self._log: list[BusMessage] = []
        self._subscribers: list[queue.SimpleQueue] = []
        self._lock = threading.Lock()

    def publish(self, topic: str, payload: dict) -> BusMessage:
        with self._lock:
            message = BusMessage(len(self._log) + 1, topic, payload)
            self._log.append(message)
            for q in self._subscribers:
                q.put(message)
        return message

    def subscribe(self, since: int = 0):
        """Atomically fetch the backlog after `since` and a live queue."""
        q: queue.SimpleQueue = queue.SimpleQueue()
        with self._lock:
            backlog = [m for m in self._log if m.seq > since]
            self._subscribers.append(q)
        return backlog, q

    def unsubscribe(self, q) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def messages(self, since: int = 0) -> "list[BusMessage]":
        with self._lock:
            return [m for m in self._log if m.seq > since]

    def save_ndjson(self, path) -> None:
        with open(path, "w") as fh:
            for message in self.messages():
                fh.write(message.to_json() + "\n")

    @staticmethod
    def load_ndjson(path) -> "list[BusMessage]":
        return [BusMessage.from_json(line)
                for line in Path(path).read_text().splitlines() if line]


class FlowState(str, Enum):
    PENDING = "PENDING"
    ALLOCATED = "ALLOCATED"
    FAILED = "FAILED"


@dataclass(frozen=True)
class FlowIntent:
    src_host: str
    dst_host: str
    protocol: int
    tos: int
    demand_mbps: float
    objective: Objective = Objective.MAX_PREDICTED_BANDWIDTH
    pin_tunnel: Optional[int] = None


@dataclass
class AllocationRecord:
    flow_id: int
    objective: str
    chosen_tunnel: int
    forecasts: "dict[int, list[float]]"
    objective_value: float
    fallback: bool
    pinned: bool = False


@dataclass
class FlowRecord:
    id: int
    intent: FlowIntent
    state: FlowState = FlowState.PENDING
    tunnel_id: Optional[int] = None
    reason: str = ""
    allocations: "list[AllocationRecord]" = field(default_factory=list)


class ControllerError(ValueError):
    pass


class Controller:
    def __init__(self, topo: Topology, model_kind: str = "RandomForest",
                 model_seed: int = 0, n_lags: int = predictor.N_LAGS,
                 forecast_steps: int = predictor.FORECAST_STEPS,
                 tick_seconds: float = 1.0):
        self.sim = Simulation(topo, tick_seconds)
        self.store = TelemetryStore()
        self.bus = Bus()
        self.model_kind = model_kind
        self.model_seed = model_seed
        self.n_lags = n_lags
        self.forecast_steps = forecast_steps
        self.flows: dict[int, FlowRecord] = {}
        self._pending: deque[int] = deque()
        self._next_id = 1
        self._lock = threading.RLock()

    @property
    def topo(self) -> Topology:
        return self.sim.topo

    # -- flow lifecycle ---------------------------------------------------

    def request_flow(self, intent: FlowIntent) -> int:
        """Register a flow intent; allocation happens on run_pending()."""
        with self._lock:
            if intent.demand_mbps <= 0:
                raise ControllerError("demand must be > 0")
            for host in (intent.src_host, intent.dst_host):
                node = self.topo.nodes.get(host)
                if node is None or node.kind != "host":
                    raise ControllerError(f"unknown host {host!r}")
            self.topo.edge_of_host(intent.src_host)
            key = (intent.protocol, intent.tos, intent.src_host, intent.dst_host)
            for record in self.flows.values():
                other = record.intent
                if (record.state != FlowState.FAILED
                        and key == (other.protocol, other.tos,
                                    other.src_host, other.dst_host)):
                    raise ControllerError(
                        f"flow {record.id} already uses match tuple {key}"
                    )
            flow_id = self._next_id
            self._next_id += 1
            self.flows[flow_id] = FlowRecord(flow_id, intent)
            self._pending.append(flow_id)
            self.bus.publish(TOPIC_FLOW_REQUESTED, {
                "flow_id": flow_id,
                "src_host": intent.src_host,
                "dst_host": intent.dst_host,
                "protocol": intent.protocol,
                "tos": intent.tos,
                "demand_mbps": intent.demand_mbps,
                "objective": str(intent.objective.value),
                "pin_tunnel": intent.pin_tunnel,
            })
            return flow_id

    def run_pending(self) -> "list[Optional[AllocationRecord]]":
        with self._lock:
            out = []
            while self._pending:
                out.append(self.allocate_flow(self._pending.popleft()))
            return out

    def candidate_tunnels(self, intent: FlowIntent) -> "list[Tunnel]":
        ingress = self.topo.edge_of_host(intent.src_host)
        egress = self.topo.edge_of_host(intent.dst_host)
        return [t for tid, t in sorted(self.topo.tunnels.items())
                if t.ingress == ingress and t.egress == egress]

    def _match_for(self, intent: FlowIntent) -> PbrMatch:
        src = self.topo.host_addr(intent.src_host)
        dst = self.topo.host_addr(intent.dst_host)
        return PbrMatch(str(src.network), str(dst.ip),
                        intent.protocol, intent.tos)

    def _install(self, record: FlowRecord, tunnel_id: int) -> None:
        rule = PbrRule(self.topo.edge_of_host(record.intent.src_host),
                       self._match_for(record.intent), tunnel_id,
                       name=f"flow{record.id}")
        netsim.set_pbr(self.topo, rule)
        if record.id not in self.sim.flows:
            self.sim.add_flow(Flow(record.id, record.intent.src_host,
                                   record.intent.dst_host,
                                   record.intent.protocol, record.intent.tos,
                                   record.intent.demand_mbps))
        record.tunnel_id = tunnel_id
        record.state = FlowState.ALLOCATED
        self.bus.publish(TOPIC_PBR_INSTALLED, {
            "flow_id": record.id,
            "edge": rule.edge,
            "match": {"src_net": rule.match.src_net,
                      "dst_addr": rule.match.dst_addr,
                      "protocol": rule.match.protocol,
                      "tos": rule.match.tos},
            "tunnel_id": tunnel_id,
        })

    def _forecast_for(self, tunnel: Tunnel):
        """Forecast the tunnel's available bandwidth over the horizon.

        Falls back to a flat latest-sample forecast (flagged) when the
        series is too short to train on.
        """
        key = f"path:{tunnel.id}:bandwidth"
        n = self.store.length(key)
        if n < self.n_lags + 2:
            latest = self.store.window(key, 1)[0] if n else 0.0
            return [float(latest)] * self.forecast_steps, True
        values = np.array([v for _, v in self.store.series(key)])
        scaler = predictor.Standardizer().fit(values)
        scaled = scaler.transform(values).ravel()
        ds = lagged_dataset(scaled, self.n_lags)
        model = predictor.fit(self.model_kind, ds.X, ds.y, seed=self.model_seed)
        out = predictor.forecast(model, scaler, values[-self.n_lags:],
                                 self.forecast_steps)
        return [float(v) for v in out], False

    def _pipeline(self, record: FlowRecord,
                  objective: Objective) -> AllocationRecord:
        """Telemetry -> prediction -> optimization -> install, in bus order."""
        candidates = self.candidate_tunnels(record.intent)
        if not candidates:
            record.state = FlowState.FAILED
            record.reason = "no candidate tunnel between the flow's edges"
            self.bus.publish(TOPIC_FLOW_FAILED, {
                "flow_id": record.id, "reason": record.reason,
            })
            return None
        self.bus.publish(TOPIC_TELEMETRY_REQUEST, {
            "flow_id": record.id,
            "paths": [t.id for t in candidates],
            "window": self.n_lags,
            "available": {str(t.id): self.store.length(f"path:{t.id}:bandwidth")
                          for t in candidates},
        })
        forecasts: dict[int, list[float]] = {}
        fallback = False
        for tunnel in candidates:
            forecasts[tunnel.id], used_fallback = self._forecast_for(tunnel)
            fallback = fallback or used_fallback
        self.bus.publish(TOPIC_PREDICTION_READY, {
            "flow_id": record.id,
            "model": self.model_kind,
            "forecasts": {str(k): v for k, v in forecasts.items()},
            "fallback": fallback,
        })
        choices = [PathCandidate(t.id, tuple(forecasts[t.id]),
                                 path_latency(self.topo, t))
                   for t in candidates]
        chosen = select_path(choices, objective)
        objective_value = (chosen.latency_ms if objective == Objective.MIN_LATENCY
                           else min(chosen.forecast))
        self.bus.publish(TOPIC_PATH_SELECTED, {
            "flow_id": record.id,
            "tunnel_id": chosen.ref,
            "objective": str(objective.value),
            "objective_value": objective_value,
            "fallback": fallback,
        })
        previous = record.tunnel_id
        if previous is None:
            self._install(record, chosen.ref)
        elif previous != chosen.ref:
            self.migrate_flow(record.id, chosen.ref)
        allocation = AllocationRecord(
            flow_id=record.id,
            objective=str(objective.value),
            chosen_tunnel=chosen.ref,
            forecasts=forecasts,
            objective_value=objective_value,
            fallback=fallback,
        )
        record.allocations.append(allocation)
        return allocation

    def allocate_flow(self, flow_id: int) -> "Optional[AllocationRecord]":
        with self._lock:
            record = self._record(flow_id)
            if record.state != FlowState.PENDING:
                raise ControllerError(f"flow {flow_id} is {record.state.value}, "
                                      "not PENDING")
            if record.intent.pin_tunnel is not None:
                tunnel = self.topo.tunnels.get(record.intent.pin_tunnel)
                if tunnel is None:
                    raise ControllerError(
                        f"pinned tunnel {record.intent.pin_tunnel} does not exist"
                    )
                self._install(record, tunnel.id)
                allocation = AllocationRecord(
                    flow_id=record.id,
                    objective="pinned",
                    chosen_tunnel=tunnel.id,
                    forecasts={},
                    objective_value=0.0,
                    fallback=False,
                    pinned=True,
                )
                record.allocations.append(allocation)
                return allocation
            return self._pipeline(record, record.intent.objective)

    def reallocate_flow(self, flow_id: int,
                        objective: "Objective | None" = None
                        ) -> "Optional[AllocationRecord]":
        with self._lock:
            record = self._record(flow_id)
            if record.state != FlowState.ALLOCATED:
                raise ControllerError(
                    f"flow {flow_id} is {record.state.value}, not ALLOCATED"
                )
            return self._pipeline(record, objective or record.intent.objective)

    def migrate_flow(self, flow_id: int, tunnel_id: int) -> None:
        """Move a flow by rewriting its one PBR entry at the ingress edge."""
        with self._lock:
            record = self._record(flow_id)
            if record.state != FlowState.ALLOCATED:
                raise ControllerError(
                    f"cannot migrate flow {flow_id} in state {record.state.value}"
                )
            if record.tunnel_id == tunnel_id:
                return
            tunnel = self.topo.tunnels.get(tunnel_id)
            if tunnel is None:
                raise ControllerError(f"unknown tunnel {tunnel_id}")
            edge = self.topo.edge_of_host(record.intent.src_host)
            if tunnel.ingress != edge:
                raise ControllerError(
                    f"tunnel {tunnel_id} starts at {tunnel.ingress}, "
                    f"but flow {flow_id} enters at {edge}"
                )
            previous = record.tunnel_id
            self._install(record, tunnel_id)
            self.bus.publish(TOPIC_FLOW_MIGRATED, {
                "flow_id": flow_id,
                "from_tunnel": previous,
                "to_tunnel": tunnel_id,
            })

    # -- telemetry ----------------------------------------------------------

    def telemetry_tick(self) -> None:
        """Advance the simulation one step and store what it measured."""
        with self._lock:
            samples = self.sim.advance()
            self.store.extend(samples)
            self.bus.publish(TOPIC_TELEMETRY_TICK, {
                "t": self.sim.clock,
                "dt": self.sim.tick_seconds,
                "n_samples": len(samples),
            })

    # -- views ----------------------------------------------------------------

    def render_edge_config(self, edge: str) -> str:
        with self._lock:
            return netsim.render_edge_config(self.topo, edge)

    def topology_view(self) -> dict:
        with self._lock:
            return netsim.topology_view(self.topo, list(self.sim.flows.values()))

    def flows_view(self) -> "list[dict]":
        with self._lock:
            alloc = {}
            if any(f.active for f in self.sim.flows.values()):
                alloc = self.sim.allocations()
            out = []
            for fid in sorted(self.flows):
                record = self.flows[fid]
                out.append({
                    "id": fid,
                    "state": record.state.value,
                    "tunnel_id": record.tunnel_id,
                    "throughput_mbps": float(alloc.get(fid, 0)),
                    "src_host": record.intent.src_host,
                    "dst_host": record.intent.dst_host,
                    "protocol": record.intent.protocol,
                    "tos": record.intent.tos,
                    "demand_mbps": record.intent.demand_mbps,
                    "objective": str(record.intent.objective.value),
                    "reason": record.reason,
                })
            return out

    def _record(self, flow_id: int) -> FlowRecord:
        record = self.flows.get(flow_id)
        if record is None:
            raise KeyError(f"unknown flow {flow_id}")
        return record


# -- event-sourced replay -----------------------------------------------------

def replay_bus_log(messages: "list[BusMessage]", topo: Topology) -> Simulation:
    """Re-apply the mutating commands of a bus log onto a fresh topology.

    Only flow.requested (registration), pbr.installed (route writes) and
    telemetry.tick (time) change state; prediction and selection events
    are informational and are skipped.
    """
    sim = Simulation(topo)
    intents: dict[int, dict] = {}
    for message in messages:
        if message.topic == TOPIC_FLOW_REQUESTED:
            intents[message.payload["flow_id"]] = message.payload
        elif message.topic == TOPIC_PBR_INSTALLED:
            payload = message.payload
            match = PbrMatch(**payload["match"])
            netsim.set_pbr(topo, PbrRule(payload["edge"], match,
                                         payload["tunnel_id"],
                                         name=f"flow{payload['flow_id']}"))
            fid = payload["flow_id"]
            if fid not in sim.flows:
                intent = intents[fid]
                sim.add_flow(Flow(fid, intent["src_host"], intent["dst_host"],
                                  intent["protocol"], intent["tos"],
                                  intent["demand_mbps"]))
        elif message.topic == TOPIC_TELEMETRY_TICK:
            sim.advance(message.payload["dt"])
    return sim


def sim_fingerprint(sim: Simulation) -> dict:
    """Comparable snapshot of everything the replay is expected to rebuild."""
    alloc = {}
    if any(f.active for f in sim.flows.values()):
        alloc = {fid: str(v) for fid, v in sim.allocations().items()}
    return {
        "clock": sim.clock,
        "flows": [(f.id, f.src_host, f.dst_host, f.protocol, f.tos,
                   f.demand_mbps, f.active)
                  for f in sorted(sim.flows.values(), key=lambda f: f.id)],
        "rules": sorted(
            (edge, match.src_net, match.dst_addr, match.protocol, match.tos,
             rule.tunnel_id)
            for (edge, match), rule in sim.topo.rules.items()
        ),
        "allocations": alloc,
    }
