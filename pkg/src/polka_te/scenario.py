"""Scripted experiment runner with report output.

Scenarios are data files: a topology reference, a timed action list
(start_flow / advance / reallocate / migrate), and declarative
assertions evaluated after the run.  The runner drives a fresh
controller headlessly, watches every migration for the single-rule
property, and writes a self-contained report directory: the telemetry
CSV, a summary JSON, the bus log for replay, rendered edge configs, and
figures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import netsim, plotting, telemetry
from .controller import Controller, FlowIntent, TOPIC_FLOW_MIGRATED
from .netsim import load_topology
from .optimizer import Objective

SCHEMA_VERSION = 1
BUNDLED_SCENARIOS = ("latency_migration", "flow_aggregation")


class ScenarioError(ValueError):
    pass


@dataclass
class MigrationAudit:
    """Differences in router state across one reallocate/migrate action."""

    flow: str
    at: float
    rules_changed: int
    tunnels_changed: int
    core_ids_changed: int
    from_tunnel: "int | None"
    to_tunnel: "int | None"


@dataclass
class AssertionResult:
    kind: str
    passed: bool
    detail: str

    def as_dict(self) -> dict:
        return {"kind": self.kind, "passed": self.passed, "detail": self.detail}


@dataclass
class ScenarioReport:
    name: str
    out_dir: "Path | None"
    metrics: dict
    assertions: "list[AssertionResult]"
    migrations: "list[MigrationAudit]"
    controller: Controller = field(repr=False, default=None)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def failures(self) -> "list[AssertionResult]":
        return [a for a in self.assertions if not a.passed]


def _bundled(name: str) -> Path:
    return Path(resources.files("polka_te") / "data" / name)


def load_script(name_or_path) -> dict:
    """Resolve a scenario by bundled name or filesystem path."""
    path = Path(str(name_or_path))
    if path.suffix == ".json" and path.exists():
        script = json.loads(path.read_text())
    elif str(name_or_path) in BUNDLED_SCENARIOS:
        script = json.loads(_bundled(f"{name_or_path}.json").read_text())
    else:
        raise ScenarioError(
            f"unknown scenario {name_or_path!r}; available: "
            + ", ".join(BUNDLED_SCENARIOS)
        )
    ats = [a.get("at", 0) for a in script.get("actions", [])]
    if ats != sorted(ats):
        raise ScenarioError("scenario actions must be time-ordered")
    return script


def resolve_topology(ref: str) -> netsim.Topology:
    path = Path(ref)
    if path.exists():
        return load_topology(path)
    bundled = _bundled(ref)
    if bundled.exists():
        return load_topology(bundled)
    raise ScenarioError(f"topology {ref!r} not found")


def _router_state(topo: netsim.Topology):
    rules = {key: rule.tunnel_id for key, rule in topo.rules.items()}
    tunnels = {tid: tuple(t.core_labels) for tid, t in topo.tunnels.items()}
    core_ids = {label: n.node_id.poly.bits for label, n in topo.nodes.items()
                if n.kind == "core"}
    return rules, tunnels, core_ids


def _diff_counts(before, after) -> "tuple[int, int, int]":
    out = []
    for b, a in zip(before, after):
        touched = set(b) ^ set(a)
        touched |= {k for k in set(b) & set(a) if b[k] != a[k]}
        out.append(len(touched))
    return tuple(out)


class ScenarioRunner:
    def __init__(self, script: dict, topo: "netsim.Topology | None" = None,
                 seed: "int | None" = None):
        self.script = script
        topo = topo or resolve_topology(script["topology"])
        self.controller = Controller(
            topo,
            model_kind=script.get("model", "RandomForest"),
            model_seed=seed if seed is not None else script.get("model_seed", 0),
        )
        self.flow_ids: dict[str, int] = {}
        self.migrations: list[MigrationAudit] = []

    def run(self) -> None:
        for action in self.script.get("actions", []):
            self._apply(action)

    def _apply(self, action: dict) -> None:
        op = action.get("op")
        at = action.get("at", 0)
        if self.controller.sim.clock != float(at):
            raise ScenarioError(
                f"action {op!r} scheduled at t={at} but clock is "
                f"{self.controller.sim.clock}"
            )
        if op == "start_flow":
            intent = FlowIntent(
                src_host=action["src"],
                dst_host=action["dst"],
                protocol=action["protocol"],
                tos=action["tos"],
                demand_mbps=action["demand_mbps"],
                objective=Objective(action.get("objective",
                                               "max_predicted_bandwidth")),
                pin_tunnel=action.get("tunnel"),
            )
            flow_id = self.controller.request_flow(intent)
            self.flow_ids[action["flow"]] = flow_id
            self.controller.run_pending()
        elif op == "advance":
            for _ in range(int(action["steps"])):
                self.controller.telemetry_tick()
        elif op in ("reallocate", "migrate"):
            flow_id = self._flow_id(action["flow"])
            before_state = _router_state(self.controller.topo)
            before_tunnel = self.controller.flows[flow_id].tunnel_id
            before_seq = len(self.controller.bus.messages())
            if op == "reallocate":
                objective = action.get("objective")
                self.controller.reallocate_flow(
                    flow_id, Objective(objective) if objective else None)
            else:
                self.controller.migrate_flow(flow_id, action["tunnel"])
            after_state = _router_state(self.controller.topo)
            migrated = any(
                m.topic == TOPIC_FLOW_MIGRATED
                for m in self.controller.bus.messages(since=before_seq))
            rules_d, tunnels_d, cores_d = _diff_counts(before_state, after_state)
            if migrated or rules_d or tunnels_d or cores_d:
                self.migrations.append(MigrationAudit(
                    flow=action["flow"],
                    at=self.controller.sim.clock,
                    rules_changed=rules_d,
                    tunnels_changed=tunnels_d,
                    core_ids_changed=cores_d,
                    from_tunnel=before_tunnel,
                    to_tunnel=self.controller.flows[flow_id].tunnel_id,
                ))
        else:
            raise ScenarioError(f"unknown scenario op {op!r}")

    def _flow_id(self, name: str) -> int:
        if name not in self.flow_ids:
            raise ScenarioError(f"scenario references unknown flow {name!r}")
        return self.flow_ids[name]

    # -- post-run evaluation ---------------------------------------------

    def series_value(self, series: str, at: float) -> float:
        for t, v in self.controller.store.series(series):
            if t == float(at):
                return v
        raise ScenarioError(f"series {series!r} has no sample at t={at}")

    def aggregate_throughput(self, at: float) -> float:
        total = 0.0
        for key in self.controller.store.series_keys():
            if key.startswith("flow:") and key.endswith(":throughput"):
                total += self.series_value(key, at)
        return total

    def check(self, assertion: dict) -> AssertionResult:
        kind = assertion["kind"]
        try:
            if kind == "series_value":
                value = self.series_value(assertion["series"], assertion["at"])
                return self._bounds(kind, value, assertion)
            if kind == "aggregate_throughput":
                value = self.aggregate_throughput(assertion["at"])
                return self._bounds(kind, value, assertion)
            if kind == "flow_tunnel":
                flow_id = self._flow_id(assertion["flow"])
                actual = self.controller.flows[flow_id].tunnel_id
                expected = assertion["tunnel"]
                return AssertionResult(
                    kind, actual == expected,
                    f"flow {assertion['flow']} on tunnel {actual}, "
                    f"expected {expected}")
            if kind == "single_rule_migrations":
                expected_n = assertion.get("expected_migrations")
                problems = [m for m in self.migrations
                            if m.rules_changed != 1 or m.tunnels_changed
                            or m.core_ids_changed]
                ok = not problems
                detail = (f"{len(self.migrations)} migrations, each touching "
                          "exactly one PBR rule and no core state")
                if problems:
                    detail = f"non-minimal migrations: {problems}"
                if expected_n is not None and len(self.migrations) != expected_n:
                    ok = False
                    detail += (f"; expected {expected_n} migrations, "
                               f"saw {len(self.migrations)}")
                return AssertionResult(kind, ok, detail)
            return AssertionResult(kind, False, f"unknown assertion kind {kind!r}")
        except (ScenarioError, KeyError) as exc:
            return AssertionResult(kind, False, str(exc))

    @staticmethod
    def _bounds(kind: str, value: float, assertion: dict) -> AssertionResult:
        tol = assertion.get("tol", 1e-9)
        ok = True
        parts = [f"value {value}"]
        if "equals" in assertion:
            ok &= abs(value - assertion["equals"]) <= tol
            parts.append(f"expected {assertion['equals']}")
        if "min" in assertion:
            ok &= value >= assertion["min"] - tol
            parts.append(f">= {assertion['min']}")
        if "max" in assertion:
            ok &= value <= assertion["max"] + tol
            parts.append(f"<= {assertion['max']}")
        return AssertionResult(kind, bool(ok), ", ".join(parts))


def run_scenario(name_or_path, out_dir=None, topo=None,
                 seed: "int | None" = None) -> ScenarioReport:
    """Execute a scenario headlessly and (optionally) write its report."""
    script = load_script(name_or_path)
    runner = ScenarioRunner(script, topo=topo, seed=seed)
    runner.run()
    results = [runner.check(a) for a in script.get("assertions", [])]
    metrics = _metrics(script, runner)
    report = ScenarioReport(
        name=script["name"],
        out_dir=Path(out_dir) if out_dir else None,
        metrics=metrics,
        assertions=results,
        migrations=runner.migrations,
        controller=runner.controller,
    )
    if out_dir:
        _write_report(report, script, runner)
    return report


def _metrics(script: dict, runner: ScenarioRunner) -> dict:
    ctl = runner.controller
    end = ctl.sim.clock
    metrics: dict = {"duration_s": end, "flows": len(ctl.flows)}
    migration_times = sorted(m.at for m in runner.migrations)
    if migration_times:
        first, last = migration_times[0], migration_times[-1]
        # migrations fire between ticks, so the sample AT the migration
        # clock is still pre-migration state
        before_t = first
        latencies = {
            key: (runner.series_value(key, before_t), runner.series_value(key, end))
            for key in ctl.store.series_keys()
            if key.startswith("flow:") and key.endswith(":latency")
        }
        metrics["latency_before_ms"] = {k: v[0] for k, v in latencies.items()}
        metrics["latency_after_ms"] = {k: v[1] for k, v in latencies.items()}
        metrics["aggregate_before_mbps"] = runner.aggregate_throughput(before_t)
        metrics["aggregate_after_mbps"] = runner.aggregate_throughput(end)
        metrics["first_migration_at"] = first
        metrics["last_migration_at"] = last
    if "testbed_measured_after_mbps" in script:
        metrics["testbed_measured_after_mbps"] = script["testbed_measured_after_mbps"]
        metrics["fluid_model_after_mbps"] = metrics.get("aggregate_after_mbps")
    return metrics


def _write_report(report: ScenarioReport, script: dict,
                  runner: ScenarioRunner) -> None:
    ctl = runner.controller
    out = report.out_dir
    out.mkdir(parents=True, exist_ok=True)
    series = {key: ctl.store.series(key) for key in ctl.store.series_keys()}
    telemetry.write_csv(out / "timeseries.csv", series)
    ctl.bus.save_ndjson(out / "events.ndjson")
    summary = {
        "schema_version": SCHEMA_VERSION,
        "scenario": report.name,
        "model": ctl.model_kind,
        "model_seed": ctl.model_seed,
        "metrics": report.metrics,
        "assertions": [a.as_dict() for a in report.assertions],
        "migrations": [
            {"flow": m.flow, "at": m.at, "rules_changed": m.rules_changed,
             "tunnels_changed": m.tunnels_changed,
             "core_ids_changed": m.core_ids_changed,
             "from_tunnel": m.from_tunnel, "to_tunnel": m.to_tunnel}
            for m in report.migrations
        ],
        "passed": report.passed,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2,
                                                 sort_keys=True) + "\n")
    edges = sorted({e for (e, _) in ctl.topo.rules})
    for edge in edges:
        (out / f"config_{edge}.txt").write_text(ctl.render_edge_config(edge))
    plotting.scenario_figures(series, out / "figures")
