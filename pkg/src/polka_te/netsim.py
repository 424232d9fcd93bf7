"""Deterministic fluid-flow network simulator.

Models a capacitated, latency-annotated topology with explicit-path
tunnels compiled to PolKA routeIDs, policy-based routing at the edges,
and instantaneous max-min fair bandwidth sharing.  Allocation math runs
on exact rationals so capacity conservation holds to the bit, and every
query is a pure function of the configured state, which makes runs
replayable.

The link sequence a flow is charged for is obtained by iterating the
PolKA forwarding operation over its tunnel's routeID, not by trusting
the configured hop list, so the simulator exercises the same per-hop
mod operation a real core would.
"""

from __future__ import annotations

import ipaddress
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional

from .gf2poly import Gf2Poly
from . import polka
from .polka import NodeId, PortId, RouteId
from .telemetry import TelemetrySample

DEFAULT_LATENCY_MS = 1.0


class TopologyError(ValueError):
    """Malformed topology document or inconsistent router configuration."""


class UnroutableFlowError(ValueError):
    """An active flow has no usable PBR rule or tunnel."""


@dataclass
class Node:
    label: str
    kind: str  # core | edge | host
    addr: Optional[str] = None
    node_id: Optional[NodeId] = None


@dataclass
class Link:
    a: str
    b: str
    capacity_mbps: float
    latency_ms: float = DEFAULT_LATENCY_MS

    def __post_init__(self):
        if self.capacity_mbps <= 0:
            raise TopologyError(f"link {self.a}-{self.b}: capacity must be > 0")
        if self.latency_ms < 0:
            raise TopologyError(f"link {self.a}-{self.b}: latency must be >= 0")

    @property
    def name(self) -> str:
        return f"{self.a}-{self.b}"


@dataclass
class Tunnel:
    id: int
    ingress: str
    egress: str
    core_labels: "list[str]"
    hops: "list[tuple[NodeId, PortId]]"
    route_id: RouteId


@dataclass(frozen=True)
class PbrMatch:
    src_net: str
    dst_addr: str
    protocol: int
    tos: int


@dataclass(frozen=True)
class PbrRule:
    edge: str
    match: PbrMatch
    tunnel_id: int
    name: str = ""


@dataclass
class Flow:
    id: int
    src_host: str
    dst_host: str
    protocol: int
    tos: int
    demand_mbps: float
    active: bool = True

    def __post_init__(self):
        if self.demand_mbps <= 0:
            raise ValueError(f"flow {self.id}: demand must be > 0")


class Topology:
    """Validated graph plus tunnels and edge PBR state."""

    def __init__(self, name: str, nodes: "Iterable[Node]", links: "Iterable[Link]"):
        self.name = name
        self.nodes: dict[str, Node] = {}
        for node in nodes:
            if node.label in self.nodes:
                raise TopologyError(f"duplicate node label {node.label!r}")
            if node.kind not in ("core", "edge", "host"):
                raise TopologyError(f"{node.label}: unknown kind {node.kind!r}")
            self.nodes[node.label] = node
        if not self.nodes:
            raise TopologyError("topology has no nodes")
        self.links: list[Link] = []
        # port numbers are per node, assigned in document order, from 1;
        # port 0 stays reserved for local delivery
        self._port_of: dict[tuple[str, str], int] = {}
        self._neighbor_at: dict[tuple[str, int], str] = {}
        self._link_by_pair: dict[frozenset, Link] = {}
        for link in links:
            self._add_link(link)
        self._check_connected()
        self.tunnels: dict[int, Tunnel] = {}
        self.rules: dict[tuple[str, PbrMatch], PbrRule] = {}

    # -- construction ----------------------------------------------------

    def _add_link(self, link: Link) -> None:
        for end in (link.a, link.b):
            if end not in self.nodes:
                raise TopologyError(f"link {link.name} references unknown node {end!r}")
        pair = frozenset((link.a, link.b))
        if link.a == link.b or pair in self._link_by_pair:
            raise TopologyError(f"bad or duplicate link {link.name}")
        self.links.append(link)
        self._link_by_pair[pair] = link
        for here, there in ((link.a, link.b), (link.b, link.a)):
            port = self.port_count(here) + 1
            self._port_of[(here, there)] = port
            self._neighbor_at[(here, port)] = there

    def _check_connected(self) -> None:
        if not self.links and len(self.nodes) > 1:
            raise TopologyError("topology is not connected")
        seen = set()
        stack = [next(iter(self.nodes))]
        while stack:
            here = stack.pop()
            if here in seen:
                continue
            seen.add(here)
            stack.extend(t for (h, t) in self._port_of if h == here)
        missing = set(self.nodes) - seen
        if missing:
            raise TopologyError(f"topology is not connected; unreachable: {sorted(missing)}")

    def assign_node_ids(self, explicit: "dict[str, str] | None" = None) -> None:
        """Give every core node its modulus polynomial.

        Cores named in `explicit` get the given binary pattern; the rest
        are generated deterministically, sized to the widest port fan-out.
        """
        explicit = explicit or {}
        cores = [n for n in self.nodes.values() if n.kind == "core"]
        for label, pattern in explicit.items():
            node = self.nodes.get(label)
            if node is None or node.kind != "core":
                raise TopologyError(f"node_id given for non-core node {label!r}")
            node.node_id = NodeId(Gf2Poly.from_binary(pattern), label)
        pending = [n for n in cores if n.node_id is None]
        if pending:
            max_ports = max(self.port_count(n.label) for n in cores)
            taken = {n.node_id.poly for n in cores if n.node_id}
            generated = polka.gen_node_ids(
                len(pending) + len(taken), max_ports,
            )
            fresh = [g for g in generated if g.poly not in taken]
            for node, gen in zip(pending, fresh):
                node.node_id = NodeId(gen.poly, node.label)
        seen: dict[Gf2Poly, str] = {}
        generated_labels = {n.label for n in pending}
        for node in cores:
            if node.node_id.poly in seen:
                raise TopologyError(
                    f"nodeID of {node.label} duplicates {seen[node.node_id.poly]}; "
                    "identifiers must be pairwise coprime"
                )
            seen[node.node_id.poly] = node.label
            # generated ids must cover the node's whole fan-out; pinned ids
            # only need to fit the ports tunnels actually use, which
            # route compilation checks hop by hop
            if (node.label in generated_labels
                    and (1 << node.node_id.poly.degree) <= self.port_count(node.label)):
                raise TopologyError(
                    f"nodeID of {node.label} too small for {self.port_count(node.label)} ports"
                )

    # -- lookups -----------------------------------------------------------

    def port_count(self, label: str) -> int:
        return sum(1 for (here, _) in self._port_of if here == label)

    def port_toward(self, here: str, there: str) -> int:
        try:
            return self._port_of[(here, there)]
        except KeyError:
            raise TopologyError(f"no link between {here} and {there}") from None

    def neighbor_at(self, here: str, port: int) -> str:
        try:
            return self._neighbor_at[(here, port)]
        except KeyError:
            raise TopologyError(f"{here} has no port {port}") from None

    def link_between(self, a: str, b: str) -> Link:
        try:
            return self._link_by_pair[frozenset((a, b))]
        except KeyError:
            raise TopologyError(f"no link between {a} and {b}") from None

    def node_id(self, label: str) -> NodeId:
        node = self.nodes[label]
        if node.node_id is None:
            raise TopologyError(f"{label} has no nodeID assigned")
        return node.node_id

    def edge_of_host(self, host: str) -> str:
        node = self.nodes.get(host)
        if node is None or node.kind != "host":
            raise TopologyError(f"{host!r} is not a host")
        edges = [t for (h, t) in self._port_of
                 if h == host and self.nodes[t].kind == "edge"]
        if len(edges) != 1:
            raise TopologyError(f"host {host} must attach to exactly one edge")
        return edges[0]

    def host_addr(self, host: str) -> ipaddress.IPv4Interface:
        addr = self.nodes[host].addr
        if not addr:
            raise TopologyError(f"host {host} has no address")
        return ipaddress.ip_interface(addr)


def add_tunnel(topo: Topology, ingress: str, egress: str,
               core_labels: "list[str]", tunnel_id: "int | None" = None) -> Tunnel:
    """Compile an explicit core path into a tunnel with its routeID."""
    for end, role in ((ingress, "ingress"), (egress, "egress")):
        if end not in topo.nodes or topo.nodes[end].kind != "edge":
            raise TopologyError(f"{role} {end!r} is not an edge node")
    if not core_labels:
        raise TopologyError("tunnel needs at least one core hop")
    for label in core_labels:
        if topo.nodes.get(label) is None or topo.nodes[label].kind != "core":
            raise TopologyError(f"tunnel hop {label!r} is not a core node")
    hops: list[tuple[NodeId, PortId]] = []
    walk = [ingress] + core_labels + [egress]
    for here, there in zip(walk[:-1], walk[1:]):
        topo.port_toward(here, there)  # adjacency check for every segment
    for i, label in enumerate(core_labels):
        nxt = core_labels[i + 1] if i + 1 < len(core_labels) else egress
        hops.append((topo.node_id(label),
                     polka.encode_port(topo.port_toward(label, nxt))))
    if tunnel_id is None:
        tunnel_id = max(topo.tunnels, default=0) + 1
    if tunnel_id in topo.tunnels:
        raise TopologyError(f"tunnel id {tunnel_id} already exists")
    tunnel = Tunnel(tunnel_id, ingress, egress, list(core_labels), hops,
                    polka.route_id_for_path(hops))
    topo.tunnels[tunnel_id] = tunnel
    return tunnel


def set_pbr(topo: Topology, rule: PbrRule) -> None:
    """Install an edge PBR rule, replacing any rule with the same match.

    Swapping the tunnel of an existing match is the migration primitive.
    """
    tunnel = topo.tunnels.get(rule.tunnel_id)
    if tunnel is None:
        raise TopologyError(f"PBR references unknown tunnel {rule.tunnel_id}")
    if tunnel.ingress != rule.edge:
        raise TopologyError(
            f"tunnel {rule.tunnel_id} starts at {tunnel.ingress}, not {rule.edge}"
        )
    topo.rules[(rule.edge, rule.match)] = rule


def tunnel_link_path(topo: Topology, tunnel: Tunnel) -> "list[tuple[str, str]]":
    """Directed edge-to-edge link sequence, derived by PolKA forwarding.

    Starts at the ingress edge and repeatedly applies routeID mod nodeID
    at each core; a port of 0 means deliver locally and ends the walk.
    """
    path = [(tunnel.ingress, tunnel.core_labels[0])]
    here = tunnel.core_labels[0]
    while topo.nodes[here].kind == "core":
        port = polka.forward(tunnel.route_id, topo.node_id(here)).number
        if port == 0:
            break
        there = topo.neighbor_at(here, port)
        path.append((here, there))
        here = there
    return path


def path_latency(topo: Topology, tunnel: Tunnel) -> float:
    """Sum of link latencies along the edge-to-edge tunnel path, in ms."""
    return sum(topo.link_between(a, b).latency_ms
               for a, b in tunnel_link_path(topo, tunnel))


def match_rule(topo: Topology, flow: Flow) -> PbrRule:
    """Resolve the one PBR rule steering a flow at its ingress edge."""
    edge = topo.edge_of_host(flow.src_host)
    src = topo.host_addr(flow.src_host)
    dst = topo.host_addr(flow.dst_host)
    candidates = []
    for (rule_edge, match), rule in topo.rules.items():
        if rule_edge != edge:
            continue
        net = ipaddress.ip_network(match.src_net, strict=False)
        if (src.ip in net and dst.ip == ipaddress.ip_address(match.dst_addr)
                and match.protocol == flow.protocol and match.tos == flow.tos):
            candidates.append((net.prefixlen, rule))
    if not candidates:
        raise UnroutableFlowError(
            f"flow {flow.id} ({flow.src_host}->{flow.dst_host} "
            f"proto {flow.protocol} tos {flow.tos}) matches no PBR rule at {edge}"
        )
    best = max(p for p, _ in candidates)
    winners = [r for p, r in candidates if p == best]
    if len(winners) > 1:
        raise TopologyError(
            f"flow {flow.id} matches {len(winners)} equally specific rules at {edge}"
        )
    return winners[0]


def flow_link_path(topo: Topology, flow: Flow) -> "list[tuple[str, str]]":
    """Host-to-host directed link sequence for a routed flow."""
    rule = match_rule(topo, flow)
    tunnel = topo.tunnels[rule.tunnel_id]
    ingress = topo.edge_of_host(flow.src_host)
    egress_host_edge = topo.edge_of_host(flow.dst_host)
    if tunnel.egress != egress_host_edge:
        raise UnroutableFlowError(
            f"flow {flow.id}: tunnel {tunnel.id} delivers to {tunnel.egress}, "
            f"but {flow.dst_host} hangs off {egress_host_edge}"
        )
    return ([(flow.src_host, ingress)]
            + tunnel_link_path(topo, tunnel)
            + [(tunnel.egress, flow.dst_host)])


def compute_allocations(topo: Topology, flows: "list[Flow]") -> "dict[int, Fraction]":
    """Max-min fair allocation by progressive filling, demand-capped.

    Exact rational arithmetic: the capacity invariant holds with no
    floating-point slack.  Each direction of a link has the full link
    capacity (full duplex).
    """
    active = sorted((f for f in flows if f.active), key=lambda f: f.id)
    seen_match = {}
    for f in active:
        key = (f.protocol, f.tos, f.src_host, f.dst_host)
        if key in seen_match:
            raise ValueError(
                f"flows {seen_match[key]} and {f.id} duplicate match tuple {key}"
            )
        seen_match[key] = f.id
    paths = {f.id: flow_link_path(topo, f) for f in active}
    remaining: dict[tuple[str, str], Fraction] = {}
    for f in active:
        for seg in paths[f.id]:
            if seg not in remaining:
                remaining[seg] = Fraction(topo.link_between(*seg).capacity_mbps)
    alloc = {f.id: Fraction(0) for f in active}
    demand = {f.id: Fraction(f.demand_mbps) for f in active}
    unfrozen = [f.id for f in active]
    while unfrozen:
        # flows pinned by an already-saturated link stop where they are
        unfrozen = [fid for fid in unfrozen
                    if all(remaining[seg] > 0 for seg in paths[fid])]
        if not unfrozen:
            break
        users: dict[tuple[str, str], int] = {}
        for fid in unfrozen:
            for seg in paths[fid]:
                users[seg] = users.get(seg, 0) + 1
        inc = min(demand[fid] - alloc[fid] for fid in unfrozen)
        for seg, n in users.items():
            inc = min(inc, remaining[seg] / n)
        for fid in unfrozen:
            alloc[fid] += inc
        for seg, n in users.items():
            remaining[seg] -= inc * n
        unfrozen = [fid for fid in unfrozen if alloc[fid] < demand[fid]]
    return alloc


def link_usage(topo: Topology, flows: "list[Flow]",
               alloc: "dict[int, Fraction] | None" = None
               ) -> "dict[tuple[str, str], Fraction]":
    """Directed usage per link segment under the max-min allocation."""
    active = [f for f in flows if f.active]
    if alloc is None:
        alloc = compute_allocations(topo, flows)
    usage: dict[tuple[str, str], Fraction] = {}
    for f in active:
        for seg in flow_link_path(topo, f):
            usage[seg] = usage.get(seg, Fraction(0)) + alloc[f.id]
    return usage


class Simulation:
    """Topology plus flows and a clock, stepped by `advance`."""

    def __init__(self, topo: Topology, tick_seconds: float = 1.0):
        self.topo = topo
        self.tick_seconds = tick_seconds
        self.clock = 0.0
        self.flows: dict[int, Flow] = {}

    def add_flow(self, flow: Flow) -> None:
        if flow.id in self.flows:
            raise ValueError(f"flow id {flow.id} already exists")
        key = (flow.protocol, flow.tos, flow.src_host, flow.dst_host)
        for other in self.flows.values():
            if other.active and key == (other.protocol, other.tos,
                                        other.src_host, other.dst_host):
                raise ValueError(
                    f"flow {other.id} already uses match tuple {key}"
                )
        self.flows[flow.id] = flow

    def active_flows(self) -> "list[Flow]":
        return sorted((f for f in self.flows.values() if f.active),
                      key=lambda f: f.id)

    def allocations(self) -> "dict[int, Fraction]":
        return compute_allocations(self.topo, list(self.flows.values()))

    def available_bandwidth(self, tunnel: Tunnel,
                            usage: "dict[tuple[str, str], Fraction] | None" = None
                            ) -> Fraction:
        """Headroom of the tunnel: min remaining capacity along its path."""
        if usage is None:
            usage = link_usage(self.topo, list(self.flows.values()))
        room = None
        for seg in tunnel_link_path(self.topo, tunnel):
            cap = Fraction(self.topo.link_between(*seg).capacity_mbps)
            left = cap - usage.get(seg, Fraction(0))
            room = left if room is None else min(room, left)
        return room if room is not None else Fraction(0)

    def advance(self, dt: float = None) -> "list[TelemetrySample]":
        """Step the clock, recompute sharing, and emit one telemetry batch."""
        if dt is None:
            dt = self.tick_seconds
        if dt <= 0:
            raise ValueError("dt must be > 0")
        self.clock += dt
        flows = list(self.flows.values())
        alloc = compute_allocations(self.topo, flows)
        usage = link_usage(self.topo, flows, alloc)
        t = self.clock
        samples = []
        for f in self.active_flows():
            samples.append(TelemetrySample(f"flow:{f.id}:throughput", t,
                                           float(alloc[f.id])))
        for f in self.active_flows():
            tunnel = self.topo.tunnels[match_rule(self.topo, f).tunnel_id]
            samples.append(TelemetrySample(f"flow:{f.id}:latency", t,
                                           path_latency(self.topo, tunnel)))
        for link in self.topo.links:
            load = max(usage.get((link.a, link.b), Fraction(0)),
                       usage.get((link.b, link.a), Fraction(0)))
            samples.append(TelemetrySample(f"link:{link.name}:utilization", t,
                                           float(load / Fraction(link.capacity_mbps))))
        for tid in sorted(self.topo.tunnels):
            tunnel = self.topo.tunnels[tid]
            samples.append(TelemetrySample(f"path:{tid}:bandwidth", t,
                                           float(self.available_bandwidth(tunnel, usage))))
            samples.append(TelemetrySample(f"path:{tid}:latency", t,
                                           path_latency(self.topo, tunnel)))
        return samples


# -- topology documents ------------------------------------------------------

def load_topology(source) -> Topology:
    """Build a Topology from a .topo JSON document (path, str, or dict)."""
    if isinstance(source, (str, Path)):
        doc = json.loads(Path(source).read_text())
    else:
        doc = source
    try:
        raw_nodes = doc["nodes"]
        raw_links = doc.get("links", [])
    except (TypeError, KeyError) as exc:
        raise TopologyError(f"topology document missing section: {exc}") from exc
    nodes = [Node(n["label"], n.get("kind", "core"), n.get("addr"))
             for n in raw_nodes]
    links = [Link(l["a"], l["b"], l["capacity_mbps"],
                  l.get("latency_ms", DEFAULT_LATENCY_MS))
             for l in raw_links]
    topo = Topology(doc.get("name", "unnamed"), nodes, links)
    explicit = {n["label"]: n["node_id"] for n in raw_nodes if n.get("node_id")}
    topo.assign_node_ids(explicit)
    for t in doc.get("tunnels", []):
        add_tunnel(topo, t["ingress"], t["egress"], t["core_path"], t.get("id"))
    return topo


def topology_view(topo: Topology, flows: "list[Flow] | None" = None) -> dict:
    """JSON-friendly snapshot of the topology with live utilization."""
    usage = link_usage(topo, flows or [])
    return {
        "name": topo.name,
        "nodes": [
            {"label": n.label, "kind": n.kind, "addr": n.addr,
             "node_id": n.node_id.poly.to_binary() if n.node_id else None}
            for n in topo.nodes.values()
        ],
        "links": [
            {"a": l.a, "b": l.b, "capacity_mbps": l.capacity_mbps,
             "latency_ms": l.latency_ms,
             "utilization": float(
                 max(usage.get((l.a, l.b), Fraction(0)),
                     usage.get((l.b, l.a), Fraction(0))) / Fraction(l.capacity_mbps))}
            for l in topo.links
        ],
        "tunnels": [
            {"id": t.id, "ingress": t.ingress, "egress": t.egress,
             "core_path": t.core_labels, "route_id": t.route_id.to_binary(),
             "latency_ms": path_latency(topo, t)}
            for t in topo.tunnels.values()
        ],
    }


# -- edge configuration rendering ---------------------------------------------

def render_edge_config(topo: Topology, edge: str) -> str:
    """Human-readable router configuration for one edge node.

    The layout mirrors classic access-list / tunnel-interface / PBR
    blocks: one access list and one PBR binding per installed rule, one
    tunnel interface per referenced tunnel.  It is documentation output,
    not any router's exact syntax.
    """
    if edge not in topo.nodes or topo.nodes[edge].kind != "edge":
        raise TopologyError(f"{edge!r} is not an edge node")
    rules = sorted((r for (e, _), r in topo.rules.items() if e == edge),
                   key=lambda r: (r.name, r.tunnel_id))
    lines = [f"hostname {edge}", "!"]
    for rule in rules:
        lines += [
            f"access-list {rule.name}",
            f" permit {rule.match.protocol} {rule.match.src_net} all "
            f"{rule.match.dst_addr}/32 all tos {rule.match.tos}",
            "!",
        ]
    for tid in sorted({r.tunnel_id for r in rules}):
        tunnel = topo.tunnels[tid]
        dest = topo.nodes[tunnel.egress].addr or tunnel.egress
        lines += [
            f"interface tunnel{tid}",
            " tunnel mode polka",
            f" tunnel destination {dest}",
            f" tunnel domain-name {' '.join(tunnel.core_labels)}",
            f" tunnel route-id {tunnel.route_id.to_binary()}",
            "!",
        ]
    for rule in rules:
        lines.append(
            f"policy-based-routing {rule.name} tunnel {rule.tunnel_id} "
            f"nexthop 30.30.{rule.tunnel_id}.2"
        )
    return "\n".join(lines) + "\n"
