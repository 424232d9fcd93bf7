"""PolKA routeID lifecycle: node identifiers, path encoding and forwarding.

A core node owns an irreducible polynomial (its nodeID); an explicit
path is the list of (nodeID, output port) hops it should take.  The
route label is the CRT solution of routeID = portPoly (mod nodeID) over
all hops, so one fixed label drives every hop: a node recovers its own
output port as routeID mod nodeID and the label never changes in flight.
Edge nodes steer traffic into a tunnel but do not consume label bits;
only core hops take part in the CRT system.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .gf2poly import Gf2Poly, is_irreducible, irreducibles, crt


@dataclass(frozen=True)
class NodeId:
    """Per-node modulus polynomial plus a human label."""

    poly: Gf2Poly
    label: str = ""

    def __post_init__(self):
        d = self.poly.degree
        if not isinstance(d, int) or d < 1:
            raise ValueError(f"nodeID must have degree >= 1, got {self.poly!r}")
        if not is_irreducible(self.poly):
            raise ValueError(f"nodeID polynomial {self.poly!r} is not irreducible")


@dataclass(frozen=True)
class PortId:
    """Output port number and its binary-expansion polynomial."""

    number: int

    def __post_init__(self):
        if self.number < 0:
            raise ValueError("port number must be nonnegative")

    @property
    def poly(self) -> Gf2Poly:
        return Gf2Poly(self.number)


@dataclass(frozen=True)
class RouteId:
    """The path label embedded in packets; a plain polynomial value."""

    poly: Gf2Poly

    def to_binary(self) -> str:
        return self.poly.to_binary()

    @classmethod
    def from_binary(cls, s: str) -> "RouteId":
        return cls(Gf2Poly.from_binary(s))


def encode_port(number: int) -> PortId:
    """Port number -> PortId (the polynomial is the binary expansion)."""
    return PortId(number)


def decode_port(poly: Gf2Poly) -> int:
    """Port polynomial -> port number; inverse of encode_port."""
    return poly.bits


def gen_node_ids(
    count: int, max_ports: int, labels: "Sequence[str] | None" = None,
    max_degree: int = 16,
) -> "list[NodeId]":
    """Deterministically pick `count` distinct irreducible nodeIDs.

    Enumerates irreducibles in ascending degree then ascending bit
    pattern, skipping any too small to hold the node's port residues
    (2^deg must exceed max_ports).  The lone even irreducible t is
    skipped as well, keeping identifiers CRC-shaped (constant term 1).
    Distinct irreducibles are pairwise coprime, so any selection is
    CRT-safe.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if max_ports < 1:
        raise ValueError("max_ports must be >= 1")
    if labels is not None and len(labels) != count:
        raise ValueError("need exactly one label per nodeID")
    picked: list[NodeId] = []
    for p in irreducibles(max_degree):
        if p.bits & 1 and (1 << int(p.degree)) > max_ports:
            label = labels[len(picked)] if labels else f"s{len(picked) + 1}"
            picked.append(NodeId(p, label))
            if len(picked) == count:
                return picked
    raise ValueError(
        f"only {len(picked)} usable irreducibles of degree <= {max_degree}, "
        f"need {count}"
    )


def route_id_for_path(hops: "Iterable[tuple[NodeId, PortId]]") -> RouteId:
    """Compile an explicit core path into its routeID via the CRT."""
    hops = list(hops)
    if not hops:
        raise ValueError("path needs at least one hop")
    congruences = []
    for node, port in hops:
        if port.poly.degree >= node.poly.degree:
            raise ValueError(
                f"port {port.number} does not fit below nodeID {node.poly!r} "
                f"at {node.label or 'unlabelled node'}"
            )
        congruences.append((port.poly, node.poly))
    return RouteId(crt(congruences))


def forward(route: RouteId, node: NodeId) -> PortId:
    """One forwarding step: the output port is routeID mod nodeID."""
    return PortId(decode_port(route.poly % node.poly))


def verify_path(route: RouteId, hops: "Iterable[tuple[NodeId, PortId]]") -> bool:
    """True iff forwarding the route at every hop yields that hop's port."""
    return all(forward(route, node) == port for node, port in hops)


def parse_route_spec(spec: str) -> "list[tuple[str, int]]":
    """Parse the CLI route notation "NODE:port,NODE:port,..." into pairs.

    Errors carry the character position of the offending segment.
    """
    pairs = []
    pos = 0
    for segment in spec.split(","):
        part = segment.strip()
        if ":" not in part:
            raise ValueError(f"missing ':' in hop {part!r} at position {pos}")
        label, _, port_s = part.partition(":")
        label = label.strip()
        port_s = port_s.strip()
        if not label:
            raise ValueError(f"empty node label at position {pos}")
        if not port_s.isdigit():
            raise ValueError(f"bad port number {port_s!r} at position {pos}")
        pairs.append((label, int(port_s)))
        pos += len(segment) + 1
    return pairs
