"""Independent reference implementations used to pin expected values.

Everything here is deliberately naive (schoolbook loops, exhaustive
enumeration, grids) and shares no code with the package under test.
"""

from __future__ import annotations

from fractions import Fraction


# -- GF(2) polynomials as plain ints ---------------------------------------

def clmul(a: int, b: int) -> int:
    """Schoolbook carry-less multiply: XOR of shifted copies."""
    acc = 0
    k = 0
    while b >> k:
        if b >> k & 1:
            acc ^= a << k
        k += 1
    return acc


def poly_divmod(a: int, b: int) -> "tuple[int, int]":
    """Long division by repeatedly cancelling the leading term."""
    if b == 0:
        raise ZeroDivisionError
    q = 0
    while a.bit_length() >= b.bit_length():
        shift = a.bit_length() - b.bit_length()
        a ^= b << shift
        q ^= 1 << shift
    return q, a


def reducible_set(max_degree: int) -> "set[int]":
    """All reducible bit patterns of degree <= max_degree, by product table."""
    out: set[int] = set()
    top = 1 << (max_degree + 1)
    for a in range(2, top):
        da = a.bit_length() - 1
        for b in range(2, top):
            db = b.bit_length() - 1
            if da + db > max_degree:
                break
            out.add(clmul(a, b))
    return out


def crt_by_search(congruences: "list[tuple[int, int]]") -> "list[int]":
    """All bit patterns below the product degree satisfying every congruence."""
    total_deg = sum(m.bit_length() - 1 for _, m in congruences)
    hits = []
    for x in range(1 << total_deg):
        if all(poly_divmod(x, m)[1] == r for r, m in congruences):
            hits.append(x)
    return hits


# -- max-min fairness --------------------------------------------------------

def maxmin_bottleneck(flows: "dict[str, tuple[float, list[str]]]",
                      capacities: "dict[str, float]") -> "dict[str, Fraction]":
    """Bottleneck-removal water filling.

    flows: flow id -> (demand, list of link ids); capacities: link -> Mbps.
    Differs structurally from the progressive-filling implementation in
    the package: demand caps become private virtual links, then the
    tightest link is repeatedly saturated and removed.  The max-min
    allocation is unique, so both algorithms must agree exactly.
    """
    remaining: dict[str, Fraction] = {l: Fraction(c) for l, c in capacities.items()}
    members: dict[str, list[str]] = {}
    for f, (demand, links) in flows.items():
        virtual = f"demand::{f}"
        remaining[virtual] = Fraction(demand)
        members[f] = list(links) + [virtual]
    alloc: dict[str, Fraction] = {}
    live = set(flows)
    while live:
        shares = {}
        for link, cap in remaining.items():
            users = [f for f in live if link in members[f]]
            if users:
                shares[link] = (cap / len(users), users)
        bottleneck = min(shares, key=lambda l: (shares[l][0], l))
        level, users = shares[bottleneck]
        for f in users:
            alloc[f] = level
            for l in members[f]:
                remaining[l] -= level
            live.discard(f)
    return alloc
