"""Arithmetic for polynomials over GF(2).

A polynomial is stored as a nonnegative integer bit pattern: bit k set
means the coefficient of t^k is 1, so the integer 0b10000 is t^4.
Addition is XOR (characteristic 2), multiplication is carry-less, and
division is binary polynomial long division.  On top of the ring
operations the module provides the extended Euclidean algorithm,
modular inversion, an irreducibility test and the polynomial Chinese
Remainder Theorem, which together are everything the routeID codec
needs.

Values are immutable and capped at MAX_BITS coefficients; products
that would overflow the cap raise instead of silently wrapping.
"""

from __future__ import annotations

from typing import Iterable, Iterator

# Degree cap: routeIDs for realistic paths stay far below this, so any
# overflow is a usage bug and is reported as such.
MAX_BITS = 128

#: Degree of the zero polynomial.  Deliberately not -1 so that it can
#: never be confused with an index or silently used in arithmetic.
NEG_INF = float("-inf")


class NotInvertibleError(ValueError):
    """Raised when a modular inverse does not exist (inputs not coprime)."""


class Gf2Poly:
    """Immutable polynomial over GF(2), represented by an int bit pattern."""

    __slots__ = ("_bits",)

    def __init__(self, bits: int = 0):
        if bits < 0:
            raise ValueError("polynomial bit pattern must be nonnegative")
        if bits.bit_length() > MAX_BITS:
            raise OverflowError(
                f"polynomial needs {bits.bit_length()} bits, cap is {MAX_BITS}"
            )
        self._bits = bits

    # -- representation ------------------------------------------------

    @property
    def bits(self) -> int:
        return self._bits

    @classmethod
    def from_binary(cls, s: str) -> "Gf2Poly":
        """Parse an MSB-first binary coefficient string, e.g. "10000" = t^4."""
        s = s.strip()
        if not s or any(c not in "01" for c in s):
            raise ValueError(f"not a binary coefficient string: {s!r}")
        return cls(int(s, 2))

    def to_binary(self) -> str:
        """MSB-first binary coefficient string ("0" for the zero polynomial)."""
        return bin(self._bits)[2:]

    @classmethod
    def from_terms(cls, s: str) -> "Gf2Poly":
        """Parse human notation like "t^4 + t + 1"."""
        bits = 0
        for term in s.replace(" ", "").split("+"):
            if term == "0":
                continue
            elif term == "1":
                k = 0
            elif term == "t":
                k = 1
            elif term.startswith("t^"):
                k = int(term[2:])
            else:
                raise ValueError(f"bad polynomial term: {term!r}")
            if bits >> k & 1:
                raise ValueError(f"repeated term in polynomial: {term!r}")
            bits |= 1 << k
        return cls(bits)

    def to_terms(self) -> str:
        """Human notation, highest power first ("0" for the zero polynomial)."""
        if self._bits == 0:
            return "0"
        parts = []
        for k in range(self._bits.bit_length() - 1, -1, -1):
            if self._bits >> k & 1:
                parts.append("1" if k == 0 else "t" if k == 1 else f"t^{k}")
        return "+".join(parts)

    def __repr__(self) -> str:
        return f"Gf2Poly({self.to_terms()})"

    def __str__(self) -> str:
        return self.to_binary()

    # -- value semantics -----------------------------------------------

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Gf2Poly):
            return self._bits == other._bits
        return NotImplemented

    def __hash__(self) -> int:
        return hash(("Gf2Poly", self._bits))

    def __bool__(self) -> bool:
        return self._bits != 0

    @property
    def degree(self) -> "int | float":
        """Index of the highest set coefficient; NEG_INF for the zero polynomial."""
        return self._bits.bit_length() - 1 if self._bits else NEG_INF

    # -- ring operations -------------------------------------------------

    def __add__(self, other: "Gf2Poly") -> "Gf2Poly":
        return Gf2Poly(self._bits ^ other._bits)

    __sub__ = __add__  # characteristic 2: subtraction is addition

    def __mul__(self, other: "Gf2Poly") -> "Gf2Poly":
        a, b = self._bits, other._bits
        if a and b and (a.bit_length() - 1) + (b.bit_length() - 1) >= MAX_BITS:
            raise OverflowError("product exceeds the polynomial width cap")
        acc = 0
        while b:
            if b & 1:
                acc ^= a
            a <<= 1
            b >>= 1
        return Gf2Poly(acc)

    def __divmod__(self, other: "Gf2Poly") -> "tuple[Gf2Poly, Gf2Poly]":
        if other._bits == 0:
            raise ZeroDivisionError("division by zero polynomial")
        a, b = self._bits, other._bits
        m, n = a.bit_length() - 1, b.bit_length() - 1
        if m < n:
            return Gf2Poly(0), Gf2Poly(a)
        q = 0
        b <<= m - n
        for i in range(m - n + 1):
            q <<= 1
            if a >> (m - i) & 1:
                a ^= b
                q |= 1
            b >>= 1
        return Gf2Poly(q), Gf2Poly(a)

    def __floordiv__(self, other: "Gf2Poly") -> "Gf2Poly":
        return divmod(self, other)[0]

    def __mod__(self, other: "Gf2Poly") -> "Gf2Poly":
        return divmod(self, other)[1]


ZERO = Gf2Poly(0)
ONE = Gf2Poly(1)


def gcd_ext(a: Gf2Poly, b: Gf2Poly) -> "tuple[Gf2Poly, Gf2Poly, Gf2Poly]":
    """Extended Euclid: return (g, u, v) with u*a + v*b = g = gcd(a, b)."""
    if not a and not b:
        raise ValueError("gcd of two zero polynomials is undefined")
    r0, r1 = a, b
    u0, u1 = ONE, ZERO
    v0, v1 = ZERO, ONE
    while r1:
        q, r = divmod(r0, r1)
        r0, r1 = r1, r
        u0, u1 = u1, u0 + q * u1
        v0, v1 = v1, v0 + q * v1
    return r0, u0, v0


def gcd(a: Gf2Poly, b: Gf2Poly) -> Gf2Poly:
    while b:
        a, b = b, a % b
    return a


def inv_mod(a: Gf2Poly, m: Gf2Poly) -> Gf2Poly:
    """Inverse of a modulo m, i.e. the x of degree < deg(m) with x*a = 1 (mod m)."""
    if m.degree < 1:
        raise ValueError("modulus must have degree >= 1")
    g, u, _ = gcd_ext(a, m)
    if g != ONE:
        raise NotInvertibleError(f"{a!r} is not invertible modulo {m!r}")
    return u % m


def is_irreducible(p: Gf2Poly) -> bool:
    """Trial-division irreducibility test, fine for the degrees in play here."""
    d = p.degree
    if d is NEG_INF or d < 1:
        raise ValueError("irreducibility is only defined for degree >= 1")
    for bits in range(2, 1 << (int(d) // 2 + 1)):
        if not p % Gf2Poly(bits):
            return False
    return True


def irreducibles(max_degree: int) -> Iterator[Gf2Poly]:
    """Yield all irreducible polynomials of degree 1..max_degree.

    Ordering is ascending degree, then ascending bit pattern, which makes
    anything built on top of the stream reproducible.
    """
    for bits in range(2, 1 << (max_degree + 1)):
        p = Gf2Poly(bits)
        if is_irreducible(p):
            yield p


def crt(congruences: "Iterable[tuple[Gf2Poly, Gf2Poly]]") -> Gf2Poly:
    """Solve x = r_i (mod m_i) for pairwise-coprime moduli.

    Returns the unique solution of degree < sum(deg(m_i)).
    """
    pairs = list(congruences)
    if not pairs:
        raise ValueError("need at least one congruence")
    for r, m in pairs:
        if m.degree is NEG_INF or m.degree < 1:
            raise ValueError("crt moduli must have degree >= 1")
        if not (r.degree is NEG_INF or r.degree < m.degree):
            raise ValueError(f"residue {r!r} not reduced modulo {m!r}")
    for i in range(len(pairs)):
        for j in range(i + 1, len(pairs)):
            if gcd(pairs[i][1], pairs[j][1]) != ONE:
                raise ValueError(
                    f"moduli {pairs[i][1]!r} and {pairs[j][1]!r} are not coprime"
                )
    total = ONE
    for _, m in pairs:
        total = total * m
    x = ZERO
    for r, m in pairs:
        others = total // m
        x = x + r * others * inv_mod(others, m)
    return x % total
