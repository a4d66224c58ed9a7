"""Midpoint-radius ("ball") arithmetic over exact dyadics.

A :class:`Ball` ``<c, r>`` stands for every real in ``[c - r, c + r]``.  All
operations return a ball containing every possible result for inputs drawn
from the operand balls.  Centers are exact; radii are rounded upward to a
short mantissa so that they never dominate the cost of a computation.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Iterable, Sequence

from .dyadic import ZERO, Dyadic, dy
from .errors import DomainError

RADIUS_BITS = 30
# precision used when a non-dyadic rational enters ball arithmetic
ENCLOSE_BITS = 96


def _up(r: Dyadic) -> Dyadic:
    return r.round_sig(RADIUS_BITS, "ceil")


class Ball:
    __slots__ = ("c", "r")

    def __init__(self, center=0, radius=0):
        c = dy(center)
        r = dy(radius)
        if r.m < 0:
            raise DomainError("ball radius must be nonnegative")
        self.c = c
        self.r = _up(r)

    # construction ------------------------------------------------------

    @classmethod
    def exact(cls, x) -> "Ball":
        return cls(x, 0)

    @classmethod
    def coerce(cls, x) -> "Ball":
        """Exact ball for dyadic input; a 2**-ENCLOSE_BITS ball around other rationals."""
        if isinstance(x, Ball):
            return x
        if isinstance(x, (Fraction, str)):
            q = Fraction(x.strip()) if isinstance(x, str) and not x.strip().endswith("b") else x
            if isinstance(q, Fraction) and q.denominator & (q.denominator - 1):
                return cls.enclose_fraction(q, ENCLOSE_BITS)
        return cls(dy(x), 0)

    @classmethod
    def from_interval(cls, lo, hi) -> "Ball":
        lo, hi = dy(lo), dy(hi)
        if lo > hi:
            raise DomainError("empty interval")
        c = (lo + hi).half()
        return cls(c, c - lo)

    @classmethod
    def enclose_fraction(cls, q: Fraction, bits: int) -> "Ball":
        """Ball with a ``bits``-bit center containing the rational ``q``."""
        num, den = q.numerator, q.denominator
        c = Dyadic.quotient(Dyadic(num), Dyadic(den), bits)
        return cls(c, Dyadic(1, -bits - 1) if c.to_fraction() != q else 0)

    # accessors ---------------------------------------------------------

    @property
    def lower(self) -> Dyadic:
        return self.c - self.r

    @property
    def upper(self) -> Dyadic:
        return self.c + self.r

    def mag(self) -> Dyadic:
        """Upper bound of ``|x|`` over the ball."""
        return abs(self.c) + self.r

    def mig(self) -> Dyadic:
        """Lower bound of ``|x|`` over the ball (0 if the ball straddles 0)."""
        d = abs(self.c) - self.r
        return d if d.m > 0 else ZERO

    def is_exact(self) -> bool:
        return self.r.m == 0

    def contains(self, x) -> bool:
        if isinstance(x, Ball):
            return self.lower <= x.lower and x.upper <= self.upper
        if isinstance(x, Fraction):
            return self.lower.to_fraction() <= x <= self.upper.to_fraction()
        x = dy(x)
        return self.lower <= x <= self.upper

    def overlaps(self, other: "Ball") -> bool:
        return abs(self.c - other.c) <= self.r + other.r

    def dist(self, x) -> Dyadic:
        """|center - x| for a dyadic x."""
        return abs(self.c - dy(x))

    def hull(self, other: "Ball") -> "Ball":
        return Ball.from_interval(min(self.lower, other.lower), max(self.upper, other.upper))

    def intersect(self, lo, hi) -> "Ball":
        """Intersect with a known enclosure [lo, hi] of the same value."""
        lo, hi = dy(lo), dy(hi)
        a, b = max(self.lower, lo), min(self.upper, hi)
        if a > b:
            raise DomainError("ball does not meet the claimed enclosure")
        if a == self.lower and b == self.upper:
            return self
        return Ball.from_interval(a, b)

    def widen(self, extra) -> "Ball":
        return Ball(self.c, self.r + dy(extra))

    def __float__(self):
        return float(self.c)

    # arithmetic --------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Ball):
            if isinstance(other, (int, Dyadic)):
                return Ball(self.c + other, self.r)
            return NotImplemented
        return Ball(self.c + other.c, self.r + other.r)

    __radd__ = __add__

    def __neg__(self):
        b = Ball.__new__(Ball)
        b.c = -self.c
        b.r = self.r
        return b

    def __sub__(self, other):
        if not isinstance(other, Ball):
            if isinstance(other, (int, Dyadic)):
                return Ball(self.c - other, self.r)
            return NotImplemented
        return Ball(self.c - other.c, self.r + other.r)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Ball):
            if isinstance(other, int):
                other = Dyadic(other)
            if isinstance(other, Dyadic):
                return Ball(self.c * other, self.r * abs(other))
            return NotImplemented
        r = abs(self.c) * other.r + abs(other.c) * self.r + self.r * other.r
        return Ball(self.c * other.c, r)

    __rmul__ = __mul__

    def scale2k(self, k: int) -> "Ball":
        return Ball(self.c.scale2k(k), self.r.scale2k(k))

    def half(self) -> "Ball":
        return self.scale2k(-1)

    def div_int(self, k: int, bits: int) -> "Ball":
        """Division by a nonzero integer, center rounded to ``bits`` fractional bits."""
        if k == 0:
            raise ZeroDivisionError("division of a ball by zero")
        c = Dyadic.quotient(self.c, Dyadic(k), bits)
        err = abs(c * k - self.c)  # exact residual times k
        r = Dyadic.quotient(self.r + err, Dyadic(abs(k)), bits + 2, "ceil")
        return Ball(c, r)

    def third(self, bits: int) -> "Ball":
        return self.div_int(3, bits)

    def refine(self, bits: int) -> "Ball":
        return refine(self, bits)

    # display -----------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, Ball):
            return NotImplemented
        return self.c == other.c and self.r == other.r

    def __hash__(self):
        return hash((self.c, self.r))

    def __repr__(self):
        return f"Ball({self.c.to_decimal(20)} ± {float(self.r):.3g})"

    def to_json(self) -> dict:
        return {"m": str(self.c.m), "e": self.c.e, "r_m": str(self.r.m), "r_e": self.r.e}

    @classmethod
    def from_json(cls, obj: dict) -> "Ball":
        def _int(v):
            return int(v, 0) if isinstance(v, str) else int(v)

        return cls(Dyadic(_int(obj["m"]), obj["e"]), Dyadic(_int(obj["r_m"]), obj["r_e"]))


def ball_arith(op: str, a: Ball, b=None, guard_bits: int = 20) -> Ball:
    """Dispatch one of the basis operations by name.

    ``op`` is one of add, sub, mul, scale2k, div2, div3.  For scale2k the
    second operand is the integer exponent; for div3 ``guard_bits`` fixes the
    kept precision of the non-dyadic quotient.
    """
    a = Ball.coerce(a)
    if op == "add":
        return a + Ball.coerce(b)
    if op == "sub":
        return a - Ball.coerce(b)
    if op == "mul":
        return a * Ball.coerce(b)
    if op == "scale2k":
        return a.scale2k(int(b))
    if op == "div2":
        return a.half()
    if op == "div3":
        return a.third(guard_bits)
    raise DomainError(f"unknown ball operation {op!r}")


def refine(x: Ball, bits: int) -> Ball:
    """Shorten the center to at most ``bits + 2`` fractional bits.

    The returned ball contains ``x``; its radius grows by at most
    ``2**-(bits+2)`` (the rounding offset) which is within the documented
    ``2**-(bits+1)`` allowance.
    """
    if bits < 0:
        raise DomainError("precision must be nonnegative")
    c = x.c.round_to(bits + 2)
    return Ball(c, x.r + abs(c - x.c))


def vec(values: Iterable) -> list[Ball]:
    return [Ball.coerce(v) for v in values]


def max_radius(balls: Sequence[Ball]) -> Dyadic:
    r = ZERO
    for b in balls:
        if b.r > r:
            r = b.r
    return r


def dumps_balls(balls: Sequence[Ball]) -> str:
    return json.dumps([b.to_json() for b in balls])
