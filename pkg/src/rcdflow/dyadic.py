"""Exact dyadic rationals ``mantissa * 2**exponent``.

Values are kept in canonical form: the mantissa is odd, or the value is zero
with exponent 0.  Addition, subtraction, multiplication and scaling by powers
of two are exact.  Division is only available through the explicit rounding
helpers, which take an absolute precision in bits.
"""

from __future__ import annotations

import math
import operator
import re
from fractions import Fraction
from numbers import Rational
from typing import Union

from .errors import DomainError, ResourceLimitError

# exponents beyond this are treated as a runaway computation
MAX_EXPONENT = 1 << 26

DyadicLike = Union["Dyadic", int]


def _strip(m: int, e: int) -> tuple[int, int]:
    if m == 0:
        return 0, 0
    tz = (m & -m).bit_length() - 1
    if tz:
        m >>= tz
        e += tz
    if e > MAX_EXPONENT or e < -MAX_EXPONENT:
        raise ResourceLimitError(f"dyadic exponent {e} out of range")
    return m, e


class Dyadic:
    __slots__ = ("m", "e")

    def __init__(self, mantissa: int = 0, exponent: int = 0):
        m, e = _strip(operator.index(mantissa), operator.index(exponent))
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "e", e)

    def __setattr__(self, name, value):
        raise AttributeError("Dyadic is immutable")

    # construction ------------------------------------------------------

    @classmethod
    def coerce(cls, x) -> "Dyadic":
        if isinstance(x, Dyadic):
            return x
        if isinstance(x, int):
            return cls(x, 0)
        if isinstance(x, Fraction) or isinstance(x, Rational):
            return cls.from_fraction(Fraction(x))
        if isinstance(x, float):
            return cls.from_float(x)
        if isinstance(x, str):
            return cls.parse(x)
        raise TypeError(f"cannot convert {type(x).__name__} to Dyadic")

    @classmethod
    def from_fraction(cls, q: Fraction) -> "Dyadic":
        den = q.denominator
        if den & (den - 1):
            raise DomainError(f"{q} is not a dyadic rational")
        return cls(q.numerator, -(den.bit_length() - 1))

    @classmethod
    def from_float(cls, x: float) -> "Dyadic":
        if not math.isfinite(x):
            raise DomainError("non-finite float")
        return cls.from_fraction(Fraction(x))

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        """Parse ``"3"``, ``"-0.375"``, ``"1/2"``, ``"3e-2"`` is rejected.

        A trailing ``b`` selects binary digits: ``"101.1b"`` is 5.5.
        """
        s = text.strip()
        if s.endswith("b"):
            return cls.parse_binary(s[:-1])
        if "/" in s:
            num, den = s.split("/", 1)
            return cls.from_fraction(Fraction(int(num), int(den)))
        if not re.fullmatch(r"[+-]?(\d+(\.\d*)?|\.\d+)", s):
            raise DomainError(f"cannot parse dyadic {text!r}")
        return cls.from_fraction(Fraction(s))

    @classmethod
    def parse_binary(cls, text: str) -> "Dyadic":
        s = text.strip()
        sign = 1
        if s[:1] in "+-":
            sign = -1 if s[0] == "-" else 1
            s = s[1:]
        if not re.fullmatch(r"[01]+(\.[01]*)?|\.[01]+", s):
            raise DomainError(f"cannot parse binary dyadic {text!r}")
        ip, _, fp = s.partition(".")
        digits = (ip or "0") + fp
        return cls(sign * int(digits, 2), -len(fp))

    # conversion --------------------------------------------------------

    def to_fraction(self) -> Fraction:
        if self.e >= 0:
            return Fraction(self.m << self.e)
        return Fraction(self.m, 1 << -self.e)

    def __float__(self) -> float:
        if self.m == 0:
            return 0.0
        try:
            return math.ldexp(float(self.m), self.e) if self.m.bit_length() < 1000 else float(self.to_fraction())
        except OverflowError:
            return math.copysign(math.inf, self.m)

    def __int__(self) -> int:
        # truncation toward zero, like int(float)
        if self.e >= 0:
            return self.m << self.e
        q = abs(self.m) >> -self.e
        return q if self.m > 0 else -q

    def floor(self) -> int:
        return self.m << self.e if self.e >= 0 else self.m >> -self.e

    def ceil(self) -> int:
        return -((-self).floor())

    def magnitude(self) -> int:
        """Exponent of the leading bit, i.e. 2**k <= |x| < 2**(k+1); -inf-ish for zero."""
        if self.m == 0:
            return -MAX_EXPONENT
        return self.m.bit_length() - 1 + self.e

    def frac_bits(self) -> int:
        """Number of fractional binary digits."""
        return max(0, -self.e)

    def is_zero(self) -> bool:
        return self.m == 0

    def sign(self) -> int:
        return (self.m > 0) - (self.m < 0)

    # arithmetic --------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Dyadic):
            if isinstance(other, int):
                other = Dyadic(other)
            else:
                return NotImplemented
        a, b = self, other
        if a.m == 0:
            return b
        if b.m == 0:
            return a
        if a.e <= b.e:
            return Dyadic(a.m + (b.m << (b.e - a.e)), a.e)
        return Dyadic((a.m << (a.e - b.e)) + b.m, b.e)

    __radd__ = __add__

    def __neg__(self):
        return Dyadic(-self.m, self.e)

    def __pos__(self):
        return self

    def __abs__(self):
        return self if self.m >= 0 else Dyadic(-self.m, self.e)

    def __sub__(self, other):
        if isinstance(other, int):
            other = Dyadic(other)
        elif not isinstance(other, Dyadic):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        if isinstance(other, int):
            return Dyadic(other) - self
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, int):
            return Dyadic(self.m * other, self.e)
        if not isinstance(other, Dyadic):
            return NotImplemented
        return Dyadic(self.m * other.m, self.e + other.e)

    __rmul__ = __mul__

    def scale2k(self, k: int) -> "Dyadic":
        """Exact multiplication by ``2**k``."""
        if self.m == 0:
            return self
        return Dyadic(self.m, self.e + k)

    def half(self) -> "Dyadic":
        return self.scale2k(-1)

    def __lshift__(self, k: int):
        return self.scale2k(k)

    def __rshift__(self, k: int):
        return self.scale2k(-k)

    # rounding ----------------------------------------------------------

    def round_to(self, bits: int, mode: str = "nearest") -> "Dyadic":
        """Round to a multiple of ``2**-bits`` (mode: nearest, floor, ceil)."""
        if self.e >= -bits:
            return self
        shift = -bits - self.e
        m = self.m
        if mode == "floor":
            q = m >> shift
        elif mode == "ceil":
            q = -((-m) >> shift)
        else:
            q = (m + (1 << (shift - 1))) >> shift
        return Dyadic(q, -bits)

    def round_sig(self, sig: int, mode: str = "ceil") -> "Dyadic":
        """Round to ``sig`` significant bits (used to keep radii short)."""
        n = abs(self.m).bit_length()
        if n <= sig:
            return self
        return self.round_to(-(self.e + n - sig), mode)

    @staticmethod
    def quotient(a: "Dyadic", b: "Dyadic", bits: int, mode: str = "nearest") -> "Dyadic":
        """``a / b`` rounded to a multiple of ``2**-bits``."""
        if b.m == 0:
            raise ZeroDivisionError("dyadic division by zero")
        # a/b = (am/bm) * 2**(ae-be); want q = round(a/b * 2**bits)
        shift = a.e - b.e + bits
        num, den = a.m, b.m
        if den < 0:
            num, den = -num, -den
        if shift >= 0:
            num <<= shift
        else:
            den <<= -shift
        if mode == "floor":
            q = num // den
        elif mode == "ceil":
            q = -((-num) // den)
        else:
            q = (2 * num + den) // (2 * den)
        return Dyadic(q, -bits)

    # comparison --------------------------------------------------------

    def _cmp(self, other) -> int:
        if isinstance(other, int):
            other = Dyadic(other)
        elif isinstance(other, Fraction):
            f = self.to_fraction()
            return (f > other) - (f < other)
        elif not isinstance(other, Dyadic):
            raise TypeError
        return (self - other).sign()

    def __eq__(self, other):
        if isinstance(other, Dyadic):
            return self.m == other.m and self.e == other.e
        if isinstance(other, (int, Fraction)):
            return self._cmp(other) == 0
        return NotImplemented

    def __hash__(self):
        return hash(self.to_fraction())

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __bool__(self):
        return self.m != 0

    # display -----------------------------------------------------------

    def __repr__(self):
        return f"Dyadic({self.m}, {self.e})"

    def __str__(self):
        return self.to_decimal()

    def to_decimal(self, digits: int | None = None) -> str:
        """Exact decimal string (dyadics have finite decimal expansions).

        With ``digits`` the fractional part is truncated toward zero to that
        many decimal places.
        """
        if self.e >= 0:
            return str(self.m << self.e)
        k = -self.e
        sign = "-" if self.m < 0 else ""
        a = abs(self.m) * 5**k  # value = a / 10**k
        ip, fp = divmod(a, 10**k)
        fs = str(fp).rjust(k, "0")
        if digits is not None:
            fs = fs[:digits]
        fs = fs.rstrip("0")
        return f"{sign}{ip}" + (f".{fs}" if fs else "")

    def to_binary(self) -> str:
        """Binary positional string, e.g. ``'101.1'``."""
        if self.m < 0:
            return "-" + (-self).to_binary()
        if self.e >= 0:
            return bin(self.m << self.e)[2:]
        k = -self.e
        s = bin(self.m)[2:].rjust(k + 1, "0")
        return s[:-k] + "." + s[-k:]


ZERO = Dyadic(0)
ONE = Dyadic(1)
HALF = Dyadic(1, -1)


def dy(x) -> Dyadic:
    """Shorthand coercion used throughout the package."""
    return Dyadic.coerce(x)
