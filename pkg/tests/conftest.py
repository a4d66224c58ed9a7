from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import mpmath
import pytest

from rcdflow import Ball
from rcdflow.tm import parse_tm_spec

MACHINES = Path(__file__).resolve().parents[1] / "src" / "rcdflow" / "machines"
mpmath.mp.prec = 400
SLOP = Fraction(1, 2**300)  # oracle rounding at 400 bits


def frac(x) -> Fraction:
    """Exact rational of an mpf, Dyadic, int or Fraction."""
    if hasattr(x, "_mpf_"):
        sign, man, exp, _ = mpmath.mpf(x)._mpf_
        return (-1) ** sign * Fraction(int(man)) * Fraction(2) ** int(exp)
    if hasattr(x, "to_fraction"):
        return x.to_fraction()
    return Fraction(x)


def mpf(q) -> mpmath.mpf:
    q = frac(q)
    return mpmath.mpf(q.numerator) / q.denominator


def gap(b: Ball, ref) -> Fraction:
    """|ref - center(b)| minus the radius (<= 0 means contained)."""
    return abs(frac(ref) - b.c.to_fraction()) - b.r.to_fraction()


def encloses(b: Ball, ref, tol=0) -> bool:
    return gap(b, ref) <= frac(tol) + SLOP


def within(b: Ball, ref, tol) -> bool:
    """Center within tol of ref, allowing the certified radius on top."""
    return encloses(b, ref, tol)


@pytest.fixture(scope="session")
def machines():
    return {name: parse_tm_spec(MACHINES / f"{name}.json") for name in ("succ", "palindrome", "bounce")}
