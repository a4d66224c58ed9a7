"""A real extension of the shifted fractional part, and the gadgets built on it.

``t_e(x) = (1 - R(sin 2 pi x)) (1 - R(sin 4 pi x)) (1 - R(sin 8 pi x))`` with
``R`` a steep tanh ramp from 0 (at 0) to 1 (at e/2) is a 1-periodic bump that
is about 1 on ``[7/8, 1]`` and about 0 elsewhere.  Its scaled integral
``I_e(y) = 8 * int_0^y t_e`` is then a smoothed staircase with
``I_e(y) ~ floor(y)`` whenever ``y`` lies in ``[k, k + 3/4]``, and

    xi(x) = x + 7/8 - I_e(x + 7/8)

approximates ``{x - 1/8}`` on ``[k + 1/8, k + 7/8]``.

The integral over one period is enclosed by adaptive bisection with ball
arithmetic and cached per ``(m, n)``; queries use periodicity, so evaluating
``xi`` costs a table lookup plus one enclosure of ``t_e``.
"""

from __future__ import annotations

import bisect
import heapq
from dataclasses import dataclass
from functools import lru_cache

from .ball import Ball
from .dyadic import ONE, ZERO, Dyadic
from .elementary import pi_ball, sin_ball
from .errors import DomainError, ResourceLimitError
from .gadgets import sigtanh

MAX_PIECES = 1 << 18
SEVEN_EIGHTHS = Dyadic(7, -3)


@dataclass(frozen=True)
class GadgetScale:
    """Target error ``2**-m`` on arguments in ``[-2**n, 2**n]``."""

    m: int
    n: int

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise DomainError("gadget scale needs m >= 0 and n >= 0")


def _params(m: int, n: int) -> tuple[int, Dyadic, int]:
    # sigmoid sharpness M, trench width e, working bits
    M = m + n + 10
    e = Dyadic(1, -(m + n + 4))
    W = 2 * (m + n) + 40
    return M, e, W


class _Trench:
    """t_e for one (m, n) together with its cached period integral."""

    def __init__(self, m: int, n: int):
        self.M, self.e, self.W = _params(m, n)
        self.z = Dyadic(1, self.M)
        self.half_e = self.e.half()
        self.pi = pi_ball(self.W + 8)
        self.tol = Dyadic(1, -(m + n + 10))
        self._build()

    def t_e(self, x: Ball) -> Ball:
        out = Ball(1)
        for k in (2, 4, 8):
            s = sin_ball(self.pi * x * k, self.W)
            r = sigtanh(self.z, ZERO, self.half_e, s, bits=self.M + 4)
            out = out * (1 - r)
        return out

    def _piece(self, a: Dyadic, b: Dyadic) -> tuple[Ball, Ball]:
        T = self.t_e(Ball.from_interval(a, b))
        w = b - a
        c = T.c.round_to(self.W)
        T = Ball(c, T.r + abs(c - T.c))
        return T, Ball(T.c * w, T.r * w)

    def _build(self) -> None:
        heap = []
        total_r = ZERO
        start = 6
        for i in range(1 << start):
            a, b = Dyadic(i, -start), Dyadic(i + 1, -start)
            T, integral = self._piece(a, b)
            heapq.heappush(heap, (-float(integral.r), a.m, a.e, a, b, T, integral))
            total_r = total_r + integral.r
        while total_r > self.tol:
            if len(heap) > MAX_PIECES:
                raise ResourceLimitError("quadrature did not converge")
            _, _, _, a, b, _, integral = heapq.heappop(heap)
            total_r = total_r - integral.r
            mid = (a + b).half()
            for lo, hi in ((a, mid), (mid, b)):
                T2, i2 = self._piece(lo, hi)
                heapq.heappush(heap, (-float(i2.r), lo.m, lo.e, lo, hi, T2, i2))
                total_r = total_r + i2.r
        pieces = sorted(((item[3], item[4], item[5], item[6]) for item in heap), key=lambda p: p[0])
        self.starts = [p[0] for p in pieces]
        self.pieces = pieces
        prefix = [Ball(0)]
        for p in pieces:
            prefix.append(prefix[-1] + p[3])
        self.prefix = prefix
        self.period = prefix[-1]
        self.tmax = max(p[2].upper for p in pieces)
        # each factor lies in [-d, 1 + d] with d = 2**-(M+4), so t_e >= -2**-(M+3)
        self.neg = Dyadic(1, -(self.M + 3))

    def J(self, s: Dyadic) -> Ball:
        """Enclosure of int_0^s t_e for 0 <= s < 1."""
        i = bisect.bisect_right(self.starts, s) - 1
        a, _, T, _ = self.pieces[i]
        return self.prefix[i] + T * (s - a)

    def I(self, y: Dyadic) -> Ball:
        """8 * int_0^y t_e for any dyadic y."""
        k = y.floor()
        s = y - k
        return (self.period * k + self.J(s)).scale2k(3)


@lru_cache(maxsize=32)
def trench(m: int, n: int) -> _Trench:
    return _Trench(m, n)


def _scale(s) -> GadgetScale:
    if isinstance(s, GadgetScale):
        return s
    m, n = s
    return GadgetScale(int(m), int(n))


def _check_range(x: Ball, n: int, slack=ZERO) -> None:
    if x.mag() > Dyadic(1, n) + slack:
        raise DomainError(f"argument {float(x.c):.6g} outside [-2^{n}, 2^{n}]")


def staircase(s, y) -> Ball:
    """I_e(y): within 2**-m of k for y in [k, k + 3/4]."""
    s = _scale(s)
    y = Ball.coerce(y)
    tr = trench(s.m, s.n)
    if not y.r.m:
        return tr.I(y.c)
    # I_e is nondecreasing up to the overshoot of t_e below zero
    lo, hi = tr.I(y.lower), tr.I(y.upper)
    return lo.hull(hi).widen((y.r * tr.neg).scale2k(4))


def xi_ext(s, x) -> Ball:
    """Within 2**-m of {x - 1/8} whenever x lies in [k + 1/8, k + 7/8], |x| <= 2**n."""
    s = _scale(s)
    x = Ball.coerce(x)
    _check_range(x, s.n)
    return _xi(s.m, s.n, x)


def _xi(m: int, n: int, x: Ball) -> Ball:
    y = x + SEVEN_EIGHTHS
    return y - staircase(GadgetScale(m, n), y)


# bestiary ------------------------------------------------------------------

BESTIARY = ("xi1", "xi2", "sigma1", "sigma2", "lambda", "mod2", "div2")

Q1, Q2, Q3 = Dyadic(1, -2), Dyadic(1, -1), Dyadic(3, -2)


def xi1(m: int, n: int, x: Ball) -> Ball:
    """x - k on [k - 1/2, k + 1/4]."""
    return _xi(m, n + 1, x - Dyadic(3, -3)) - Q2


def xi2(m: int, n: int, x: Ball) -> Ball:
    """x - k on [k, k + 3/4]."""
    return _xi(m, n + 1, x - SEVEN_EIGHTHS)


# x - xi1(x) and x - xi2(x) with the x terms cancelled symbolically, which keeps
# the enclosure from inheriting the input radius


def sigma1(m: int, n: int, x: Ball) -> Ball:
    """k on [k - 1/2, k + 1/4]."""
    return staircase(GadgetScale(m, n + 1), x + Q2)


def sigma2(m: int, n: int, x: Ball) -> Ball:
    """k on [k, k + 3/4]."""
    return staircase(GadgetScale(m, n + 1), x)


def lam(m: int, n: int, x: Ball) -> Ball:
    """0 on [k + 1/4, k + 1/2], 1 on [k + 3/4, k + 1]."""
    inner = _xi(m + 3, n + 1, x - Dyadic(9, -3))
    return sigtanh(Dyadic(1, m + 1), Q1, Q2, inner)


def mod2(m: int, n: int, x: Ball) -> Ball:
    """k mod 2 on [k - 1/4, k + 1/4]."""
    return 1 - lam(m, n, x.half() + SEVEN_EIGHTHS)


def div2(m: int, n: int, x: Ball) -> Ball:
    """k // 2 on [k - 1/4, k + 1/4]."""
    return (sigma1(m + 1, n, x) - mod2(m + 1, n, x)).half()


_KINDS = {
    "xi1": xi1,
    "xi2": xi2,
    "sigma1": sigma1,
    "sigma2": sigma2,
    "lambda": lam,
    "mod2": mod2,
    "div2": div2,
}


def bestiary_eval(kind: str, s, x) -> Ball:
    """Evaluate one of xi1, xi2, sigma1, sigma2, lambda, mod2, div2.

    Windows are read around the nearest integer ``k`` of the argument; off
    the window the result is bounded by ``|x| + 2`` but carries no contract.
    """
    if kind not in _KINDS:
        raise DomainError(f"unknown bestiary kind {kind!r}")
    s = _scale(s)
    x = Ball.coerce(x)
    _check_range(x, s.n, ONE)
    return _KINDS[kind](s.m, s.n, x)


def window(kind: str, k: int) -> tuple[Dyadic, Dyadic]:
    """Validity window of ``kind`` around the integer ``k``."""
    k = Dyadic(k)
    if kind in ("xi1", "sigma1"):
        return k - Q2, k + Q1
    if kind in ("xi2", "sigma2"):
        return k, k + Q3
    if kind == "lambda":
        return k + Q1, k + ONE  # two plateaus: [k+1/4, k+1/2] and [k+3/4, k+1]
    return k - Q1, k + Q1


def target(kind: str, k: int, x) -> Dyadic | int | None:
    """Ideal value of ``kind`` at x in its window around k (None between lambda plateaus)."""
    from fractions import Fraction

    xf = Fraction(x) if not isinstance(x, Dyadic) else x.to_fraction()
    if kind in ("xi1", "xi2"):
        return xf - k
    if kind in ("sigma1", "sigma2"):
        return k
    if kind == "lambda":
        f = xf - k
        if Fraction(1, 4) <= f <= Fraction(1, 2):
            return 0
        if Fraction(3, 4) <= f <= 1:
            return 1
        return None
    if kind == "mod2":
        return k % 2
    return k // 2
