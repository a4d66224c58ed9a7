"""Certified tanh, sin, cos, pi (and exp, sqrt, division as helpers).

Every kernel works on integers scaled by ``2**W`` and carries an explicit
error count in units of ``2**-W``.  Arguments are reduced first (by ``ln 2``
for exp, by ``pi/2`` for sin/cos) and then summed as truncated Taylor series;
the error count covers truncation of every term, the series tail and the
error of the reduction constant.
"""

from __future__ import annotations

import math
from functools import lru_cache

from .ball import Ball
from .dyadic import ONE, ZERO, Dyadic, dy
from .errors import DomainError, ResourceLimitError

# working bits added on top of the requested precision
GUARD = 16
# |argument| beyond which exp refuses to run (tanh saturates much earlier)
MAX_EXP_ARG = 1 << 40


def _check_bits(bits: int) -> None:
    if bits < 0:
        raise DomainError("precision must be nonnegative")


def _fixed(x: Dyadic, W: int) -> int:
    """round(x * 2**W)."""
    if x.e >= -W:
        return x.m << (x.e + W)
    s = -W - x.e
    return (x.m + (1 << (s - 1))) >> s


@lru_cache(maxsize=64)
def _ln2_fixed(W: int) -> tuple[int, int]:
    """ln 2 = sum 1/(k 2^k), value and error in ulps of 2**-W."""
    one = 1 << W
    total = 0
    k = 1
    while True:
        t = (one >> k) // k
        if t == 0:
            break
        total += t
        k += 1
    return total, k + 2


def _atan_inv(x: int, W: int) -> tuple[int, int]:
    # arctan(1/x) by its alternating series
    power = (1 << W) // x
    x2 = x * x
    total = 0
    k = 0
    while power:
        t = power // (2 * k + 1)
        total += -t if k & 1 else t
        power //= x2
        k += 1
    return total, 2 * k + 2


@lru_cache(maxsize=64)
def _pi_fixed(W: int) -> tuple[int, int]:
    """Machin: pi = 16 atan(1/5) - 4 atan(1/239)."""
    a, ea = _atan_inv(5, W)
    b, eb = _atan_inv(239, W)
    return 16 * a - 4 * b, 16 * ea + 4 * eb


def _exp_series(R: int, W: int) -> tuple[int, int]:
    """exp(R/2**W) for |R/2**W| <= 1.1; returns (value, err_ulps)."""
    one = 1 << W
    neg = R < 0
    a = -R if neg else R
    total = one
    t = one
    n = 0
    while True:
        n += 1
        t = ((t * a) >> W) // n
        if t == 0:
            break
        total += -t if (neg and n & 1) else t
    return total, 6 * n + 12


def _exp_fixed(x: Dyadic, W: int) -> tuple[int, int, int]:
    """exp(x) = E * 2**(k - W) with |error| <= err * 2**(k - W)."""
    xf = float(x)
    if not abs(xf) < MAX_EXP_ARG:
        raise ResourceLimitError("exp argument too large")
    k = round(xf / math.log(2))
    kb = abs(k).bit_length()
    W2 = W + kb + 8
    L, lerr = _ln2_fixed(W2)
    R2 = _fixed(x, W2) - k * L
    R = R2 >> (W2 - W)
    r_err = 2  # reduction error in ulps at W, see module docstring
    E, e_err = _exp_series(R, W)
    # exp(r) <= 3 on the reduced range, so r_err ulps of r cost <= 3 * r_err
    return E, k, e_err + 3 * r_err + 1


def exp_point(x, bits: int) -> Ball:
    """exp of an exact dyadic with relative error <= 2**-bits."""
    _check_bits(bits)
    x = dy(x)
    W = bits + GUARD
    E, k, err = _exp_fixed(x, W)
    return Ball(Dyadic(E, k - W), Dyadic(err, k - W))


def exp_ball(x: Ball, bits: int) -> Ball:
    x = Ball.coerce(x)
    if x.is_exact():
        return exp_point(x.c, bits)
    lo = exp_point(x.lower, bits)
    hi = exp_point(x.upper, bits)
    return Ball.from_interval(lo.lower, hi.upper)


def pi_ball(bits: int) -> Ball:
    """Ball containing pi with radius <= 2**-bits."""
    _check_bits(bits)
    W = bits + GUARD
    P, err = _pi_fixed(W)
    return Ball(Dyadic(P, -W), Dyadic(err, -W))


def _sech2_factor(y_lo: Dyadic) -> Dyadic:
    """Power of two bounding sech(y)^2 <= 4 exp(-2y) for y >= y_lo >= 0."""
    y = min(float(y_lo), 1e12) * (1 - 1e-12)
    e = 2 - math.floor(2.8853 * y)  # 2/ln 2 = 2.88539...
    # a weaker (larger) bound is still sound; the cap keeps exponents small
    return Dyadic(1, max(-(1 << 16), min(0, e)))


def _tanh_point(c: Dyadic, bits: int) -> Ball:
    s = c.sign()
    if s == 0:
        return Ball(0, 0)
    a = abs(c)
    if a > bits + 2:
        # 1 - tanh(a) < 2 exp(-2a) < 2**-(bits+2)
        return Ball(s, Dyadic(1, -bits - 2))
    W = bits + GUARD
    E, k, err = _exp_fixed(-(a.scale2k(1)), W)
    # k <= 0 here because the argument is <= 0
    if k <= 0:
        sh = -k
        Ew = E >> sh
        err_w = (err >> sh) + 2
    else:
        Ew = E << k
        err_w = err << k
    one = 1 << W
    q = ((one - Ew) << W) // (one + Ew)
    rad = 2 * err_w + 2
    return Ball(Dyadic(s * q, -W), Dyadic(rad, -W))


def tanh_ball(x, bits: int) -> Ball:
    """tanh with radius <= 2**-bits + sech^2-weighted input radius."""
    _check_bits(bits)
    x = Ball.coerce(x)
    out = _tanh_point(x.c, bits)
    if x.r.m:
        out = out.widen(x.r * _sech2_factor(x.mig()))
    return out


def _sincos_series(R: int, W: int) -> tuple[int, int, int]:
    """(sin, cos, err) of R/2**W with |R/2**W| <= 0.8."""
    one = 1 << W
    neg = R < 0
    a = -R if neg else R
    a2 = (a * a) >> W
    # sin
    t = a
    s = a
    n = 1
    sign = 1
    while True:
        t = ((t * a2) >> W) // ((n + 1) * (n + 2))
        n += 2
        if t == 0:
            break
        sign = -sign
        s += sign * t
    ns = n
    # cos
    t = one
    c = one
    n = 0
    sign = 1
    while True:
        t = ((t * a2) >> W) // ((n + 1) * (n + 2))
        n += 2
        if t == 0:
            break
        sign = -sign
        c += sign * t
    return (-s if neg else s), c, 6 * max(ns, n) + 12


def _sincos_point(x: Dyadic, bits: int) -> tuple[Ball, Ball]:
    W = bits + GUARD
    xf = float(x)
    if not abs(xf) < MAX_EXP_ARG:
        raise ResourceLimitError("trigonometric argument too large")
    k = round(xf / (math.pi / 2))
    kb = abs(k).bit_length()
    W2 = W + kb + 8
    P, perr = _pi_fixed(W2)
    # r = x - k*pi/2
    R2 = _fixed(x, W2) - ((k * P) >> 1)
    R = R2 >> (W2 - W)
    r_err = 3
    S, C, err = _sincos_series(R, W)
    err += r_err + 1
    q = k % 4
    if q == 0:
        sv, cv = S, C
    elif q == 1:
        sv, cv = C, -S
    elif q == 2:
        sv, cv = -S, -C
    else:
        sv, cv = -C, S
    rad = Dyadic(err, -W)
    return Ball(Dyadic(sv, -W), rad), Ball(Dyadic(cv, -W), rad)


def sin_ball(x, bits: int) -> Ball:
    _check_bits(bits)
    x = Ball.coerce(x)
    s, _ = _sincos_point(x.c, bits)
    return _clip_unit(s.widen(x.r))


def cos_ball(x, bits: int) -> Ball:
    _check_bits(bits)
    x = Ball.coerce(x)
    _, c = _sincos_point(x.c, bits)
    return _clip_unit(c.widen(x.r))


def _clip_unit(b: Ball) -> Ball:
    lo, hi = b.lower, b.upper
    if lo >= -1 and hi <= 1:
        return b
    lo = max(lo, Dyadic(-1))
    hi = min(hi, ONE)
    return Ball.from_interval(lo, hi)


def elem_eval(fn: str, x, bits: int) -> Ball:
    """Certified evaluation of tanh, sin, cos or pi (``x`` ignored for pi)."""
    if fn == "tanh":
        return tanh_ball(x, bits)
    if fn == "sin":
        return sin_ball(x, bits)
    if fn == "cos":
        return cos_ball(x, bits)
    if fn == "pi":
        return pi_ball(bits)
    if fn == "exp":
        return exp_ball(x, bits)
    raise DomainError(f"unknown elementary function {fn!r}")


# algebraic helpers -------------------------------------------------------


def sqrt_ball(x, bits: int) -> Ball:
    """Square root of a ball whose lower end is clipped at zero."""
    x = Ball.coerce(x)
    W = bits + 4

    def _root(d: Dyadic, mode: str) -> Dyadic:
        if d.m <= 0:
            return ZERO
        v = _fixed(d, 2 * W) if mode == "nearest" else d.round_to(2 * W, mode).m << (d.round_to(2 * W, mode).e + 2 * W)
        s = math.isqrt(v)
        if mode == "ceil" and s * s < v:
            s += 1
        return Dyadic(s, -W)

    lo = _root(x.lower, "floor")
    hi = _root(x.upper, "ceil")
    return Ball.from_interval(lo, hi)


def div_ball(a, b, bits: int) -> Ball:
    """a / b for a ball b bounded away from zero."""
    a, b = Ball.coerce(a), Ball.coerce(b)
    den = b.mig()
    if den.m == 0:
        raise ZeroDivisionError("divisor ball contains zero")
    W = bits + 4
    q = Dyadic.quotient(a.c, b.c, W)
    rnd = abs(q * b.c - a.c)  # |q - a.c/b.c| * |b.c|
    # |a/b - q| <= (|a - q b|) / |b| <= (a.r + |q| b.r + rnd) / den
    num = a.r + abs(q) * b.r + rnd
    r = Dyadic.quotient(num, den, W + 2, "ceil") if num.m else ZERO
    return Ball(q, r)
