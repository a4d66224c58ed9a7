"""tanh-built approximations of relu, sigmoids and table selection.

All gadgets take the sharpness parameter ``z`` (normally ``2**m``) and return
a :class:`Ball`.  The ball always contains the exact value of the closed-form
gadget at every point of the input balls; the distance between that closed
form and the idealised target (relu, ramp sigmoid, table value) is what the
``2**-m`` contracts bound.
"""

from __future__ import annotations

from typing import Callable, Mapping

from . import expr as E
from .ball import Ball
from .dyadic import ONE, Dyadic, dy
from .elementary import div_ball, tanh_ball
from .errors import ContractError, DomainError

GUARD = 8


def _ball(x) -> Ball:
    return Ball.coerce(x)


def _log2_floor(z: Ball) -> int:
    c = z.c
    if c <= 0 or z.lower <= 0:
        raise DomainError("sharpness z must be positive")
    return max(0, c.magnitude())


def _mag_bits(x: Ball) -> int:
    """Bits needed for the integer part of |x|."""
    return max(0, x.mag().magnitude() + 1)


def _ceil_log2(d: Dyadic) -> int:
    """Smallest integer c with d <= 2**c (d > 0)."""
    k = d.magnitude()
    return k if Dyadic(1, k) == d else k + 1


def Y(x: Ball, z: Ball, bits: int) -> Ball:
    """(1 + tanh(4 x z)) / 2."""
    return (tanh_ball((x * z).scale2k(2), bits) + 1).half()


def relutanh(z, x, bits: int | None = None) -> Ball:
    """x * Y(x, z); within 2**-m of max(0, x) when z = 2**m."""
    z, x = _ball(z), _ball(x)
    m = _log2_floor(z)
    if bits is None:
        bits = m
    W = bits + GUARD + _mag_bits(x)
    # |x Y(x, z) - relu(x)| <= 1/(8 e z) < 2**-(m+4), and relu is monotone
    d = Dyadic(1, -(m + 4))
    return (x * Y(x, z, W)).intersect(_relu(x.lower) - d, _relu(x.upper) + d)


def _relu(v: Dyadic) -> Dyadic:
    return v if v.m > 0 else Dyadic(0)


def sig(a, b, x) -> Dyadic | float:
    """Ideal ramp: 0 below a, 1 above b, affine in between (exact for dyadics)."""
    a, b, x = dy(a), dy(b), dy(x)
    if x <= a:
        return Dyadic(0)
    if x >= b:
        return ONE
    return (x - a).to_fraction() / (b - a).to_fraction()


def _div_width(num: Ball, width: Dyadic, bits: int) -> Ball:
    if width.m == 1:  # power of two
        return num.scale2k(-width.e)
    return div_ball(num, Ball(width), bits)


def sigtanh(z, a, b, x, bits: int | None = None) -> Ball:
    """Smooth ramp from 0 (x <= a) to 1 (x >= b), accurate to 2**-m for z = 2**m."""
    a, b = dy(a), dy(b)
    if a >= b:
        raise DomainError("sigtanh needs a < b")
    z, x = _ball(z), _ball(x)
    m = _log2_floor(z)
    if bits is None:
        bits = m
    w = b - a
    c = max(0, _ceil_log2(Dyadic.quotient(ONE, w, 64, "ceil")))
    Z = z.scale2k(1 + c)
    W = bits + GUARD + c + _mag_bits(x) + _mag_bits(Ball(a)) + _mag_bits(Ball(b))
    xa, xb = x - a, x - b
    num = xa * Y(xa, Z, W) - xb * Y(xb, Z, W)
    # each smoothed relu is within 1/(8 e Z) of relu, so the ramp stays in
    # [-d, 1 + d] with d = 1/(4 e Z (b - a)) < 2**-(m+4)
    d = Dyadic(1, -(m + 4))
    lo = sig(a, b, x.lower)
    hi = sig(a, b, x.upper)
    return _div_width(num, w, W).intersect(_round_q(lo, "floor") - d, _round_q(hi, "ceil") + d)


def _round_q(q, mode: str) -> Dyadic:
    if isinstance(q, Dyadic):
        return q
    return Dyadic.quotient(Dyadic(q.numerator), Dyadic(q.denominator), 64, mode)


def _sig_m(m: int, a, b, x) -> Ball:
    return sigtanh(Dyadic(1, m), a, b, x)


def _sum_bits(values) -> int:
    total = sum((abs(dy(v)) if not isinstance(v, Ball) else v.mag() for v in values), Dyadic(0))
    return _ceil_log2(total + 1)


Q1, Q3 = Dyadic(1, -2), Dyadic(3, -2)


def tttanh(z, d, l) -> Ball:
    """Gate: about 0 when d is near 0 and about l when d is near 1."""
    z, d, l = _ball(z), _ball(d), _ball(l)
    m = _log2_floor(z)
    extra = _ceil_log2(l.mag() + 1)
    return l * _sig_m(m + 1 + extra, Q1, Q3, d)


def bump(m: int, alpha, x) -> Ball:
    """About 1 within 1/4 of alpha, about 0 beyond 3/4 from alpha."""
    alpha = dy(alpha)
    return _sig_m(m, alpha - Q3, alpha - Q1, x) - _sig_m(m, alpha + Q1, alpha + Q3, x)


def _check_keys(keys) -> list[Dyadic]:
    ks = sorted(dy(k) for k in keys)
    for u, v in zip(ks, ks[1:]):
        if v - u < 1:
            raise DomainError("selection keys must be at least 1 apart")
    return ks


def sendtanh(z, table: Mapping, x) -> Ball:
    """Sum of V_i * bump_i(x): about V_i when x is within 1/4 of key alpha_i."""
    z, x = _ball(z), _ball(x)
    m = _log2_floor(z)
    _check_keys(table.keys())
    M = m + 1 + _sum_bits(table.values())
    out = Ball(0)
    for alpha, v in table.items():
        out = out + _ball(v) * bump(M, alpha, x)
    return out


def pair_weights(M: int, xkeys, ykeys, x, y) -> dict:
    """bump(alpha, x) * bump(j, y) for every key pair, each within 5 * 2**-M of 0 or 1."""
    x, y = _ball(x), _ball(y)
    bx = {dy(a): bump(M, a, x) for a in _check_keys(xkeys)}
    by = {dy(j): bump(M, j, y) for j in _check_keys(ykeys)}
    return {(a, j): bx[a] * by[j] for a in bx for j in by}


def sendtanh2(z, table: Mapping, x, y) -> Ball:
    """Pair selection: about V_ij when x is near alpha_i and y near j."""
    z = _ball(z)
    m = _log2_floor(z)
    M = m + 3 + _sum_bits(table.values())
    w = pair_weights(M, {k[0] for k in table}, {k[1] for k in table}, x, y)
    out = Ball(0)
    for (a, j), v in table.items():
        out = out + _ball(v) * w[(dy(a), dy(j))]
    return out


def select_eval(kind: str, z, table_or_payload, *args) -> Ball:
    """Dispatch for the three selection gadgets (tttanh, sendtanh, sendtanh2)."""
    if kind == "tttanh":
        return tttanh(z, args[0], table_or_payload)
    if kind == "sendtanh":
        return sendtanh(z, table_or_payload, args[0])
    if kind == "sendtanh2":
        return sendtanh2(z, table_or_payload, args[0], args[1])
    raise DomainError(f"unknown selection gadget {kind!r}")


def barycentric_select(lam, v1, v2) -> Ball:
    """lam * v1 + (1 - lam) * v2."""
    lam, v1, v2 = _ball(lam), _ball(v1), _ball(v2)
    if lam.lower < Dyadic(-1, -1) or lam.upper > Dyadic(3, -1):
        raise DomainError("selector outside [0, 1]")
    return lam * v1 + (1 - lam) * v2


def manon_lim(approximant: Callable[[Ball, int], Ball], x, n: int) -> Ball:
    """Limit of a 2**-k convergent family, to radius 2**-n.

    ``approximant(x, k)`` must return a ball within 2**-k of the limit whose
    own radius is at most 2**-k.
    """
    if n < 0:
        raise DomainError("precision must be nonnegative")
    k = n + 1
    b = approximant(_ball(x), k)
    if not isinstance(b, Ball):
        b = Ball.coerce(b)
    if b.r > Dyadic(1, -k):
        raise ContractError(f"approximant radius {float(b.r):.3g} exceeds 2^-{k}")
    return b.widen(Dyadic(1, -k))


# the same gadgets as expression trees ------------------------------------


def y_expr(x: E.Expr, z) -> E.Expr:
    return E.half(1 + E.tanh(E.scale2k(x * E.lift(z), 2)))


def relutanh_expr(m: int) -> E.Expr:
    """relutanh(2**m, var0) as a basis expression."""
    x = E.var(0)
    return x * y_expr(x, Dyadic(1, m))


def sigtanh_expr(m: int, a, b, x: E.Expr | None = None) -> E.Expr:
    a, b = dy(a), dy(b)
    w = b - a
    if w <= 0 or w.m != 1:
        raise DomainError("expression form needs b - a to be a power of two")
    x = E.var(0) if x is None else x
    c = max(0, -w.e)
    Z = Dyadic(1, m + 1 + c)
    xa, xb = x - a, x - b
    return E.scale2k(xa * y_expr(xa, Z) - xb * y_expr(xb, Z), -w.e)


def tttanh_expr(m: int, extra: int = 1) -> E.Expr:
    """tttanh(2**m, var0, var1) for payloads with |l| < 2**extra - 1."""
    return E.var(1) * sigtanh_expr(m + 1 + extra, Q1, Q3, E.var(0))


def sendtanh_expr(m: int, table: Mapping) -> E.Expr:
    _check_keys(table.keys())
    M = m + 1 + _sum_bits(table.values())
    x = E.var(0)
    out: E.Expr = E.ZERO_E
    for alpha, v in table.items():
        alpha = dy(alpha)
        b = sigtanh_expr(M, alpha - Q3, alpha - Q1, x) - sigtanh_expr(M, alpha + Q1, alpha + Q3, x)
        out = out + E.lift(v) * b
    return out
