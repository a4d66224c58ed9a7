"""Gadget-built real maps on encoded configurations and dyadics.

:func:`next_real` simulates one machine step on ``(q, lbar, rbar)``.  Both
tape halves are first *cleaned*: their base-4 digits are read off one at a
time by a two-ramp staircase, which snaps every digit to {0, 1, 3} and so
absorbs input perturbations below ``4**-(S+2)``.  The scanned symbol and the
state then select the written symbol, next state and move through the pair
selection gadget, and the tape is shifted with affine push/pop maps.
"""

from __future__ import annotations

from .ball import Ball
from .dyadic import ONE, Dyadic
from .errors import DomainError
from .gadgets import _ceil_log2, barycentric_select, bump, pair_weights, sigtanh
from .tm import ALPHABET, EncodedConfig, TMSpec
from .xi import GadgetScale, _scale, bestiary_eval

Q1, Q3 = Dyadic(1, -2), Dyadic(3, -2)
R_LO, R_HI = Dyadic(9, -2), Dyadic(11, -2)  # 2.25, 2.75


def _sig(M: int, a, b, x) -> Ball:
    return sigtanh(Dyadic(1, M), a, b, x)


def digit(M: int, x: Ball, gap: Dyadic) -> Ball:
    """Snap x to 0, 1 or 3 when x lies in [d - gap/16, d + 1 - gap + gap/16]."""
    return _sig(M, ONE - gap * Q3, ONE - gap * Q1, x) + _sig(M, R_LO, R_HI, x).scale2k(1)


def extract_digits(x: Ball, k: int, M: int) -> list[Ball]:
    """The first k base-4 digits of a perturbed word encoding.

    Valid when x is within 4**-(k+2) of an encoded word of length <= k; the
    digits come back within about 2**-M of the exact ones, provided
    M >= 2k + 6.
    """
    out = []
    v = x
    for i in range(k):
        v = v.scale2k(2)
        d = digit(M, v, Dyadic(1, -2 * (k - i - 1)))
        out.append(d)
        v = v - d
    return out


def recompose(digits: list[Ball]) -> Ball:
    """Sum of d_i 4**-(i+1)."""
    out = Ball(0)
    for d in reversed(digits):
        out = (out + d).scale2k(-2)
    return out


def _transition_tables(m: TMSpec) -> dict:
    tabs = {"q2": {}, "w": {}, "mv": {}, "halt": {}}
    for q in range(m.num_states):
        for a in ALPHABET:
            q2, w, mv = m.delta(q, a)
            tabs["q2"][(q, a)] = q2
            tabs["w"][(q, a)] = w
            tabs["mv"][(q, a)] = 1 if mv == "R" else 0
            tabs["halt"][(q, a)] = 1 if m.is_final(q) else 0
    return tabs


def next_real(m: TMSpec, s, S: int, ec: EncodedConfig) -> EncodedConfig:
    """One machine step on encodings, within 2**-s.m of the exact successor.

    Robust: any input within 4**-(S+2) of an exact encoding of a
    configuration using at most S cells per side gives the same guarantee.
    """
    s = _scale(s)
    if S < 1:
        raise DomainError("space bound must be at least 1")
    mbits = s.m
    qmax = max(1, m.num_states - 1)
    M_dig = max(mbits + 8, 2 * S + 8)
    M_sel = mbits + 6 + _ceil_log2(Dyadic(3 * m.num_states * (qmax + 6)))
    ldig = extract_digits(ec.lbar, S, M_dig)
    rdig = extract_digits(ec.rbar, S, M_dig)
    l0, r0 = ldig[0], rdig[0]
    rest_l = recompose(ldig[1:])
    rest_r = recompose(rdig[1:])
    lclean = recompose(ldig)
    rclean = recompose(rdig)

    weights = pair_weights(M_sel, range(m.num_states), ALPHABET, ec.q, r0)
    tabs = _transition_tables(m)

    def select(name: str) -> Ball:
        out = Ball(0)
        for (q, a), v in tabs[name].items():
            if v:
                out = out + weights[(Dyadic(q), Dyadic(a))] * v
        return out

    q2, w, mv, halt = (select(k) for k in ("q2", "w", "mv", "halt"))

    # move right: push w onto the left half, pop the scanned cell
    lR = (w + lclean).scale2k(-2)
    rR = rest_r
    # move left: pop l0 from the left half, push l0 and w in front of rest_r
    lL = rest_l
    rL = l0.scale2k(-2) + w.scale2k(-4) + rest_r.scale2k(-4)

    lnew = barycentric_select(mv, lR, lL)
    rnew = barycentric_select(mv, rR, rL)
    qc = recompose_state(ec.q, M_sel, m.num_states)
    return EncodedConfig(
        barycentric_select(halt, qc, q2),
        barycentric_select(halt, lclean, lnew),
        barycentric_select(halt, rclean, rnew),
    )


def recompose_state(q: Ball, M: int, n: int) -> Ball:
    """Snap a state value near an integer in 0..n-1 back onto it."""
    out = Ball(0)
    for k in range(1, n):
        out = out + bump(M, k, q) * k
    return out


# integers and dyadics ----------------------------------------------------------


def _pair_value(bit: Ball) -> Ball:
    # pair "1 x" with x = 1 + 2 bit: 1/4 + (1 + 2 bit)/16
    return Q1 + (bit.scale2k(1) + 1).scale2k(-4)


def decode_nat(s, n: int) -> Ball:
    """Within 2**-s.m of the encoding of the binary digits of n (pairs 11/13).

    Bits are produced least significant first with the parity and halving
    gadgets; later pairs are gated off once the remaining value reaches 0.
    The internal precision is raised so the result is also accurate enough
    for digit extraction (within 4**-(L+2) for a code of length L).
    """
    s = _scale(s)
    if n < 0:
        raise DomainError("decode_nat needs n >= 0")
    nb = max(1, n.bit_length())
    if n > (1 << s.n):
        raise DomainError(f"n = {n} exceeds 2^{s.n}")
    L = 2 * nb
    K = s.n + 1
    mi = max(s.m, 2 * L + 6) + _ceil_log2(Dyadic(K)) + 4
    g = GadgetScale(mi, s.n)
    x = Ball(n)
    enc = None
    for i in range(K):
        b = bestiary_eval("mod2", g, x)
        pushed = _pair_value(b) + (enc.scale2k(-4) if enc is not None else Ball(0))
        if enc is None:
            enc = pushed
        else:
            gate = _sig(mi + 2, Q1, Q3, x)
            enc = barycentric_select(gate, pushed, enc)
        x = bestiary_eval("div2", g, x)
    return enc


def encode_mul(s, S: int, g, lam) -> Ball:
    """lam * d from a perturbed code of the dyadic d (at most S + 1 binary digits)."""
    s = _scale(s)
    g, lam = Ball.coerce(g), Ball.coerce(lam)
    if S < 0:
        raise DomainError("space bound must be nonnegative")
    if g.lower < -Q1 or g.upper > 1 + Q1:
        raise DomainError("code value outside [0, 1]")
    L = 2 * (S + 1)
    lam_bits = _ceil_log2(lam.mag() + 1)
    M = s.m + 2 * S + 12 + lam_bits
    digits = extract_digits(g, L, max(M, 2 * L + 8))
    I = Ball(0)
    F = Ball(0)
    w = Ball(Dyadic(1, -1))
    for k in range(0, L, 2):
        p, q = digits[k], digits[k + 1]
        pre = bump(M, 1, p)
        post = _sig(M, R_LO, R_HI, p)
        bit = _sig(M, R_LO, R_HI, q)
        I = I + pre * (I + bit)
        F = F + post * bit * w
        w = w - (post * w).scale2k(-1)
    return lam * (I + F)
