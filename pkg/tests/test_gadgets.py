import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import encloses, mpf
from rcdflow import Ball, Dyadic, barycentric_select, bestiary_eval, eval_expr, manon_lim, relutanh, select_eval, sigtanh, xi_ext
from rcdflow import expr as E
from rcdflow.dyadic import dy
from rcdflow.errors import ContractError, DomainError
from rcdflow.gadgets import relutanh_expr, sendtanh, sendtanh2, sendtanh_expr, sigtanh_expr, tttanh, tttanh_expr

# independent oracles ---------------------------------------------------------------


def relu(x: Fraction) -> Fraction:
    return max(Fraction(0), x)


def sig(a, b, x) -> Fraction:
    a, b, x = Fraction(a), Fraction(b), Fraction(x)
    return min(Fraction(1), max(Fraction(0), (x - a) / (b - a)))


def frac_part(x: Fraction) -> Fraction:
    return x - math.floor(x)


def bestiary_oracle(kind: str, k: int, x: Fraction):
    """Ideal value on the window around integer k, from the defining formulas."""
    f = x - k
    if kind in ("xi1", "xi2"):
        return f
    if kind in ("sigma1", "sigma2"):
        return Fraction(k)
    if kind == "lambda":
        return Fraction(0) if f <= Fraction(1, 2) else Fraction(1)
    if kind == "mod2":
        return Fraction(k % 2)
    return Fraction(k // 2)


WINDOWS = {
    "xi1": (Fraction(-1, 2), Fraction(1, 4)),
    "sigma1": (Fraction(-1, 2), Fraction(1, 4)),
    "xi2": (Fraction(0), Fraction(3, 4)),
    "sigma2": (Fraction(0), Fraction(3, 4)),
    "mod2": (Fraction(-1, 4), Fraction(1, 4)),
    "div2": (Fraction(-1, 4), Fraction(1, 4)),
}


def in_window(kind: str, k: int, x: Fraction) -> bool:
    f = x - k
    if kind == "lambda":
        return Fraction(1, 4) <= f <= Fraction(1, 2) or Fraction(3, 4) <= f <= 1
    lo, hi = WINDOWS[kind]
    return lo <= f <= hi


# relu / sig ------------------------------------------------------------------------


def test_relutanh_examples():
    z = Dyadic(1, 10)
    b = relutanh(z, Ball(0))
    assert encloses(b, 0) and abs(b.c) <= Dyadic(1, -10)
    for x in (1, -1):
        ref = x * (1 + mpmath.tanh(4 * 2**10 * x)) / 2
        b = relutanh(z, Ball(x))
        assert encloses(b, ref)
        assert encloses(b, relu(Fraction(x)), Fraction(1, 2**10))


def test_relutanh_rejects_nonpositive_gain():
    with pytest.raises(DomainError):
        relutanh(0, Ball(1))


@settings(max_examples=300)
@given(st.integers(-(2**16), 2**16), st.sampled_from([5, 10, 20]))
def test_relutanh_bound(k, m):
    x = Fraction(k, 2**13)
    b = relutanh(Dyadic(1, m + 2), Ball(Dyadic(k, -13)))
    assert encloses(b, relu(x), Fraction(1, 2**m))


def test_sigtanh_examples():
    z = Dyadic(1, 12)
    for x, want in ((-5, 0), (Dyadic(1, -1), Fraction(1, 2)), (7, 1)):
        b = sigtanh(z, 0, 1, Ball(x))
        assert encloses(b, want, Fraction(1, 2**12))
    with pytest.raises(DomainError):
        sigtanh(z, 1, 1, Ball(0))


@settings(max_examples=300)
@given(
    st.integers(-(2**12), 2**12),
    st.sampled_from([(0, 1), (Dyadic(1, -2), Dyadic(1, -1)), (-1, 1), (0, Dyadic(3, -3))]),
    st.sampled_from([5, 10, 20]),
)
def test_sigtanh_bound(k, ab, m):
    a, b = (dy(v) for v in ab)
    x = Fraction(k, 2**9)
    out = sigtanh(Dyadic(1, m), a, b, Ball(Dyadic(k, -9)))
    assert encloses(out, sig(a.to_fraction(), b.to_fraction(), x), Fraction(1, 2**m))


# xi and bestiary -------------------------------------------------------------------


def test_xi_examples():
    for x in ("3.5", "0.5", "-2.5"):
        b = xi_ext((10, 4), Ball.coerce(x))
        assert encloses(b, Fraction(3, 8), Fraction(1, 2**10))


def test_xi_range_error():
    with pytest.raises(DomainError):
        xi_ext((10, 4), Ball(40))


@settings(max_examples=200, deadline=None)
@given(st.integers(-15, 15), st.integers(0, 96), st.sampled_from([5, 10]))
def test_xi_bound(k, j, m):
    x = k + Fraction(1, 8) + Fraction(j, 128)  # inside [k + 1/8, k + 7/8]
    b = xi_ext((m, 4), Ball(Dyadic(8 * k * 16 + 16 + j, -7)))
    assert encloses(b, frac_part(x - Fraction(1, 8)), Fraction(1, 2**m))


def test_bestiary_examples():
    s = (10, 4)
    assert encloses(bestiary_eval("sigma1", s, Ball.coerce("4.9")), 5, Fraction(1, 2**10))
    assert encloses(bestiary_eval("mod2", s, Ball.coerce("7.1")), 1, Fraction(1, 2**10))
    assert encloses(bestiary_eval("div2", s, Ball.coerce("6.2")), 3, Fraction(1, 2**10))


KINDS = ["xi1", "xi2", "sigma1", "sigma2", "lambda", "mod2", "div2"]


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(KINDS), st.integers(-15, 16), st.integers(0, 2**10), st.sampled_from([5, 10]))
def test_bestiary_bounds(kind, k, u, m):
    lo, hi = (Fraction(1, 4), Fraction(1)) if kind == "lambda" else WINDOWS[kind]
    x = k + lo + (hi - lo) * Fraction(u, 2**10)
    if not in_window(kind, k, x):
        return
    b = bestiary_eval(kind, (m, 4), Ball(Dyadic.from_fraction(x)))
    assert encloses(b, bestiary_oracle(kind, k, x), Fraction(1, 2**m))


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(KINDS), st.integers(-15 * 64, 16 * 64))
def test_bestiary_off_window_bounded(kind, k):
    x = Fraction(k, 64)
    b = bestiary_eval(kind, (6, 4), Ball(Dyadic(k, -6)))
    assert b.mag().to_fraction() <= abs(x) + 2


def test_bestiary_unknown_kind():
    with pytest.raises(DomainError):
        bestiary_eval("floor", (5, 4), Ball(1))


def test_narrow_balls_stay_narrow():
    # the rounding gadgets must contract input radius on their plateaus
    x = Ball(Dyadic(41, -3), Dyadic(1, -12))  # 5.125 +- 2^-12
    for kind in ("sigma1", "sigma2"):
        b = bestiary_eval(kind, (20, 4), x)
        assert encloses(b, 5, Fraction(1, 2**20)) and b.r < Dyadic(1, -12)


# selection -------------------------------------------------------------------------


def test_selection_examples():
    z = Dyadic(1, 10)
    tol = Fraction(1, 2**10)
    assert encloses(select_eval("tttanh", z, Ball.coerce("0.7"), Ball.coerce("0.1")), 0, tol)
    assert encloses(select_eval("sendtanh", z, {1: 5, 2: 9}, Ball.coerce("2.2")), 9, tol)
    assert encloses(select_eval("sendtanh2", z, {(1, 0): 3}, Ball.coerce("1.1"), Ball.coerce("0.2")), 3, tol)


@settings(max_examples=200, deadline=None)
@given(st.integers(-64, 64), st.integers(0, 1), st.integers(0, 2**8), st.sampled_from([5, 10, 20]))
def test_tttanh_bound(dk, gate, lk, m):
    d = Fraction(gate) + Fraction(dk, 256)  # within 1/4 of 0 or 1
    l = Fraction(lk, 2**8)
    b = tttanh(Dyadic(1, m), Ball(Dyadic.from_fraction(d)), Ball(Dyadic.from_fraction(l)))
    assert encloses(b, l * gate, Fraction(1, 2**m))


TABLE = {0: 2, 1: Dyadic(-3, -1), 3: 7}
TABLE2 = {(0, 0): 1, (1, 0): -2, (3, 1): Dyadic(5, -2), (1, 1): 0}


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(sorted(TABLE)), st.integers(-64, 64), st.sampled_from([5, 10, 20]))
def test_sendtanh_bound(key, off, m):
    x = Dyadic(key) + Dyadic(off, -8)
    b = sendtanh(Dyadic(1, m), TABLE, Ball(x))
    assert encloses(b, dy(TABLE[key]).to_fraction(), Fraction(1, 2**m))


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(sorted(TABLE2)), st.integers(-64, 64), st.integers(-64, 64), st.sampled_from([5, 10, 20]))
def test_sendtanh2_bound(key, ox, oy, m):
    x, y = Dyadic(key[0]) + Dyadic(ox, -8), Dyadic(key[1]) + Dyadic(oy, -8)
    b = sendtanh2(Dyadic(1, m), TABLE2, Ball(x), Ball(y))
    assert encloses(b, dy(TABLE2[key]).to_fraction(), Fraction(1, 2**m))


def test_selection_keys_must_be_separated():
    with pytest.raises(DomainError):
        sendtanh(Dyadic(1, 5), {0: 1, Dyadic(1, -1): 2}, Ball(0))


def test_barycentric_select():
    v1, v2 = Ball(Dyadic(5, -1)), Ball(-3)
    assert barycentric_select(1, v1, v2) == v1
    assert barycentric_select(0, v1, v2) == v2
    assert barycentric_select(Dyadic(1, -1), 2, 4) == Ball(3)
    with pytest.raises(DomainError):
        barycentric_select(3, v1, v2)


def test_manon_lim():
    x = Ball(Dyadic(3, -2))
    b = manon_lim(lambda x, k: x + Dyadic(1, -(k + 1)), x, 5)
    assert encloses(b, x.c) and b.r <= Dyadic(1, -5)

    def tanh_series(x, k):
        # partial sum of tanh(1) via mpmath at k bits, then an exact dyadic
        v = mpmath.mpf(mpmath.tanh(1))
        c = Dyadic.from_fraction(Fraction(int(v * 2 ** (k + 1)), 2 ** (k + 1)))
        return Ball(c)

    b = manon_lim(tanh_series, Ball(1), 20)
    assert encloses(b, mpmath.tanh(1)) and b.r <= Dyadic(1, -20)
    assert encloses(manon_lim(lambda x, k: Ball(7), x, 3), 7)
    with pytest.raises(ContractError):
        manon_lim(lambda x, k: Ball(0, 1), x, 3)


# expression closure ----------------------------------------------------------------


def _agree(a: Ball, b: Ball) -> bool:
    return abs(a.c - b.c) <= a.r + b.r


@pytest.mark.parametrize("m", [5, 10])
def test_gadgets_compile_to_basis_expressions(m):
    xs = [Dyadic(k, -4) for k in range(-40, 41, 3)]
    re, se = relutanh_expr(m), sigtanh_expr(m, Dyadic(1, -2), Dyadic(3, -2))
    te, st_ = tttanh_expr(m), sendtanh_expr(m, TABLE)
    for e in (re, se, te, st_):
        assert E.is_basis(E.expand_literals(e))
    for x in xs:
        X = Ball(x)
        assert _agree(eval_expr(re, [X], m + 8), relutanh(Dyadic(1, m), X))
        assert _agree(eval_expr(se, [X], m + 8), sigtanh(Dyadic(1, m), Dyadic(1, -2), Dyadic(3, -2), X))
        assert _agree(eval_expr(te, [X, Ball(Dyadic(1, -1))], m + 8), tttanh(Dyadic(1, m), X, Ball(Dyadic(1, -1))))
        assert _agree(eval_expr(st_, [X], m + 8), sendtanh(Dyadic(1, m), TABLE, X))
        assert encloses(eval_expr(se, [X], m + 8), sig(Fraction(1, 4), Fraction(3, 4), x.to_fraction()), Fraction(1, 2**m))
