import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import encloses, mpf
from rcdflow import Ball, Dyadic, ball_arith, elem_eval, eval_expr, parse_sexpr, refine
from rcdflow.elementary import cos_ball, exp_ball, pi_ball, sin_ball, tanh_ball
from rcdflow.errors import ArityError, DomainError
from rcdflow.expr import expand_literals, is_basis, to_sexpr

dyadics = st.builds(Dyadic, st.integers(-(2**40), 2**40), st.integers(-60, 10))
radii = st.builds(Dyadic, st.integers(0, 2**20), st.integers(-60, -10))
balls = st.builds(Ball, dyadics, radii)


# dyadic --------------------------------------------------------------------------


@given(dyadics, dyadics)
def test_dyadic_ring_ops_are_exact(a, b):
    fa, fb = a.to_fraction(), b.to_fraction()
    assert (a + b).to_fraction() == fa + fb
    assert (a - b).to_fraction() == fa - fb
    assert (a * b).to_fraction() == fa * fb
    assert a.half().to_fraction() == fa / 2
    assert a.scale2k(7).to_fraction() == fa * 128


@given(dyadics)
def test_dyadic_text_round_trip(a):
    assert Dyadic.parse(a.to_decimal()) == a
    assert Dyadic.parse_binary(a.to_binary()) == a


def test_dyadic_parse_forms():
    assert Dyadic.parse_binary("101.1") == Dyadic(11, -1)
    assert Dyadic.parse("3/8") == Dyadic(3, -3)
    assert Dyadic.parse("-0.375") == Dyadic(-3, -3)
    with pytest.raises(DomainError):
        Dyadic.parse("1/3")


@given(dyadics, st.integers(0, 40))
def test_round_to_modes(a, bits):
    q = a.to_fraction()
    lo, hi = a.round_to(bits, "floor"), a.round_to(bits, "ceil")
    assert lo.to_fraction() <= q <= hi.to_fraction()
    assert hi.to_fraction() - lo.to_fraction() <= Fraction(1, 2**bits)
    assert abs(a.round_to(bits).to_fraction() - q) <= Fraction(1, 2 ** (bits + 1))


# ball arithmetic -----------------------------------------------------------------


def test_spec_examples_arith():
    assert ball_arith("add", Ball(1), Ball(1)) == Ball(2)
    half = ball_arith("div2", Ball(1))
    assert half.c == Dyadic(1, -1) and half.r == 0
    third = ball_arith("div3", Ball(1), guard_bits=20)
    assert encloses(third, Fraction(1, 3)) and third.r <= Dyadic(1, -20)


def _sample(rng, b: Ball) -> Fraction:
    u = Fraction(rng.randint(-(2**20), 2**20), 2**20)
    return b.c.to_fraction() + u * b.r.to_fraction()


def test_inclusion_monotonicity_10k_samples():
    rng = random.Random(1)
    ops = {
        "add": lambda x, y: x + y,
        "sub": lambda x, y: x - y,
        "mul": lambda x, y: x * y,
        "div2": lambda x, y: x / 2,
        "div3": lambda x, y: x / 3,
        "scale2k": lambda x, y: x * 8,
    }
    bad = 0
    for i in range(10_000):
        op = list(ops)[i % len(ops)]
        a = Ball(Dyadic(rng.randint(-(2**30), 2**30), -20), Dyadic(rng.randint(0, 2**10), -30))
        b = Ball(Dyadic(rng.randint(-(2**30), 2**30), -20), Dyadic(rng.randint(0, 2**10), -30))
        out = ball_arith(op, a, 3 if op == "scale2k" else b)
        x, y = _sample(rng, a), _sample(rng, b)
        bad += not encloses(out, ops[op](x, y))
    assert bad == 0


@given(dyadics, dyadics)
def test_exact_inputs_give_exact_outputs(a, b):
    A, B = Ball(a), Ball(b)
    for op in ("add", "sub", "mul", "div2"):
        assert ball_arith(op, A, B).r == 0
    assert ball_arith("scale2k", A, -5).r == 0


@given(balls)
def test_json_round_trip(b):
    assert Ball.from_json(b.to_json()) == b


def test_refine_examples():
    x = Ball.enclose_fraction(Fraction(1, 3), 40)
    r = refine(x, 10)
    assert r.c.frac_bits() <= 12 and encloses(r, Fraction(1, 3))
    r = refine(Ball(2), 5)
    assert r.c == 2 and r.r <= Dyadic(1, -6)
    r = refine(Ball(0), 0)
    assert r.c == 0 and r.r <= Dyadic(1, -1)


@given(balls, st.integers(0, 50))
def test_refine_contains_input(b, bits):
    r = refine(b, bits)
    assert r.c.frac_bits() <= bits + 2
    assert r.lower <= b.lower and b.upper <= r.upper
    # radii are rounded up to 30 significant bits
    assert r.r <= b.r + b.r.scale2k(-28) + Dyadic(1, -(bits + 1))


# elementary functions ------------------------------------------------------------


def test_elementary_examples():
    t = tanh_ball(Ball(0), 30)
    assert encloses(t, 0) and t.r <= Dyadic(1, -30)
    p = pi_ball(40)
    assert encloses(p, mpmath.pi) and p.r <= Dyadic(1, -40)
    c = cos_ball(p, 30)
    assert encloses(c, -1) and c.r <= Dyadic(1, -29)
    assert encloses(elem_eval("pi", None, 60), mpmath.pi)


@settings(max_examples=150, deadline=None)
@given(st.integers(-(2**24), 2**24), st.sampled_from([10, 30, 60]))
def test_elementary_match_mpmath(k, bits):
    x = Dyadic(k, -18)  # |x| <= 64
    xm = mpmath.mpf(k) / 2**18
    tol = Fraction(1, 2**bits)
    for fn, ref in ((tanh_ball, mpmath.tanh), (sin_ball, mpmath.sin), (cos_ball, mpmath.cos)):
        b = fn(Ball(x), bits)
        assert encloses(b, ref(xm))
        assert b.r <= tol
    if k < 2**21:
        assert encloses(exp_ball(Ball(x), bits), mpmath.exp(xm))


@given(st.integers(-(2**20), 2**20), st.integers(0, 2**12))
def test_elementary_on_wide_balls(k, rad):
    b = Ball(Dyadic(k, -16), Dyadic(rad, -16))
    for fn, ref in ((tanh_ball, mpmath.tanh), (sin_ball, mpmath.sin)):
        out = fn(b, 20)
        for x in (b.lower, b.upper, b.c):
            assert encloses(out, ref(mpf(x)))


def test_tanh_saturation():
    b = tanh_ball(Ball(200), 40)
    assert encloses(b, mpmath.tanh(200)) and b.r <= Dyadic(1, -40)
    assert encloses(tanh_ball(Ball(-200), 40), -1)


def test_negative_precision_rejected():
    with pytest.raises(DomainError):
        tanh_ball(Ball(1), -1)


# expressions ---------------------------------------------------------------------


def test_expr_examples():
    b = eval_expr(parse_sexpr("(cos (pi))"), [], 20)
    assert encloses(b, -1) and b.r <= Dyadic(1, -20)
    b = eval_expr(parse_sexpr("(half (var 0))"), [Ball(1)], 20)
    assert b.c == Dyadic(1, -1) and b.r <= Dyadic(1, -20)
    b = eval_expr(parse_sexpr("(tanh (var 0))"), [Ball(1)], 30)
    assert encloses(b, mpmath.tanh(1)) and b.r <= Dyadic(1, -30)


def test_sexpr_round_trip_and_literals():
    text = "(mul (tanh (var 0)) (half (pi)))"
    e = parse_sexpr(text)
    assert to_sexpr(e) == text
    lit = parse_sexpr("(add (var 0) -0.375)")
    basis = expand_literals(lit)
    assert is_basis(basis)
    for v in (0, 1, Dyadic(-7, -2)):
        assert eval_expr(basis, [Ball(v)], 40) == eval_expr(lit, [Ball(v)], 40)


def test_expr_errors():
    with pytest.raises(ArityError):
        eval_expr(parse_sexpr("(add (var 0) (var 1))"), [Ball(1)], 10)
    with pytest.raises(ValueError):
        parse_sexpr("(tanh (var 0) (var 1))")
    with pytest.raises(ValueError):
        parse_sexpr("(frobnicate 1)")


def test_compose():
    e = parse_sexpr("(compose (mul (var 0) (var 1)) (pi) (third (var 0)))")
    b = eval_expr(e, [Ball(3)], 40)
    assert encloses(b, mpmath.pi) and b.r <= Dyadic(1, -40)


def test_radius_composition_accounting():
    e = parse_sexpr("(add (tanh (mul (var 0) (var 0))) (cos (third (var 1))))")
    trace = []
    env = [Ball(Dyadic(3, -2), Dyadic(1, -20)), Ball(Dyadic(5, -1), Dyadic(1, -18))]
    out = eval_expr(e, env, 24, trace)
    assert trace
    for rec in trace:
        assert rec.radius <= rec.bound + rec.bound.scale2k(-20) + Dyadic(1, -200)
    assert out.r == trace[-1].radius
