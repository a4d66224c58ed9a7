import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import MACHINES, encloses
from rcdflow import Ball, Dyadic, SpecError, TMConfig, decode_config, decode_nat, encode_config, encode_dyadic, encode_mul, next_real, parse_tm_spec, step_exact
from rcdflow.errors import DecodeError, DomainError
from rcdflow.tm import EncodedConfig, decode_dyadic, decode_word, encode_word, initial_config, run_exact, tm_from_json

words = st.text(alphabet="013", max_size=12)

INPUTS = {
    "succ": ["1", "13", "111", "1313", "33"],
    "palindrome": ["1", "13", "131", "1331", "311"],
    "bounce": ["1", "13", "3", "1313"],
}


def word_value(w: str) -> Fraction:
    return sum((Fraction(int(c), 4 ** (i + 1)) for i, c in enumerate(w)), Fraction(0))


# encode / decode words -------------------------------------------------------------


def test_encode_word_examples():
    assert encode_word("1") == Dyadic(1, -2)
    assert encode_word("13") == Dyadic(7, -4)
    assert encode_word("") == 0
    with pytest.raises(DomainError):
        encode_word("12")


@given(words)
def test_encode_word_matches_sum(w):
    v = encode_word(w)
    assert v.to_fraction() == word_value(w)
    assert 0 <= v.to_fraction() < 1
    # digit-by-digit image check
    x = v.to_fraction()
    for c in w:
        x *= 4
        assert int(x) == int(c)
        x -= int(x)


def test_decode_word_examples():
    assert decode_word(Ball(Dyadic(1, -2), Dyadic(1, -10)), 3) == "1"
    assert decode_word(Ball(Dyadic(7, -4)), 2) == "13"
    with pytest.raises(DecodeError):
        decode_word(Ball(Dyadic(1, -1)), 2)
    with pytest.raises(DecodeError):
        decode_word(Ball(Dyadic(1, -2), Dyadic(1, -3)), 3)


def test_half_has_no_short_encoding():
    # exhaustive check of every word with at most two symbols
    tol = Fraction(1, 4**4)
    near = [a + b for a in "013" for b in ["", *"013"] if abs(word_value(a + b) - Fraction(1, 2)) <= tol]
    assert near == []


@given(words.filter(lambda w: not w.endswith("0")), st.integers(-(2**10), 2**10))
def test_decode_word_round_trip(w, k):
    S = max(len(w), 1)
    pert = Dyadic(k, -2 * (S + 2) - 11)  # |pert| <= 4^-(S+2) / 2
    assert decode_word(Ball(encode_word(w) + pert), S) == w


# exact machines --------------------------------------------------------------------


def test_parse_fixtures(machines):
    assert machines["succ"].num_states == 3


def _bad_spec(tmp_path, mutate):
    obj = json.loads((MACHINES / "succ.json").read_text())
    mutate(obj)
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(obj))
    return p


def test_missing_transition_is_named(tmp_path):
    p = _bad_spec(tmp_path, lambda o: o["transitions"].pop(0))
    with pytest.raises(SpecError) as exc:
        parse_tm_spec(p)
    assert any("q=0" in msg and "read=1" in msg for msg in exc.value.problems)


def test_bad_symbol_is_named(tmp_path):
    def mutate(o):
        o["transitions"][0]["write"] = 2

    with pytest.raises(SpecError) as exc:
        parse_tm_spec(_bad_spec(tmp_path, mutate))
    assert any("alphabet is {0,1,3}" in msg for msg in exc.value.problems)


def test_every_violation_reported(tmp_path):
    def mutate(o):
        o["transitions"][0]["write"] = 2
        o["transitions"][1]["q2"] = 99
        o["initial"] = -1

    with pytest.raises(SpecError) as exc:
        parse_tm_spec(_bad_spec(tmp_path, mutate))
    assert len(exc.value.problems) >= 3


def test_malformed_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    with pytest.raises(SpecError):
        parse_tm_spec(p)
    with pytest.raises(SpecError):
        tm_from_json([])


def test_successor_trace(machines):
    m = machines["succ"]
    trace = run_exact(m, initial_config(m, "1"), 6)
    # binary successor in the {1,3} alphabet: "1" -> "3"
    assert trace[3] == TMConfig(2, "3", "")
    assert trace[-1] == trace[3]  # halting self-loop
    assert step_exact(m, trace[3]) == trace[3]


def _hand_step(m, c: TMConfig) -> TMConfig:
    """Textbook single step on an explicit tape, as an independent oracle."""
    if m.is_final(c.q):
        return c
    head = c.right[0] if c.right else "0"
    q2, w, mv = m.delta(c.q, int(head))
    tape_l, tape_r = list(c.left), [str(w)] + list(c.right[1:])
    if mv == "R":
        tape_l = [tape_r.pop(0)] + tape_l
    else:
        tape_r = [tape_l.pop(0) if tape_l else "0"] + tape_r
    return TMConfig(q2, "".join(tape_l), "".join(tape_r)).normalized()


@pytest.mark.parametrize("name", sorted(INPUTS))
def test_step_exact_matches_hand_oracle(machines, name):
    m = machines[name]
    for w in INPUTS[name]:
        c = initial_config(m, w)
        for _ in range(40):
            nxt = step_exact(m, c)
            assert nxt == _hand_step(m, c)
            c = nxt


# encoded configurations ------------------------------------------------------------


def test_encode_config_example():
    ec = encode_config(TMConfig(2, "1", "31"))
    assert ec.q == Ball(2) and ec.lbar == Ball(Dyadic(1, -2))
    assert ec.rbar.c.to_fraction() == Fraction(13, 16)
    assert encode_config(TMConfig(1)).lbar == Ball(0)


@settings(max_examples=200)
@given(st.integers(0, 7), words.filter(lambda w: not w.endswith("0")), words.filter(lambda w: not w.endswith("0")), st.integers(-64, 64))
def test_config_round_trip(q, left, right, k):
    c = TMConfig(q, left, right)
    S = max(c.cells(), 1)
    pert = Dyadic(k, -2 * (S + 2) - 7)
    ec = encode_config(c)
    noisy = EncodedConfig(ec.q + Ball(pert), ec.lbar + Ball(pert), ec.rbar - Ball(pert))
    assert decode_config(noisy, S) == c


def test_decode_state_tolerance():
    with pytest.raises(DecodeError):
        decode_config(EncodedConfig(Ball(Dyadic(3, -1)), Ball(0), Ball(0)), 2)


def _trace_configs(machines, name, steps=50):
    m = machines[name]
    out = []
    for w in INPUTS[name]:
        out += run_exact(m, initial_config(m, w), steps)
    return m, list(dict.fromkeys(c.normalized() for c in out))


@pytest.mark.parametrize("name", sorted(INPUTS))
def test_next_real_round_trip(machines, name):
    m, configs = _trace_configs(machines, name)
    S = max(max(c.cells() for c in configs), 1)
    M = S + 6
    for c in configs:
        out = next_real(m, (M, 0), S, encode_config(c))
        want = encode_config(step_exact(m, c))
        assert decode_config(out, S) == step_exact(m, c)
        for a, b in zip(out.as_list(), want.as_list()):
            assert encloses(a, b.c, Fraction(1, 2**M))


@pytest.mark.parametrize("name", sorted(INPUTS))
def test_next_real_robustness_tube(machines, name):
    m, configs = _trace_configs(machines, name)
    S = max(max(c.cells() for c in configs), 1)
    M = S + 6
    rng = random.Random(7)
    tube = 4 ** (S + 2)
    for i in range(100):
        c = rng.choice(configs)
        ec = encode_config(c)
        noise = [Dyadic.from_fraction(Fraction(rng.randint(-(2**16), 2**16), 2**16 * tube)) for _ in range(3)]
        noisy = EncodedConfig(*(b + Ball(d) for b, d in zip(ec.as_list(), noise)))
        out = next_real(m, (M, 0), S, noisy)
        want = encode_config(step_exact(m, c))
        for a, b in zip(out.as_list(), want.as_list()):
            assert encloses(a, b.c, Fraction(1, 2**M)), (i, c)


# dyadic and integer codes ----------------------------------------------------------


def test_encode_dyadic_examples():
    assert encode_dyadic(Dyadic.parse_binary("101.1")) == "13111333"
    assert encode_dyadic(0) == "11"
    assert encode_dyadic(1) == "13"
    with pytest.raises(DomainError):
        encode_dyadic(-1)


@given(st.integers(0, 2**20), st.integers(0, 12))
def test_encode_dyadic_round_trip(k, e):
    d = Dyadic(k, -e)
    w = encode_dyadic(d)
    assert set(w) <= {"1", "3"}
    assert decode_dyadic(w) == d


def test_decode_nat_examples():
    tol = Fraction(1, 2**10)
    assert encloses(decode_nat((10, 4), 5), encode_word("131113").to_fraction(), tol)
    assert encloses(decode_nat((10, 4), 0), Fraction(5, 16), tol)
    assert encloses(decode_nat((10, 4), 1), encode_word("13").to_fraction(), tol)


@pytest.mark.parametrize("n", range(0, 17))
def test_decode_nat_matches_code(n):
    b = decode_nat((12, 4), n)
    assert encloses(b, encode_word(encode_dyadic(n)).to_fraction(), Fraction(1, 2**12))


def test_encode_mul_examples():
    g = Ball(encode_word("13111333"))
    assert encloses(encode_mul((10, 4), 4, g, Ball(1)), Fraction(11, 2), Fraction(1, 2**10))
    assert encloses(encode_mul((10, 4), 4, g, Ball(0)), 0, Fraction(1, 2**10))
    g1 = Ball(encode_word("13"))
    assert encloses(encode_mul((10, 4), 1, g1, Ball(Dyadic(1, -1))), Fraction(1, 2), Fraction(1, 2**10))


def test_encode_mul_perturbed_code():
    S = 4
    g = Ball(encode_word("13111333") + Dyadic(3, -2 * (2 * S + 4)))
    assert encloses(encode_mul((10, 4), S, g, Ball(3)), Fraction(33, 2), Fraction(1, 2**10))


@pytest.mark.parametrize("S", [2, 3, 4])
def test_decode_nat_encode_mul_inverse(S):
    m = 10
    for n in range(0, 2**S + 1):
        g = decode_nat((m, S + 1), n)
        back = encode_mul((m, S + 1), S, g, Ball(1))
        assert encloses(back, n, Fraction(2, 2**m)), n
