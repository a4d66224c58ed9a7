"""Exact Turing machines over {0, 1, 3} and their radix-4 real encodings.

A configuration ``(q, left, right)`` keeps the tape as two words read
outward from the head: ``right[0]`` is the scanned cell and ``left[0]`` the
cell just left of it.  Trailing blanks are never stored.  A word
``w0 w1 ...`` is encoded as the base-4 fraction ``0.w0 w1 ...``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .ball import Ball
from .dyadic import ZERO, Dyadic, dy
from .errors import DecodeError, DomainError, SpecError

ALPHABET = (0, 1, 3)
MOVES = ("L", "R")


def _check_word(w: str) -> str:
    bad = sorted(set(w) - set("013"))
    if bad:
        raise DomainError(f"invalid tape symbol(s) {''.join(bad)!r}: alphabet is {{0,1,3}}")
    return w


def normalize(w: str) -> str:
    """Drop trailing blanks."""
    return w.rstrip("0")


@dataclass(frozen=True)
class TMSpec:
    num_states: int
    initial: int
    finals: frozenset
    transitions: Mapping  # (q, read) -> (q2, write, move)

    def __post_init__(self):
        problems = validate_spec(self.num_states, self.initial, self.finals, self.transitions)
        if problems:
            raise SpecError(problems)

    def delta(self, q: int, a: int) -> tuple[int, int, str]:
        return self.transitions[(q, a)]

    def is_final(self, q: int) -> bool:
        return q in self.finals

    def to_json(self) -> dict:
        return {
            "states": self.num_states,
            "initial": self.initial,
            "finals": sorted(self.finals),
            "transitions": [
                {"q": q, "read": a, "q2": q2, "write": w, "move": mv}
                for (q, a), (q2, w, mv) in sorted(self.transitions.items())
            ],
        }


def validate_spec(num_states, initial, finals, transitions) -> list[str]:
    problems = []
    if not isinstance(num_states, int) or num_states < 1:
        problems.append("states: must be a positive integer")
        return problems
    states = range(num_states)
    if initial not in states:
        problems.append(f"initial: state {initial} outside 0..{num_states - 1}")
    for f in finals:
        if f not in states:
            problems.append(f"finals: state {f} outside 0..{num_states - 1}")
    for (q, a), (q2, w, mv) in transitions.items():
        where = f"transition (q={q}, read={a})"
        if q not in states:
            problems.append(f"{where}: state {q} outside 0..{num_states - 1}")
        if q2 not in states:
            problems.append(f"{where}: q2={q2} outside 0..{num_states - 1}")
        if a not in ALPHABET:
            problems.append(f"{where}: read symbol {a}: alphabet is {{0,1,3}}")
        if w not in ALPHABET:
            problems.append(f"{where}: write symbol {w}: alphabet is {{0,1,3}}")
        if mv not in MOVES:
            problems.append(f"{where}: move {mv!r} must be L or R")
    for q in states:
        for a in ALPHABET:
            if (q, a) not in transitions:
                problems.append(f"missing transition for (q={q}, read={a})")
    return problems


@dataclass(frozen=True)
class TMConfig:
    q: int
    left: str = ""
    right: str = ""

    def __post_init__(self):
        _check_word(self.left)
        _check_word(self.right)

    def normalized(self) -> "TMConfig":
        return TMConfig(self.q, normalize(self.left), normalize(self.right))

    def cells(self) -> int:
        """Cells used on the larger side."""
        return max(len(self.left), len(self.right))

    def to_json(self) -> dict:
        return {"q": self.q, "left": self.left, "right": self.right}

    @classmethod
    def from_json(cls, obj) -> "TMConfig":
        return cls(int(obj["q"]), str(obj.get("left", "")), str(obj.get("right", ""))).normalized()


def initial_config(m: TMSpec, word: str) -> TMConfig:
    """Head on the first input symbol, nothing to the left."""
    _check_word(word)
    if "0" in normalize(word):
        raise DomainError("input words may not contain blanks")
    return TMConfig(m.initial, "", normalize(word))


def step_exact(m: TMSpec, c: TMConfig) -> TMConfig:
    """One step of the machine; final states are fixed points."""
    if m.is_final(c.q):
        return c
    a = int(c.right[0]) if c.right else 0
    q2, w, mv = m.delta(c.q, a)
    rest = c.right[1:]
    if mv == "R":
        left, right = str(w) + c.left, rest
    else:
        l0 = c.left[0] if c.left else "0"
        left, right = c.left[1:], l0 + str(w) + rest
    return TMConfig(q2, normalize(left), normalize(right))


def run_exact(m: TMSpec, c: TMConfig, steps: int) -> list[TMConfig]:
    """The trace c, step(c), ..., with ``steps + 1`` entries."""
    out = [c]
    for _ in range(steps):
        c = step_exact(m, c)
        out.append(c)
    return out


# encodings -------------------------------------------------------------------


def encode_word(w: str) -> Dyadic:
    """Sum of w_n 4**-(n+1)."""
    _check_word(w)
    if not w:
        return ZERO
    return Dyadic(int(w, 4), -2 * len(w))


def decode_word(x, S: int) -> str:
    """The word of length <= S whose encoding is nearest to ``x``.

    Greedy: multiply by 4 and take the largest symbol not above the scaled
    value.  With ``k`` digits left the tail is at most ``1 - 4**-k`` while the
    scaled perturbation is at most ``4**-k / 16``, so a slack of ``4**-k / 4``
    makes every choice unambiguous.  The input must lie within 4**-(S+2) of
    an encoding.
    """
    x = Ball.coerce(x)
    if S < 0:
        raise DomainError("space bound must be nonnegative")
    tol = Dyadic(1, -2 * (S + 2))
    if x.r > tol:
        raise DecodeError(f"radius {float(x.r):.3g} too large to decode at space {S}")
    digits = []
    v = x.c
    for i in range(S):
        v = v.scale2k(2)
        f = v + Dyadic(1, -2 * (S - i) - 2)
        d = 3 if f >= 3 else (1 if f >= 1 else 0)
        digits.append(str(d))
        v = v - d
    w = normalize("".join(digits))
    if abs(x.c - encode_word(w)) > tol:
        raise DecodeError(f"{x.c.to_decimal(12)} is not within 4^-{S + 2} of an encoded word of length <= {S}")
    return w


@dataclass(frozen=True)
class EncodedConfig:
    q: Ball
    lbar: Ball
    rbar: Ball

    def as_list(self) -> list[Ball]:
        return [self.q, self.lbar, self.rbar]

    @classmethod
    def from_list(cls, v) -> "EncodedConfig":
        q, l, r = v
        return cls(Ball.coerce(q), Ball.coerce(l), Ball.coerce(r))

    def dist(self, other: "EncodedConfig") -> Dyadic:
        """Max distance between centers."""
        return max(abs(a.c - b.c) for a, b in zip(self.as_list(), other.as_list()))

    def radius(self) -> Dyadic:
        return max(b.r for b in self.as_list())


def encode_config(c: TMConfig) -> EncodedConfig:
    return EncodedConfig(Ball(c.q), Ball(encode_word(c.left)), Ball(encode_word(c.right)))


def decode_config(ec: EncodedConfig, S: int) -> TMConfig:
    qc = ec.q.c
    q = qc.round_to(0).floor()
    if abs(qc - q) + ec.q.r > Dyadic(1, -2):
        raise DecodeError(f"state value {qc.to_decimal(8)} is not within 1/4 of an integer")
    return TMConfig(q, decode_word(ec.lbar, S), decode_word(ec.rbar, S))


def encode_dyadic(d) -> str:
    """Pairwise code: integer bits 0/1 -> 11/13, fraction bits 0/1 -> 31/33."""
    d = dy(d)
    if d < 0:
        raise DomainError("only nonnegative dyadics are encoded")
    ip = d.floor()
    frac = d - ip
    out = ["13" if b == "1" else "11" for b in bin(ip)[2:]]
    if frac.m:
        k = -frac.e
        fbits = bin(frac.m)[2:].rjust(k, "0")
        out += ["33" if b == "1" else "31" for b in fbits]
    return "".join(out)


def decode_dyadic(w: str) -> Dyadic:
    """Inverse of :func:`encode_dyadic`."""
    if len(w) % 2:
        raise DecodeError("dyadic code has odd length")
    ip, fbits = 0, []
    for i in range(0, len(w), 2):
        pair = w[i : i + 2]
        if pair in ("11", "13"):
            if fbits:
                raise DecodeError("integer digit after fraction digits")
            ip = 2 * ip + (pair == "13")
        elif pair in ("31", "33"):
            fbits.append("1" if pair == "33" else "0")
        else:
            raise DecodeError(f"invalid digit pair {pair!r}")
    frac = Dyadic(int("".join(fbits), 2), -len(fbits)) if fbits else ZERO
    return Dyadic(ip) + frac


# spec files -------------------------------------------------------------------


def tm_from_json(obj) -> TMSpec:
    problems = []
    if not isinstance(obj, dict):
        raise SpecError("top level: expected a JSON object")
    for key in ("states", "initial", "finals", "transitions"):
        if key not in obj:
            problems.append(f"{key}: missing field")
    if problems:
        raise SpecError(problems)
    trans = {}
    if not isinstance(obj["transitions"], list):
        raise SpecError("transitions: expected a list")
    for i, t in enumerate(obj["transitions"]):
        where = f"transitions[{i}]"
        if not isinstance(t, dict):
            problems.append(f"{where}: expected an object")
            continue
        missing = [k for k in ("q", "read", "q2", "write", "move") if k not in t]
        if missing:
            problems.append(f"{where}: missing {', '.join(missing)}")
            continue
        key = (t["q"], t["read"])
        if key in trans:
            problems.append(f"{where}: duplicate transition for (q={key[0]}, read={key[1]})")
        trans[key] = (t["q2"], t["write"], t["move"])
    finals = obj["finals"]
    if not isinstance(finals, list):
        problems.append("finals: expected a list")
        finals = []
    problems += validate_spec(obj["states"], obj["initial"], finals, trans)
    if problems:
        raise SpecError(problems)
    return TMSpec(obj["states"], obj["initial"], frozenset(finals), trans)


def parse_tm_spec(path) -> TMSpec:
    """Load and validate a machine description; every violation is reported."""
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    except OSError as exc:
        raise SpecError(f"{path}: {exc.strerror}") from None
    return tm_from_json(obj)
