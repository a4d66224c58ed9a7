"""Expression trees over the basis {0, 1, pi, x_i, +, -, *, tanh, cos, x/2, x/3}.

Trees are immutable and print/parse as s-expressions::

    (mul (tanh (var 0)) (half (pi)))

Integer and dyadic literals such as ``3`` or ``-0.375`` are accepted as sugar
for constant subtrees; :func:`expand_literals` rewrites them using only the
basis constants and operations.  ``(compose F G0 G1 ...)`` evaluates ``F`` with
its variables bound to the values of ``G0, G1, ...``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from .ball import Ball
from .dyadic import ZERO, Dyadic, dy
from .elementary import _sech2_factor, cos_ball, pi_ball, tanh_ball
from .errors import ArityError, DomainError, ResourceLimitError

ARITY = {
    "const0": 0,
    "const1": 0,
    "pi": 0,
    "var": 0,
    "lit": 0,
    "add": 2,
    "sub": 2,
    "mul": 2,
    "tanh": 1,
    "cos": 1,
    "half": 1,
    "third": 1,
}
KINDS = tuple(k for k in ARITY if k != "lit") + ("compose",)

MAX_GUARD = 4096


@dataclass(frozen=True)
class Expr:
    kind: str
    children: tuple["Expr", ...] = ()
    index: int = 0  # variable index for ``var``
    value: Dyadic | None = field(default=None, compare=True)  # literal payload

    def __post_init__(self):
        if self.kind == "compose":
            if not self.children:
                raise DomainError("compose needs an outer expression")
            outer = self.children[0]
            if outer.arity() > len(self.children) - 1:
                raise ArityError(
                    f"compose supplies {len(self.children) - 1} arguments, outer needs {outer.arity()}"
                )
            return
        if self.kind not in ARITY:
            raise DomainError(f"unknown expression kind {self.kind!r}")
        if len(self.children) != ARITY[self.kind]:
            raise ArityError(f"{self.kind} takes {ARITY[self.kind]} children, got {len(self.children)}")
        if self.kind == "var" and self.index < 0:
            raise DomainError("variable index must be nonnegative")
        if self.kind == "lit" and self.value is None:
            raise DomainError("literal without a value")

    # structure ---------------------------------------------------------

    def arity(self) -> int:
        """Number of variables the expression reads (max index + 1)."""
        if self.kind == "var":
            return self.index + 1
        if self.kind == "compose":
            return max((g.arity() for g in self.children[1:]), default=0)
        return max((c.arity() for c in self.children), default=0)

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children), default=0)

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)

    # operator sugar ----------------------------------------------------

    def __add__(self, other):
        return Expr("add", (self, lift(other)))

    def __radd__(self, other):
        return Expr("add", (lift(other), self))

    def __sub__(self, other):
        return Expr("sub", (self, lift(other)))

    def __rsub__(self, other):
        return Expr("sub", (lift(other), self))

    def __mul__(self, other):
        return Expr("mul", (self, lift(other)))

    def __rmul__(self, other):
        return Expr("mul", (lift(other), self))

    def __neg__(self):
        return Expr("sub", (ZERO_E, self))

    def __str__(self):
        return to_sexpr(self)


ZERO_E = Expr("const0")
ONE_E = Expr("const1")
PI_E = Expr("pi")


def var(i: int) -> Expr:
    return Expr("var", index=i)


def lit(x) -> Expr:
    return Expr("lit", value=dy(x))


def lift(x) -> Expr:
    return x if isinstance(x, Expr) else lit(x)


def tanh(e) -> Expr:
    return Expr("tanh", (lift(e),))


def cos(e) -> Expr:
    return Expr("cos", (lift(e),))


def half(e) -> Expr:
    return Expr("half", (lift(e),))


def third(e) -> Expr:
    return Expr("third", (lift(e),))


def compose(outer: Expr, *args) -> Expr:
    return Expr("compose", (outer,) + tuple(lift(a) for a in args))


def scale2k(e, k: int) -> Expr:
    """e * 2**k built from halvings or doublings."""
    e = lift(e)
    if k >= 0:
        for _ in range(k):
            e = e + e
        return e
    for _ in range(-k):
        e = half(e)
    return e


# literals ----------------------------------------------------------------


def _int_expr(n: int) -> Expr:
    if n == 0:
        return ZERO_E
    if n < 0:
        return Expr("sub", (ZERO_E, _int_expr(-n)))
    bits = bin(n)[3:]
    out = ONE_E
    for bit in bits:
        out = Expr("add", (out, out))
        if bit == "1":
            out = Expr("add", (out, ONE_E))
    return out


def literal_expr(x) -> Expr:
    """A basis-only tree evaluating exactly to the dyadic ``x``."""
    x = dy(x)
    e = _int_expr(x.m)
    for _ in range(max(0, -x.e)):
        e = Expr("half", (e,))
    for _ in range(max(0, x.e)):
        e = Expr("add", (e, e))
    return e


def expand_literals(e: Expr) -> Expr:
    if e.kind == "lit":
        return literal_expr(e.value)
    if not e.children:
        return e
    return Expr(e.kind, tuple(expand_literals(c) for c in e.children), e.index, e.value)


def is_basis(e: Expr) -> bool:
    return e.kind != "lit" and all(is_basis(c) for c in e.children)


# s-expressions -----------------------------------------------------------

_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")


def _tokens(text: str) -> list[str]:
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise DomainError(f"bad character at offset {pos}")
        out.append(m.group(1))
        pos = m.end()
    return out


_ALIASES = {"0": "const0", "1": "const1", "zero": "const0", "one": "const1"}


def parse_sexpr(text: str) -> Expr:
    toks = _tokens(text)
    if not toks:
        raise DomainError("empty expression")
    e, i = _parse(toks, 0)
    if i != len(toks):
        raise DomainError(f"trailing tokens after expression: {' '.join(toks[i:])}")
    return e


def _parse(toks: list[str], i: int) -> tuple[Expr, int]:
    if i >= len(toks):
        raise DomainError("unexpected end of expression")
    t = toks[i]
    if t == ")":
        raise DomainError("unexpected ')'")
    if t != "(":
        try:
            return lit(Dyadic.parse(t)), i + 1
        except DomainError:
            raise DomainError(f"unknown atom {t!r}") from None
    i += 1
    if i >= len(toks):
        raise DomainError("unexpected end of expression")
    head = _ALIASES.get(toks[i], toks[i])
    i += 1
    if head == "var":
        if i >= len(toks) or not re.fullmatch(r"\d+", toks[i]):
            raise DomainError("(var i) needs a nonnegative integer index")
        idx = int(toks[i])
        i += 1
        if i >= len(toks) or toks[i] != ")":
            raise DomainError("(var i) takes exactly one index")
        return var(idx), i + 1
    if head not in KINDS:
        raise DomainError(f"unknown expression kind {head!r}")
    kids = []
    while True:
        if i >= len(toks):
            raise DomainError("missing ')'")
        if toks[i] == ")":
            break
        c, i = _parse(toks, i)
        kids.append(c)
    return Expr(head, tuple(kids)), i + 1


def to_sexpr(e: Expr) -> str:
    if e.kind == "var":
        return f"(var {e.index})"
    if e.kind == "lit":
        return e.value.to_decimal()
    if not e.children:
        return f"({e.kind})"
    return "(" + e.kind + " " + " ".join(to_sexpr(c) for c in e.children) + ")"


# evaluation --------------------------------------------------------------


@dataclass
class StepRecord:
    """Radius accounting for one evaluated node.

    ``bound`` is local rounding error plus the Lipschitz-weighted child radii;
    ball arithmetic guarantees ``radius <= bound`` up to the 30-bit upward
    rounding of radii.
    """

    kind: str
    radius: Dyadic
    local: Dyadic
    bound: Dyadic


def _eval(e: Expr, env: Sequence[Ball], W: int, trace) -> Ball:
    k = e.kind
    if k == "const0":
        return Ball(0)
    if k == "const1":
        return Ball(1)
    if k == "lit":
        return Ball(e.value)
    if k == "var":
        return env[e.index]
    if k == "pi":
        out = pi_ball(W)
        if trace is not None:
            trace.append(StepRecord(k, out.r, out.r, out.r))
        return out
    if k == "compose":
        args = [_eval(g, env, W, trace) for g in e.children[1:]]
        return _eval(e.children[0], args, W, trace)
    kids = [_eval(c, env, W, trace) for c in e.children]
    if k == "add":
        out = kids[0] + kids[1]
    elif k == "sub":
        out = kids[0] - kids[1]
    elif k == "mul":
        out = kids[0] * kids[1]
    elif k == "tanh":
        out = tanh_ball(kids[0], W)
    elif k == "cos":
        out = cos_ball(kids[0], W)
    elif k == "half":
        out = kids[0].half()
    elif k == "third":
        out = kids[0].third(W)
    else:  # pragma: no cover - guarded by Expr validation
        raise DomainError(k)
    if trace is not None:
        trace.append(_record(k, kids, out, W))
    return out


def _record(k: str, kids: list[Ball], out: Ball, W: int) -> StepRecord:
    if k in ("add", "sub", "mul", "half"):
        local = ZERO
    elif k == "tanh":
        local = tanh_ball(Ball(kids[0].c), W).r
    elif k == "cos":
        local = cos_ball(Ball(kids[0].c), W).r
    else:
        local = Ball(kids[0].c).third(W).r
    if k in ("add", "sub"):
        prop = kids[0].r + kids[1].r
    elif k == "mul":
        prop = kids[0].r * kids[1].mag() + kids[1].r * abs(kids[0].c)
    elif k == "tanh":
        prop = kids[0].r * _sech2_factor(kids[0].mig())
    elif k == "cos":
        prop = kids[0].r
    elif k == "half":
        prop = kids[0].r.half()
    else:
        prop = kids[0].r * Dyadic(3, -3)  # 3/8 >= 1/3
    return StepRecord(k, out.r, local, local + prop)


def eval_expr(e: Expr, env: Sequence, bits: int, trace: list | None = None) -> Ball:
    """Certified value of ``e`` on the balls ``env``.

    Working precision grows until evaluating on the exact centers of ``env``
    gives a radius at most ``2**-bits``; the returned ball (evaluated on the
    full input balls) then has radius at most ``2**-bits`` plus the input
    radii propagated through the expression.
    """
    if bits < 0:
        raise DomainError("precision must be nonnegative")
    env = [Ball.coerce(b) for b in env]
    if len(env) < e.arity():
        raise ArityError(f"expression reads {e.arity()} variables, {len(env)} supplied")
    centers = [Ball(b.c) for b in env]
    target = Dyadic(1, -bits)
    guard = 8 + e.depth().bit_length() + 2
    while True:
        W = bits + guard
        probe = _eval(e, centers, W, None)
        if probe.r <= target:
            break
        guard *= 2
        if guard > MAX_GUARD:
            raise ResourceLimitError("expression needs more than the maximal guard bits")
    if all(b.is_exact() for b in env) and trace is None:
        return probe
    return _eval(e, env, W, trace)
