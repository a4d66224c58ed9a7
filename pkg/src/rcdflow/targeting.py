"""The targeting equation z' = c (bbar(t) - z)**3 phi(t) + E(t).

With ``phi >= 0``, ``|bbar - b| <= rho``, ``|E| <= delta`` and a gain
``c >= 1 / (2 gamma**2 int phi)``, the solution ends within
``rho + gamma + delta (t1 - t0)`` of ``b`` and never leaves the bracket
``[min(z0, b - rho), max(z0, b + rho)]`` widened by ``delta (t1 - t0)``.
:func:`integrate_targeting` certifies that analytic bound and, separately,
integrates the equation numerically (exact cubic flow on each substep plus an
Euler step for ``E``) so that the bound can be observed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .ball import Ball
from .dyadic import ONE, ZERO, Dyadic, dy
from .elementary import cos_ball, div_ball, pi_ball
from .errors import CertificationError, DomainError, ResourceLimitError

MAX_STEPS = 1 << 20
BITS = 64


def _relu_sin_antiderivative(t: Dyadic, bits: int) -> Ball:
    """int_0^t relu(sin 2 pi s) ds."""
    n = t.floor()
    s = t - n
    pi = pi_ball(bits + 4)
    per = div_ball(Ball(1), pi, bits + 4)  # one full period contributes 1/pi
    if s <= Dyadic(1, -1):
        part = div_ball(1 - cos_ball(pi * s.scale2k(1), bits + 4), pi.scale2k(1), bits + 4)
    else:
        part = per
    return per * n + part


def _relu_sin_antiderivative_f(t: float) -> float:
    n = math.floor(t)
    s = t - n
    part = (1 - math.cos(2 * math.pi * s)) / (2 * math.pi) if s <= 0.5 else 1 / math.pi
    return n / math.pi + part


@dataclass(frozen=True)
class SinGate:
    """relu(sign * sin 2 pi t), optionally smoothed as relutanh(2**sharp, .).

    The smoothed gate is within ``2**-(sharp+4)`` of the exact one and dips
    below zero by at most that much where the sine is negative.
    """

    sign: int = 1
    sharp: int | None = None

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise DomainError("gate sign must be +1 or -1")

    @property
    def slack(self) -> Dyadic:
        return ZERO if self.sharp is None else Dyadic(1, -(self.sharp + 4))

    def _shift(self, t: Dyadic) -> Dyadic:
        return t if self.sign > 0 else t - Dyadic(1, -1)

    def integral(self, a, b, bits: int = BITS) -> Ball:
        """Enclosure of int_a^b phi."""
        a, b = dy(a), dy(b)
        if b < a:
            raise DomainError("integral needs a <= b")
        exact = _relu_sin_antiderivative(self._shift(b), bits) - _relu_sin_antiderivative(self._shift(a), bits)
        return exact.widen((b - a) * self.slack)

    def integral_f(self, a: float, b: float) -> float:
        off = 0.0 if self.sign > 0 else 0.5
        return _relu_sin_antiderivative_f(b - off) - _relu_sin_antiderivative_f(a - off)

    def value(self, t: float) -> float:
        x = self.sign * math.sin(2 * math.pi * t)
        if self.sharp is None:
            return max(0.0, x)
        return x * (1 + math.tanh(4 * x * 2.0**self.sharp)) / 2


def choose_gain(gamma, phi_integral) -> Dyadic:
    """Smallest power of two c with c >= 1 / (2 gamma**2 int phi)."""
    gamma = dy(gamma) if not isinstance(gamma, Ball) else gamma.c
    phi = Ball.coerce(phi_integral)
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    low = phi.lower
    if low <= 0:
        raise DomainError("the gate integral must be bounded away from zero")
    need = 1 / (2 * gamma.to_fraction() ** 2 * low.to_fraction())
    k = math.ceil(math.log2(need))
    while Fraction(2) ** k < need:
        k += 1
    while Fraction(2) ** (k - 1) >= need:
        k -= 1
    return Dyadic(1, k)


@dataclass
class TargetingProblem:
    """z' = c (bbar(t) - z)**3 phi(t) + E(t) on [t0, t1].

    ``b`` is the target (a ball; its radius adds to ``rho``).  ``bbar`` and
    ``E`` are float callables used only by the numeric integrator; they are
    expected to respect ``|bbar - b| <= rho`` and ``|E| <= delta``.
    """

    b: Ball
    rho: Dyadic
    delta: Dyadic
    c: Dyadic
    t0: Dyadic
    t1: Dyadic
    z0: Ball
    phi: SinGate = field(default_factory=SinGate)
    bbar: Callable[[float], float] | None = None
    E: Callable[[float], float] | None = None

    def __post_init__(self):
        self.b = Ball.coerce(self.b)
        self.z0 = Ball.coerce(self.z0)
        self.rho, self.delta, self.c = dy(self.rho), dy(self.delta), dy(self.c)
        self.t0, self.t1 = dy(self.t0), dy(self.t1)
        if self.t1 <= self.t0:
            raise DomainError("need t0 < t1")
        if self.rho < 0 or self.delta < 0 or self.c <= 0:
            raise DomainError("rho, delta must be >= 0 and c > 0")


@dataclass
class TargetingRecord:
    c: Dyadic
    gamma: Dyadic
    phi_integral: Ball
    delta_eff: Dyadic
    bound: Dyadic
    bracket: tuple[Dyadic, Dyadic]
    numeric_end: float
    samples: list = field(default_factory=list)
    bracket_ok: bool = True
    end_ok: bool = True


def _flow(z: float, b: float, c: float, Phi: float) -> float:
    # exact solution of z' = c (b - z)**3 phi over a step with int phi = Phi
    d = b - z
    den = 1 + 2 * c * Phi * d * d
    if den <= 0:
        return z - c * d**3 * Phi
    return b - d / math.sqrt(den)


def integrate_targeting(p: TargetingProblem, gamma, steps: int = 256) -> tuple[Ball, TargetingRecord]:
    """Certified enclosure of z(t1) plus a numeric run that should respect it."""
    gamma = dy(gamma)
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    if not 1 <= steps <= MAX_STEPS:
        raise ResourceLimitError(f"step count {steps} outside 1..{MAX_STEPS}")
    T = p.t1 - p.t0
    rho = p.rho + p.b.r
    Phi = p.phi.integral(p.t0, p.t1)
    low = Phi.lower
    if low <= 0 or p.c * gamma * gamma * low.scale2k(1) < ONE:
        raise CertificationError(
            f"gain c = {float(p.c):.4g} below 1/(2 gamma^2 int phi) for gamma = {float(gamma):.4g}"
        )
    # the negative part of a smoothed gate is folded into the perturbation
    delta = p.delta
    if p.phi.slack.m:
        D = abs(p.z0.c - p.b.c) + p.z0.r + rho.scale2k(1) + (delta + 1) * T
        leak = p.c * D * D * D * p.phi.slack
        if leak > 1:
            raise CertificationError("gate too soft for this gain: increase its sharpness")
        delta = delta + leak
    drift = delta * T
    bound = rho + gamma + drift
    lo = min(p.z0.lower, p.b.c - rho) - drift
    hi = max(p.z0.upper, p.b.c + rho) + drift
    z1 = Ball(p.b.c, bound)

    # numeric run on centers
    bc = float(p.b.c)
    bbar = p.bbar or (lambda t: bc)
    E = p.E or (lambda t: 0.0)
    c = float(p.c)
    t0, t1 = float(p.t0), float(p.t1)
    h = (t1 - t0) / steps
    z = float(p.z0.c)
    lo_f, hi_f = float(lo), float(hi)
    tol = 1e-9 * max(1.0, abs(lo_f), abs(hi_f))
    samples = [(t0, z)]
    ok = True
    for i in range(steps):
        a = t0 + i * h
        mid = a + h / 2
        z = _flow(z, bbar(mid), c, p.phi.integral_f(a, a + h))
        z += E(mid) * h
        samples.append((a + h, z))
        ok = ok and lo_f - tol <= z <= hi_f + tol
    end_ok = abs(z - bc) <= float(bound) + tol
    rec = TargetingRecord(p.c, gamma, Phi, delta, bound, (lo, hi), z, samples, ok, end_ok)
    return z1, rec
