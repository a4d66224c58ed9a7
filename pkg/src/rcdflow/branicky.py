"""Iterating a map with a two-phase continuous flow.

    y1' = c (G(r(y2)) - y1)**3 theta(sin 2 pi t)
    y2' = c (r(y1) - y2)**3 theta(-sin 2 pi t)

On ``[n, n + 1/2]`` the first line is active and pulls ``y1`` onto
``G(r(y2))`` while ``y2`` is held (its gate is at most ``2**-(p+4)`` below
zero); on ``[n + 1/2, n + 1]`` the roles swap and ``y2`` copies the rounded
``y1``.  Both components therefore sit near the ``n``-th iterate at integer
times.  Each half-phase is certified with the targeting bound, so every
reported ball is a rigorous enclosure of the flow, given the contracts of
``G`` and ``r``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .ball import Ball
from .dyadic import ONE, ZERO, Dyadic, dy
from .errors import CertificationError, DomainError
from .gadgets import _ceil_log2
from .targeting import SinGate, TargetingProblem, choose_gain, integrate_targeting
from .xi import sigma2

HALF = Dyadic(1, -1)
# lower bound on int relu(sin 2 pi t) over a half period (1/pi minus gate slack)
PHI_LOW = Ball(Dyadic(5, -4))

MapFn = Callable[[list[Ball], int, list[Ball]], list[Ball]]
RoundFn = Callable[[list[Ball]], list[Ball]]


@dataclass
class TwoPhaseSystem:
    """A map ``G(v, n, x)`` and a rounding ``r(v)`` on vectors of balls.

    ``bound`` must dominate every component of ``y``, ``G`` and ``r`` along
    the run; it sizes the gate sharpness so the held component drifts by at
    most ``eps'`` per unit time.
    """

    G: MapFn
    rounding: RoundFn
    bound: Dyadic
    name: str = "system"


def lattice_rounding(spacings: Sequence, m: int, bound) -> RoundFn:
    """Componentwise snap onto ``spacing * Z`` with accuracy ``2**-m``.

    ``r(y) = delta sigma2(y / delta + 1/4)`` for power-of-two spacings
    ``delta <= 1``; exact on ``[k - 1/4, k + 1/2] delta``.
    """
    spacings = [dy(d) for d in spacings]
    for d in spacings:
        if d <= 0 or d.m != 1 or d > 1:
            raise DomainError("lattice spacings must be powers of two at most 1")
    bound = dy(bound)
    ranges = [max(1, _ceil_log2(bound.scale2k(-d.e) + 2)) for d in spacings]
    quarter = Dyadic(1, -2)

    def r(v: list[Ball]) -> list[Ball]:
        out = []
        for y, d, n in zip(v, spacings, ranges):
            k = sigma2(m, n, Ball.coerce(y).scale2k(-d.e) + quarter)
            out.append(k.scale2k(d.e))
        return out

    return r


@dataclass
class Phase:
    """One half-phase: which component moved, its target and certified end."""

    n: int
    active: int  # 1 or 2
    t0: Dyadic
    target: list[Ball]
    start_active: list[Ball]
    end_active: list[Ball]
    held: list[Ball]  # enclosure of the held component at t0
    leak: Dyadic  # |derivative| bound of the held component
    records: list = field(default_factory=list)

    @property
    def t1(self) -> Dyadic:
        return self.t0 + HALF

    def held_at(self, t: Dyadic) -> list[Ball]:
        w = self.leak * (t - self.t0)
        return [b.widen(w) for b in self.held]


@dataclass
class SimTrajectory:
    eps: Dyadic
    eps_prime: Dyadic
    c: Dyadic
    sharp: int
    y0: list[Ball]
    phases: list[Phase] = field(default_factory=list)

    def _phase(self, t: Dyadic) -> Phase:
        if t < 0:
            raise DomainError("time must be nonnegative")
        i = (t.scale2k(1)).floor()
        if i >= len(self.phases):
            raise DomainError(f"time {t.to_decimal(6)} beyond the simulated horizon")
        return self.phases[i]

    def y1_at(self, n: int) -> list[Ball]:
        """Enclosure of y1 at the integer time n (the n-th iterate)."""
        if n == 0:
            return list(self.y0)
        ph = self._phase(Dyadic(n) - Dyadic(1, -2))  # y1 is held on [n - 1/2, n]
        return ph.held_at(Dyadic(n))

    def state_at(self, t) -> list[Ball]:
        """The held component at time t: y2 on [n, n + 1/2), y1 on [n + 1/2, n + 1)."""
        t = dy(t)
        return self._phase(t).held_at(t)

    @property
    def samples(self) -> list[tuple[Dyadic, list[Ball], list[Ball]]]:
        """Certified (t, y1, y2) at every half-integer time."""
        out = [(ZERO, list(self.y0), list(self.y0))]
        for ph in self.phases:
            held = ph.held_at(ph.t1)
            pair = (ph.end_active, held) if ph.active == 1 else (held, ph.end_active)
            out.append((ph.t1, *pair))
        return out

    def horizon(self) -> Dyadic:
        return Dyadic(len(self.phases)).half()

    def rows(self):
        """(t, y1, y2, radius) per sample: numeric values, held-ball radius."""
        for k, ph in enumerate(self.phases):
            recs = ph.records
            steps = len(recs[0].samples) if recs else 0
            # a phase starts where the previous one ended
            for j in range(1 if k else 0, steps):
                t = recs[0].samples[j][0]
                act = [r.samples[j][1] for r in recs]
                held = [float(b.c) for b in ph.held]
                rad = max(float(b.r) for b in ph.held) + float(ph.leak) * (t - float(ph.t0))
                y1, y2 = (act, held) if ph.active == 1 else (held, act)
                yield t, y1, y2, rad

    def to_csv(self, fh=None) -> str:
        buf = fh if fh is not None else io.StringIO()
        d = len(self.y0)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"y1_{i}" for i in range(d)] + [f"y2_{i}" for i in range(d)] + ["radius"])
        for t, y1, y2, rad in self.rows():
            w.writerow([repr(t)] + [repr(v) for v in y1] + [repr(v) for v in y2] + [repr(rad)])
        return buf.getvalue() if fh is None else ""


def plan(eps, bound) -> tuple[Dyadic, Dyadic, int]:
    """eps', gain c and gate sharpness p for a target accuracy eps."""
    eps = dy(eps)
    if eps <= 0 or eps > 1:
        raise DomainError("eps must lie in (0, 1]")
    eps_p = eps.scale2k(-3)
    c = choose_gain(eps_p, PHI_LOW)
    D = dy(bound).scale2k(1) + 1
    p = max(4, _ceil_log2(c * D * D * D) - eps_p.magnitude() - 4)
    return eps_p, c, p


def _check_bound(vs, bound: Dyadic, what: str) -> None:
    for v in vs:
        if v.mag() > bound:
            raise CertificationError(f"{what} leaves the state bound {float(bound):g}")


def _half_phase(n, active, t0, start, target, held, c, gamma, p, leak, substeps) -> Phase:
    sign = 1 if active == 1 else -1
    gate = SinGate(sign, p)
    ends, recs = [], []
    for z0, b in zip(start, target):
        prob = TargetingProblem(b=b, rho=0, delta=0, c=c, t0=t0, t1=t0 + HALF, z0=z0, phi=gate)
        z1, rec = integrate_targeting(prob, gamma, substeps)
        ends.append(z1)
        recs.append(rec)
    return Phase(n, active, t0, target, list(start), ends, list(held), leak, recs)


class TwoPhaseRunner:
    """Advances the two-phase flow one half-phase at a time."""

    def __init__(self, sys: TwoPhaseSystem, eps, x=None, substeps: int = 8):
        self.sys = sys
        self.bound = dy(sys.bound)
        self.eps = dy(eps)
        self.eps_p, self.c, self.p = plan(self.eps, self.bound)
        D = self.bound.scale2k(1) + 1
        # derivative bound of the held component (its gate is >= -2**-(p+4))
        self.leak = self.c * D * D * D * Dyadic(1, -(self.p + 4))
        self.x = [Ball.coerce(v) for v in (x or [])]
        self.substeps = substeps

    def advance(self, k: int, y1: list[Ball], y2: list[Ball]) -> tuple[list[Ball], list[Ball], Phase]:
        """Flow over [k/2, k/2 + 1/2]; y1 moves for even k, y2 for odd k."""
        n, odd = divmod(k, 2)
        t0 = Dyadic(k).half()
        half_leak = self.leak.half()
        if not odd:
            y2w = [b.widen(half_leak) for b in y2]
            target = self.sys.G(self.sys.rounding(y2w), n, self.x)
            if len(target) != len(y1):
                raise DomainError("G changed the dimension of the state")
            _check_bound(target, self.bound, "G")
            ph = _half_phase(n, 1, t0, y1, target, y2, self.c, self.eps_p, self.p, self.leak, self.substeps)
            _check_bound(ph.end_active, self.bound, "y1")
            return ph.end_active, y2w, ph
        y1w = [b.widen(half_leak) for b in y1]
        target = self.sys.rounding(y1w)
        _check_bound(target, self.bound, "r")
        ph = _half_phase(n, 2, t0, y2, target, y1, self.c, self.eps_p, self.p, self.leak, self.substeps)
        _check_bound(ph.end_active, self.bound, "y2")
        return y1w, ph.end_active, ph


def branicky_run(sys: TwoPhaseSystem, g0, x, N: int, eps, substeps: int = 8) -> SimTrajectory:
    """Simulate N iterations; y1 at integer n lies within eps of the n-th iterate.

    The guarantee assumes ``G`` is within ``eps/8`` of the exact map on inputs
    within ``eps`` of the lattice and ``r`` snaps such inputs to within
    ``eps/8`` of the lattice point.
    """
    if N < 0:
        raise DomainError("iteration count must be nonnegative")
    run = TwoPhaseRunner(sys, eps, x, substeps)
    y1 = [Ball.coerce(v) for v in g0]
    y2 = list(y1)
    traj = SimTrajectory(run.eps, run.eps_p, run.c, run.p, list(y1))
    for k in range(2 * N):
        y1, y2, ph = run.advance(k, y1, y2)
        traj.phases.append(ph)
    return traj


# machines as flows ------------------------------------------------------------


def machine_system(tm, S: int, m: int):
    """The two-phase system iterating next_real at accuracy 2**-m."""
    from .tm import EncodedConfig
    from .tm_real import next_real

    lattice = Dyadic(1, -2 * S)
    bound = Dyadic(max(2, tm.num_states + 1))
    rnd = lattice_rounding([ONE, lattice, lattice], m + 1, bound)

    def G(v, n, x):
        return next_real(tm, (m, 0), S, EncodedConfig(*v)).as_list()

    return TwoPhaseSystem(G, rnd, bound, name="machine")


def exec_flow_run(tm, word: str, t, m: int, S: int, substeps: int = 4) -> SimTrajectory:
    """Run the machine flow long enough to read its state at time t."""
    from .tm import encode_config, initial_config

    t = dy(t)
    if t < 0:
        raise DomainError("time must be nonnegative")
    prec = max(m, 2 * S + 4) + 2
    eps = Dyadic(1, -prec)
    sys = machine_system(tm, S, prec + 3)
    y0 = encode_config(initial_config(tm, word)).as_list()
    return branicky_run(sys, y0, [], t.floor() + 1, eps, substeps)


def exec_flow(tm, word: str, t, m: int, S: int):
    """Encoded configuration read off the flow at time t (within 2**-m of the
    configuration after round(t) steps when t is within 1/4 of an integer)."""
    from .tm import EncodedConfig

    traj = exec_flow_run(tm, word, t, m, S)
    return EncodedConfig(*traj.state_at(t))
