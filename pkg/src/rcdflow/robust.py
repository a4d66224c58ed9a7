"""Flows of numerically stable IVPs in space polynomial in the precision.

An IVP ``f' = u(f, h(t, x), t, x)``, ``f(0) = g(x)`` is *stable on windows
of length delta* when solving one window at ``eps(n) = p(n + len(x))`` bits
is enough for ``2**-n`` accuracy overall.  :func:`bisect_flow` then computes
``Phi(g(x), t)`` by halving the horizon recursively and handing the rounded
midpoint state from the left half to the right half, so only a bounded
number of state vectors is alive at any time.  Each window is solved by
explicit Euler on exact dyadic centers; the distance to the true flow is
bounded by the discrete Gronwall recurrence

    theta_{k+1} <= (1 + Lambda h) theta_k + M2 h**2 / 2 + rounding,

where ``Lambda`` is a growth rate of the Euler map (negative for contracting
systems) and ``M2`` bounds ``|f''|`` along the window.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .ball import Ball, refine
from .dyadic import ONE, ZERO, Dyadic, dy
from .elementary import exp_point
from .errors import CertificationError, ContractError, DomainError, ResourceLimitError, StabilityViolation

MAX_STEPS = 1 << 22
THETA_BITS = 64

Vec = list  # list[Ball]


class MemoryTracker:
    """Counts simultaneously live state vectors and recursion depth."""

    def __init__(self):
        self.live = 0
        self.peak = 0
        self.depth = 0
        self.max_depth = 0
        self.windows = 0
        self.hook: Callable[[int], None] | None = None

    def alloc(self, k: int = 1) -> None:
        self.live += k
        if self.live > self.peak:
            self.peak = self.live
        if self.hook:
            self.hook(self.live)

    def free(self, k: int = 1) -> None:
        self.live -= k
        if self.live < 0:
            raise RuntimeError("memory tracker underflow")

    def enter(self) -> None:
        self.depth += 1
        self.max_depth = max(self.max_depth, self.depth)

    def leave(self) -> None:
        self.depth -= 1


@dataclass
class RobustIVP:
    """``f' = u(f, h(t, x), t, x)``, ``f(0) = g(x)``, stable on windows of length ``delta``.

    ``lipschitz`` and ``accel(y0, span)`` feed the Gronwall certificate.
    When the bounds only hold on a region, ``region(y0)`` gives its radius
    (checked along the run) and ``max_step(y0)`` the largest admissible Euler
    step.  ``window_solver(y, t0, span, x, bits)`` replaces Euler entirely.
    """

    dim: int
    u: Callable | None
    g: Callable
    delta: Dyadic
    stability_poly: Sequence[int]
    h: Callable | None = None
    lipschitz: Dyadic | None = None
    accel: Callable | None = None
    window_solver: Callable | None = None
    region: Callable | None = None
    max_step: Callable | None = None
    name: str = "ivp"

    def __post_init__(self):
        self.delta = dy(self.delta)
        if self.delta <= 0:
            raise DomainError("window length delta must be positive")
        if any(c < 0 for c in self.stability_poly) or not self.stability_poly:
            raise DomainError("stability polynomial needs nonnegative coefficients")

    def eps_bits(self, n: int, x: Vec) -> int:
        k = n + input_length(x)
        return sum(c * k**i for i, c in enumerate(self.stability_poly))


def input_length(x: Vec) -> int:
    """Bits of the integer parts plus bits of the given fractional precision."""
    ip = max((abs(b.c).floor().bit_length() for b in x), default=0)
    fp = max((max(0, -b.c.e) for b in x), default=0)
    return ip + fp.bit_length()


@dataclass
class FlowQuery:
    x: Vec
    t: Dyadic
    n: int

    def __post_init__(self):
        self.x = [Ball.coerce(v) for v in self.x]
        self.t = dy(self.t)
        if self.t < 0:
            raise DomainError("time must be nonnegative")
        if self.n < 0:
            raise DomainError("precision must be nonnegative")


# gronwall -----------------------------------------------------------------------


def _exp_upper(x: Dyadic) -> Dyadic:
    if not x.m:
        return ONE
    return exp_point(x, THETA_BITS).upper.round_sig(THETA_BITS, "ceil")


def _up(d: Dyadic) -> Dyadic:
    return d.round_sig(THETA_BITS, "ceil")


def gronwall_bound(Lambda, theta0, eps_seq_max, times) -> Dyadic:
    """Upper bound on theta_N from the discrete Gronwall inequality.

    ``theta_N <= exp(L (t_N - t_0)) theta_0 + sum_i exp(L (t_N - t_{i+1})) eps_i``,
    evaluated by the equivalent forward recurrence with outward rounding.
    ``eps_seq_max`` is one bound for every step or a list of per-step bounds.
    """
    L = dy(Lambda)
    if L < 0:
        raise DomainError("Lambda must be nonnegative")
    ts = [dy(t) for t in times]
    if not ts:
        raise DomainError("times must not be empty")
    for a, b in zip(ts, ts[1:]):
        if b < a:
            raise DomainError("times must be nondecreasing")
    steps = len(ts) - 1
    if isinstance(eps_seq_max, (list, tuple)):
        eps = [abs(dy(e)) for e in eps_seq_max]
        if len(eps) != steps:
            raise DomainError(f"need {steps} step errors, got {len(eps)}")
    else:
        eps = [abs(dy(eps_seq_max))] * steps
    cache: dict = {}
    theta = abs(dy(theta0))
    for i in range(steps):
        w = ts[i + 1] - ts[i]
        f = cache.get(w)
        if f is None:
            f = cache[w] = _exp_upper(L * w)
        theta = _up(f * theta + eps[i])
    return theta


# base windows -------------------------------------------------------------------


def _pow2_at_least(q: float) -> int:
    return 1 << max(0, math.ceil(math.log2(max(q, 1.0))))


def _dmax(vals) -> Dyadic:
    return max(vals, default=ZERO)


def base_solve(ivp: RobustIVP, y0: Vec, x, span, eps, t0=ZERO, tracker: MemoryTracker | None = None) -> Vec:
    """Enclosure of the flow after ``span`` (0 <= span <= delta) from the ball vector y0."""
    span, eps, t0 = dy(span), dy(eps), dy(t0)
    x = [Ball.coerce(v) for v in (x or [])]
    y0 = [Ball.coerce(v) for v in y0]
    if span < 0 or span > ivp.delta:
        raise DomainError("span must lie in [0, delta]")
    if eps <= 0:
        raise DomainError("eps must be positive")
    if not span.m:
        return list(y0)
    if ivp.window_solver is not None:
        return ivp.window_solver(y0, t0, span, x, max(0, -eps.magnitude()))
    if ivp.lipschitz is None or ivp.accel is None:
        raise ContractError(f"{ivp.name}: Lipschitz and second-derivative bounds are required for certification")
    L = dy(ivp.lipschitz)
    M2 = dy(ivp.accel(y0, span))
    G = _exp_upper(max(L, ZERO) * span)
    # truncation total <= G M2 span**2 / (2 N) <= eps / 4
    need = float(G * M2 * span * span) * 2 / float(eps)
    need = max(need, float(abs(L) * span), float(span))
    if ivp.max_step is not None:
        need = max(need, float(span) / float(ivp.max_step(y0)))
    N = _pow2_at_least(need)
    if N > MAX_STEPS:
        raise ResourceLimitError(f"{ivp.name}: step budget exhausted ({N} > {MAX_STEPS} Euler steps)")
    h = span.scale2k(-(N.bit_length() - 1))
    W = max(0, -eps.magnitude()) + N.bit_length() + 4
    rnd = Dyadic(1, -(W + 1))
    grow = ONE + L * h  # >= 0 because |L| h <= 1
    trunc = _up(M2 * h * h).half()
    theta = _dmax(b.r for b in y0)
    y = [b.c for b in y0]
    t = t0
    R = dy(ivp.region(y0)) if ivp.region is not None else None
    reach = ZERO
    for _ in range(N):
        hv = ivp.h(t, x) if ivp.h else None
        du = ivp.u([Ball(c) for c in y], hv, t, x)
        if tracker:
            tracker.alloc()
        y = [(c + h * d.c).round_to(W) for c, d in zip(y, du)]
        if tracker:
            tracker.free()
        local = trunc + h * _dmax(d.r for d in du) + rnd
        theta = _up(grow * theta + local)
        t = t + h
        if R is not None:
            reach = max(reach, max(abs(c) for c in y) + theta)
    if R is not None and reach > R:
        raise CertificationError(f"{ivp.name}: trajectory left the region |y| <= {float(R):g} its bounds assume")
    return [Ball(c, theta) for c in y]


# bisection ----------------------------------------------------------------------


def _window_layout(ivp: RobustIVP, t: Dyadic) -> tuple[int, int]:
    """(number of real windows K, padded power of two P)."""
    q = t.to_fraction() / ivp.delta.to_fraction()
    K = max(1, math.ceil(q))
    P = 1 << (K - 1).bit_length()
    return K, P


def recursion_depth(ivp: RobustIVP, t) -> int:
    """ceil(log2(max(1, t / delta)))."""
    _, P = _window_layout(ivp, dy(t))
    return P.bit_length() - 1


def bisect_flow(
    ivp: RobustIVP,
    q: FlowQuery,
    tracker: MemoryTracker | None = None,
    spot_check: bool = True,
    seed: int = 0,
) -> Vec:
    """Phi(g(x), t) within 2**-n by recursive halving of the time horizon.

    Midpoint states are refined to eps(n) bits before being handed on.  One
    window, chosen by ``seed``, is re-solved two bits finer; a disagreement
    beyond 2**-eps(n), or a final radius above 2**-n, raises
    :class:`StabilityViolation`.
    """
    tracker = tracker or MemoryTracker()
    y = [Ball.coerce(v) for v in ivp.g(q.x)]
    tracker.alloc()
    if not q.t.m:
        return y
    bits = ivp.eps_bits(q.n, q.x)
    eps = Dyadic(1, -bits)
    K, P = _window_layout(ivp, q.t)
    check_at = random.Random(seed).randrange(K) if spot_check else -1

    def window(v: Vec, j: int) -> Vec:
        t0 = ivp.delta * j
        span = min(ivp.delta, q.t - t0) if t0 < q.t else ZERO
        tracker.windows += 1
        out = base_solve(ivp, v, q.x, span, eps, t0, tracker)
        if j == check_at:
            tracker.alloc()  # the retained copy of the window input
            fine = base_solve(ivp, v, q.x, span, eps.scale2k(-2), t0)
            tracker.free()
            gap = max(abs(a.c - b.c) for a, b in zip(out, fine))
            if gap > eps:
                raise StabilityViolation(
                    f"window {j}: re-solve at {bits + 2} bits moved the state by {float(gap):.3g} > 2^-{bits}"
                )
        return out

    def solve(v: Vec, lo: int, count: int) -> Vec:
        # v is owned by this call and released once its successor exists
        if count == 1:
            return window(v, lo)
        tracker.enter()
        try:
            half = count // 2
            mid = [refine(b, bits) for b in solve(v, lo, half)]
            return solve(mid, lo + half, half)
        finally:
            tracker.leave()

    out = solve(y, 0, P)
    worst = max(b.r for b in out)
    if worst > Dyadic(1, -q.n):
        raise StabilityViolation(
            f"{ivp.name}: certified radius {float(worst):.3g} exceeds 2^-{q.n}; the stability polynomial is too small"
        )
    return out


def euler_direct(
    ivp: RobustIVP, q: FlowQuery, tracker: MemoryTracker | None = None, retain: bool = True
) -> tuple[Vec, list]:
    """The same windows solved left to right, keeping every window boundary state."""
    tracker = tracker or MemoryTracker()
    y = [Ball.coerce(v) for v in ivp.g(q.x)]
    tracker.alloc()
    samples = [(ZERO, y)] if retain else []
    if not q.t.m:
        return y, samples
    bits = ivp.eps_bits(q.n, q.x)
    eps = Dyadic(1, -bits)
    K, _ = _window_layout(ivp, q.t)
    for j in range(K):
        t0 = ivp.delta * j
        span = min(ivp.delta, q.t - t0)
        tracker.windows += 1
        y = [refine(b, bits) for b in base_solve(ivp, y, q.x, span, eps, t0, tracker)]
        tracker.alloc()
        if retain:
            samples.append((t0 + span, y))
        else:
            tracker.free()
    return y, samples


# builtins -----------------------------------------------------------------------


def _log2_inv(delta: Dyadic) -> int:
    return max(0, -delta.magnitude())


def decay_ivp(delta="1/2", y0=1) -> RobustIVP:
    """f' = -f.  The Euler map contracts by 1 - h, and |f''| = |f| <= |f(0)|."""
    delta = dy(delta)
    if delta > 1:
        raise DomainError("decay needs delta <= 1")
    init = [Ball.coerce(y0)]

    def u(f, hv, t, x):
        return [-f[0]]

    def g(x):
        return [x[0]] if x else list(init)

    def accel(y, span):
        return y[0].mag()

    # per-window errors add up over about 1/delta windows before contracting
    return RobustIVP(1, u, g, delta, (2 + _log2_inv(delta), 1), lipschitz=-ONE, accel=accel, name="decay")


def vdp_ivp(mu="1", delta="1/4", y0=(2, 0)) -> RobustIVP:
    """van der Pol: y' = mu (y - y**3/3 - z), z' = y / mu."""
    mu = dy(mu)
    if mu <= 0:
        raise DomainError("mu must be positive")
    delta = dy(delta)
    init = [Ball.coerce(v) for v in y0]
    inv_mu = Dyadic.quotient(ONE, mu, 80)
    inv_mu_ball = Ball(inv_mu, Dyadic(1, -80))

    def u(f, hv, t, x):
        y, z = f
        return [(y - (y * y * y).third(80) - z) * mu, y * inv_mu_ball]

    def g(x):
        return [x[0], x[1]] if x else list(init)

    def region(y0v):
        return max(b.mag() for b in y0v) + Dyadic(1, -1)

    def accel(y0v, span):
        # f'' = J f' with |y'| <= s1, |z'| <= s2 on the region |y|, |z| <= R
        R = region(y0v)
        s1 = mu * (R.scale2k(1) + (R * R * R * Dyadic(11, -5)))  # 11/32 > 1/3
        s2 = R * inv_mu
        return max(mu * max(ONE, R * R - 1) * s1 + mu * s2, s1 * inv_mu)

    def max_step(y0v):
        # keeps 1 + h mu (1 - y**2) >= 0, so |I + hJ| <= 1 + h max(2 mu, 1/mu)
        R = region(y0v)
        return Dyadic.quotient(ONE, mu * R * R, 40, "floor")

    lip = max(mu.scale2k(1), inv_mu)
    return RobustIVP(
        2,
        u,
        g,
        delta,
        (4 + _log2_inv(delta), 1),
        lipschitz=lip,
        accel=accel,
        region=region,
        max_step=max_step,
        name="vdp",
    )


def tm_ivp(tm, word: str, m: int, S: int, substeps: int = 2) -> RobustIVP:
    """The machine flow as an IVP on (y1, y2); windows are the half-phases."""
    from .branicky import TwoPhaseRunner, machine_system
    from .tm import encode_config, initial_config

    prec = max(m, 2 * S + 4) + 2
    runner = TwoPhaseRunner(machine_system(tm, S, prec + 3), Dyadic(1, -prec), None, substeps)
    y0 = encode_config(initial_config(tm, word)).as_list()
    half = Dyadic(1, -1)

    def g(x):
        return y0 + y0

    def window_solver(y, t0, span, x, bits):
        if span != half or (t0.scale2k(1)).e < 0:
            raise DomainError("machine windows are whole half-phases")
        k = t0.scale2k(1).floor()
        y1, y2, _ = runner.advance(k, y[:3], y[3:])
        return y1 + y2

    return RobustIVP(6, None, g, half, (prec,), window_solver=window_solver, name="tm")


def tm_state(y: Vec) -> list:
    """y1 of a machine-flow state at a half-integer time t: the iterate ceil(t)."""
    return y[:3]


IVP_BUILTINS = {"decay": decay_ivp, "vdp": vdp_ivp}
