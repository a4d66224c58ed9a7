"""Reference solutions used by the tests, independent of the package internals."""

from __future__ import annotations

import math
from collections import deque

import mpmath
from scipy.integrate import solve_ivp


def targeting_reference(b, z0, c, rho=0.0, delta=0.0, t0=0.0, t1=0.5, sign=1, sharp=None, omega=1.0):
    """Stiff reference for z' = c (bbar - z)^3 phi + E with bbar = b + rho sin(omega t), E = delta cos t."""

    def phi(t):
        x = sign * math.sin(2 * math.pi * t)
        if sharp is None:
            return max(0.0, x)
        return x * (1 + math.tanh(4 * x * 2.0**sharp)) / 2

    def f(t, z):
        return [c * (b + rho * math.sin(omega * t) - z[0]) ** 3 * phi(t) + delta * math.cos(t)]

    def jac(t, z):
        return [[-3 * c * (b + rho * math.sin(omega * t) - z[0]) ** 2 * phi(t)]]

    sol = solve_ivp(f, (t0, t1), [z0], method="Radau", jac=jac, rtol=1e-11, atol=1e-13, dense_output=True)
    assert sol.success, sol.message
    return sol


def gate_integral(a, b, sign=1):
    """int_a^b relu(sign sin 2 pi t) dt by mpmath quadrature, split at the sine zeros."""
    f = lambda t: max(mpmath.mpf(0), sign * mpmath.sin(2 * mpmath.pi * t))
    pts = [mpmath.mpf(a)]
    k = math.floor(2 * a) + 1
    while mpmath.mpf(k) / 2 < b:
        pts.append(mpmath.mpf(k) / 2)
        k += 1
    pts.append(mpmath.mpf(b))
    return mpmath.quad(f, pts)


def bfs_within(succ, u, v, t) -> bool:
    """Breadth-first search: is v reachable from u in at most t steps?"""
    seen = {u: 0}
    q = deque([u])
    while q:
        a = q.popleft()
        if a == v:
            return True
        if seen[a] == t:
            continue
        b = succ[a]
        if b not in seen:
            seen[b] = seen[a] + 1
            q.append(b)
    return False


def step_n(succ, u, T) -> int:
    for _ in range(T):
        u = succ[u]
    return u


def noisy_euler(lam, N, seed, theta0, noise_bits=20):
    """Euler for y' = lam y on [0, 1] with injected noise, in exact rationals.

    Returns (final error, per-step local error bounds, step times) where each
    local bound is the truncation term plus the injected noise."""
    from fractions import Fraction
    import random

    mpmath.mp.prec = 400

    def exact(t):
        v = mpmath.exp(mpmath.mpf(lam.numerator) / lam.denominator * mpmath.mpf(t.numerator) / t.denominator)
        s, man, exp_, _ = v._mpf_
        return Fraction(man * 2**exp_ if exp_ >= 0 else Fraction(man, 2**-exp_)) * (-1 if s else 1)

    rng = random.Random(seed)
    h = Fraction(1, N)
    y = 1 + theta0
    errs, times = [], [Fraction(0)]
    for i in range(N):
        noise = Fraction(rng.randint(-(2**10), 2**10), 2 ** (10 + noise_bits))
        local = abs(exact((i + 1) * h) - (1 + lam * h) * exact(i * h))
        errs.append(local + abs(noise))
        y = y + h * lam * y + noise
        times.append((i + 1) * h)
    return abs(y - exact(Fraction(1))), errs, times
