"""Reachability and iteration on functional graphs in logarithmic depth.

A functional graph on ``{0, 1}**s`` has out-degree one.  :func:`can_yield`
decides "v is reachable from u in at most t steps" by the halving recursion
``CY(u, v, t) = exists z: CY(u, z, t/2) and CY(z, v, t/2)``; with out-degree
one the only useful midpoints are ``v`` itself and the (t/2)-th successor of
``u``, so the deterministic mode tries exactly those.  ``exhaustive=True``
enumerates every vertex as the midpoint instead, which is the textbook
formulation and only practical for tiny graphs.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .errors import DomainError, SpecError


@dataclass
class GraphStats:
    depth: int = 0
    max_depth: int = 0
    live: int = 0
    peak_live: int = 0

    def enter(self) -> None:
        self.depth += 1
        self.max_depth = max(self.max_depth, self.depth)
        # each frame keeps O(1) vertices (u, v and a midpoint)
        self.live += 3
        self.peak_live = max(self.peak_live, self.live)

    def leave(self) -> None:
        self.depth -= 1
        self.live -= 3


class FiniteGraph:
    """Vertices 0 .. 2**s - 1, each with exactly one successor."""

    def __init__(self, vertex_bits: int, successor: Callable[[int], int] | Sequence[int]):
        if vertex_bits < 0:
            raise DomainError("vertex_bits must be nonnegative")
        self.vertex_bits = vertex_bits
        self.size = 1 << vertex_bits
        if callable(successor):
            self._succ = successor
            self._table = None
        else:
            table = list(successor)
            if len(table) != self.size:
                raise DomainError(f"successor table needs {self.size} entries, got {len(table)}")
            for v, w in enumerate(table):
                if not 0 <= w < self.size:
                    raise DomainError(f"successor of {v} is {w}, outside 0..{self.size - 1}")
            self._table = table
            self._succ = table.__getitem__

    def successor(self, v: int) -> int:
        self.check(v)
        return self._succ(v)

    def check(self, v: int) -> None:
        if not 0 <= v < self.size:
            raise DomainError(f"vertex {v} outside 0..{self.size - 1}")

    def to_json(self) -> dict:
        return {"vertex_bits": self.vertex_bits, "successor": [self._succ(v) for v in range(self.size)]}

    @classmethod
    def from_json(cls, obj) -> "FiniteGraph":
        try:
            return cls(int(obj["vertex_bits"]), [int(w) for w in obj["successor"]])
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"graph file: {exc}") from None
        except DomainError as exc:
            raise SpecError(f"graph file: {exc}") from None

    @classmethod
    def load(cls, path) -> "FiniteGraph":
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: invalid JSON ({exc.msg})") from None
        except OSError as exc:
            raise SpecError(f"{path}: {exc.strerror}") from None
        return cls.from_json(obj)


def _check_pow2(t: int) -> None:
    if t < 1 or t & (t - 1):
        raise DomainError("t must be a power of two (pad the horizon)")


def graph_flow(g: FiniteGraph, u: int, T: int, stats: GraphStats | None = None) -> int:
    """The T-th successor of u, as Phi(Phi(u, floor(T/2)), ceil(T/2))."""
    if T < 0:
        raise DomainError("T must be nonnegative")
    g.check(u)
    stats = stats or GraphStats()

    def go(v: int, k: int) -> int:
        if k == 0:
            return v
        if k == 1:
            return g.successor(v)
        stats.enter()
        try:
            return go(go(v, k // 2), k - k // 2)
        finally:
            stats.leave()

    return go(u, T)


def can_yield(
    g: FiniteGraph, u: int, v: int, t: int, stats: GraphStats | None = None, exhaustive: bool = False
) -> bool:
    """Is v reachable from u in at most t successor steps (t a power of two)?"""
    _check_pow2(t)
    g.check(u)
    g.check(v)
    stats = stats or GraphStats()

    def cy(a: int, b: int, k: int) -> bool:
        if k == 1:
            return a == b or g.successor(a) == b
        stats.enter()
        try:
            half = k // 2
            if exhaustive:
                return any(cy(a, z, half) and cy(z, b, half) for z in range(g.size))
            # z = b covers paths of length <= k/2; otherwise the path passes
            # through the (k/2)-th successor of a
            if cy(a, b, half):
                return True
            z = graph_flow(g, a, half)
            return cy(z, b, half)
        finally:
            stats.leave()

    return cy(u, v, t)


def bfs_reach(g: FiniteGraph, u: int, t: int) -> dict[int, int]:
    """Distance from u to every vertex reachable within t steps."""
    dist = {u: 0}
    q = deque([u])
    while q:
        a = q.popleft()
        if dist[a] == t:
            continue
        b = g.successor(a)
        if b not in dist:
            dist[b] = dist[a] + 1
            q.append(b)
    return dist
