"""Lattice primitives shared by every configuration oracle.

Vertices are plain ``(x, y)`` integer tuples so the walker's hot loop can use
them directly as dict keys. Coordinates are held to a signed 128-bit range;
Python ints never overflow, so the range is enforced by explicit checks at
oracle entry points and at configuration build time.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Tuple

Vertex = Tuple[int, int]
Edge = Tuple[Vertex, Vertex]

# Signed 128-bit coordinate range.
COORD_MAX = 2**127 - 1
COORD_MIN = -(2**127)


class CoordinateRangeError(OverflowError):
    """A coordinate left the supported signed 128-bit range."""


class TruncationError(RuntimeError):
    """The query cannot be answered without structures above ``max_order``."""


def check_vertex(v: Vertex) -> Vertex:
    x, y = v
    if not (COORD_MIN <= x <= COORD_MAX and COORD_MIN <= y <= COORD_MAX):
        raise CoordinateRangeError(f"vertex {v!r} outside 128-bit range")
    return v


def canonical_edge(a: Vertex, b: Vertex) -> Edge:
    """Return the undirected edge with the lexicographically smaller endpoint first."""
    if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
        raise ValueError(f"{a!r}-{b!r} is not a unit lattice edge")
    return (a, b) if a <= b else (b, a)


def edge_x(e: Edge) -> int:
    """The larger x-coordinate of the two endpoints (resistance exponent)."""
    return max(e[0][0], e[1][0])


class LineConfig:
    """The naked half-line: open edges (k,0)-(k+1,0) for k >= 0, no traps."""

    def neighbors(self, v: Vertex) -> tuple[Vertex, ...]:
        x, y = check_vertex(v)
        if y != 0 or x < 0:
            return ()
        if x == 0:
            return ((1, 0),)
        return ((x - 1, 0), (x + 1, 0))

    def vertex_meta(self, v: Vertex):
        """Trap bookkeeping hook: the naked line has none."""
        return None


def enumerate_window_edges(oracle, window: tuple[int, int, int, int]) -> list[Edge]:
    """All open edges with both endpoints inside ``(x0, x1, y0, y1)``, canonical, sorted.

    Brute-force rectangle scan; intended for small windows and fault-injection
    tests. Large fractal windows use the structural enumeration in audit.py.
    """
    x0, x1, y0, y1 = window
    edges = set()
    for x in range(x0, x1 + 1):
        for y in range(y0, y1 + 1):
            v = (x, y)
            for u in oracle.neighbors(v):
                if x0 <= u[0] <= x1 and y0 <= u[1] <= y1:
                    edges.add(canonical_edge(v, u))
    return sorted(edges)


def iter_window_vertices(window: tuple[int, int, int, int]) -> Iterator[Vertex]:
    x0, x1, y0, y1 = window
    for x in range(x0, x1 + 1):
        for y in range(y0, y1 + 1):
            yield (x, y)
