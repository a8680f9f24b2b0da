"""Trap shapes: a dead-end appendage made of an entrance and a core.

A trap anchored at ``(d, y)`` occupies, reading along the path from the host
line: the vertical edge (d,y)-(d,y+1), the entrance run at height y+1 going
left to (d-e, y+1), the vertical connector (d-e,y+1)-(d-e,y+2), and the core
run at height y+2 going right to (d-e+c, y+2). ``entrance_len`` counts the
horizontal extent e, so the full edge path has e + c + 2 edges.
"""

from __future__ import annotations

from dataclasses import dataclass

from .base import Edge, Vertex, canonical_edge, check_vertex


@dataclass(frozen=True)
class TrapSpec:
    anchor: Vertex
    entrance_len: int  # horizontal extent e, edges
    core_len: int      # c, edges
    index: int         # trap number n (warm-up) or branch order k (fractal)

    def __post_init__(self) -> None:
        check_vertex(self.anchor)
        if self.entrance_len < 1 or self.core_len < 1:
            raise ValueError("entrance_len and core_len must be >= 1")

    @property
    def entrance_top(self) -> Vertex:
        """The vertex directly above the anchor; every visit starts here."""
        return (self.anchor[0], self.anchor[1] + 1)

    @property
    def core_left(self) -> Vertex:
        d, y = self.anchor
        return (d - self.entrance_len, y + 2)

    @property
    def core_right(self) -> Vertex:
        d, y = self.anchor
        return (d - self.entrance_len + self.core_len, y + 2)


def trap_edges(spec: TrapSpec) -> list[Edge]:
    """The trap's edge path in order from the anchor to the core's dead end."""
    d, y = spec.anchor
    e, c = spec.entrance_len, spec.core_len
    check_vertex((d - e, y + 2))
    check_vertex((d - e + c, y + 2))
    edges = [canonical_edge((d, y), (d, y + 1))]
    for i in range(e):
        edges.append(canonical_edge((d - i, y + 1), (d - i - 1, y + 1)))
    edges.append(canonical_edge((d - e, y + 1), (d - e, y + 2)))
    for j in range(c):
        edges.append(canonical_edge((d - e + j, y + 2), (d - e + j + 1, y + 2)))
    return edges


def trap_vertex_kind(spec: TrapSpec, v: Vertex) -> str | None:
    """Classify v as 'entrance' or 'core' (anchor excluded), else None."""
    d, y = spec.anchor
    x, vy = v
    if vy == y + 1 and d - spec.entrance_len <= x <= d:
        return "entrance"
    if vy == y + 2 and d - spec.entrance_len <= x <= d - spec.entrance_len + spec.core_len:
        return "core"
    return None


def trap_neighbors(spec: TrapSpec, v: Vertex) -> list[Vertex]:
    """Open edges incident to v contributed by this trap (anchor included)."""
    d, y = spec.anchor
    e, c = spec.entrance_len, spec.core_len
    x, vy = v
    out: list[Vertex] = []
    if v == spec.anchor:
        out.append((d, y + 1))
    elif vy == y + 1 and d - e <= x <= d:
        if x < d:
            out.append((x + 1, y + 1))
        else:
            out.append((d, y))           # down to the anchor
        if x > d - e:
            out.append((x - 1, y + 1))
        else:
            out.append((x, y + 2))       # connector up to the core
    elif vy == y + 2 and d - e <= x <= d - e + c:
        if x > d - e:
            out.append((x - 1, y + 2))
        else:
            out.append((x, y + 1))       # connector down to the entrance
        if x < d - e + c:
            out.append((x + 1, y + 2))
    return out
