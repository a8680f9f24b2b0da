"""Exact electrical-network computations for the conductance-weighted walk.

Every edge e carries resistance beta^(-x(e)) with x(e) the larger
x-coordinate of its endpoints. On a tree the effective resistance between
two vertices is the plain sum along the unique path, and escape
probabilities follow from

    p_esc(v) = ( R_eff(v, inf) * sum_{e ~ v} R(e)^(-1) )^(-1).

Raw beta^(-x) under/overflows float64 near |x| ~ 700, so internals shift the
exponent origin to the query vertex; everything returned either is a ratio
(scale-invariant) or is re-anchored only when representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry.base import Edge, Vertex, canonical_edge, edge_x
from .geometry.fractal import FractalConfig
from .geometry.shifts import ShiftedConfig


@dataclass(frozen=True)
class Bias:
    beta: float

    def __post_init__(self) -> None:
        if not self.beta > 1:
            raise ValueError("bias beta must exceed 1")


def _beta(bias) -> float:
    b = bias.beta if isinstance(bias, Bias) else float(bias)
    if not b > 1:
        raise ValueError("bias beta must exceed 1")
    return b


@dataclass(frozen=True)
class ResistorEdge:
    """An edge with its absolute resistance; underflows to 0.0 at large x(e)."""
    edge: Edge
    resistance: float

    @classmethod
    def of(cls, a: Vertex, b: Vertex, bias) -> "ResistorEdge":
        e = canonical_edge(a, b)
        return cls(edge=e, resistance=_beta(bias) ** (-edge_x(e)))


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError("interval bounds out of order")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


# -- closed forms -------------------------------------------------------------

def hit_core_probability(entrance_len: int, bias) -> float:
    """P(reach the core before exiting | just entered), (b-1)/(b^(e+1)+b-2)."""
    if entrance_len < 1:
        raise ValueError("entrance_len must be >= 1")
    b = _beta(bias)
    return (b - 1.0) / (b ** (entrance_len + 1) + b - 2.0)


def stay_in_core_lower_bound(entrance_len: int, bias) -> float:
    """One-sided bound on P(sojourn >= beta^c | entered); never exact."""
    if entrance_len < 1:
        raise ValueError("entrance_len must be >= 1")
    b = _beta(bias)
    return (b - 1.0) ** 2 / (2.0 * b * (b ** (entrance_len + 1) + b - 2.0))


def expected_infinite_entrance_excursion(bias) -> float:
    """Mean duration of one visit to a coreless trap with infinite entrance."""
    b = _beta(bias)
    return (2.0 * b - 1.0) / (b - 1.0)


def cone_return_time_bound(bias, rel_tol: float = 1e-12) -> float:
    """(3+b)/2 * sum (2i+1) b^-i, checked series-vs-closed-form."""
    b = _beta(bias)
    x = 1.0 / b
    closed = (3.0 + b) / 2.0 * (1.0 + x) / (1.0 - x) ** 2
    total, i = 0.0, 0
    while True:
        term = (2 * i + 1) * x**i
        total += term
        if term < rel_tol * total and i > 2:
            break
        i += 1
    series = (3.0 + b) / 2.0 * total
    if abs(series - closed) > 10 * rel_tol * closed:
        raise ArithmeticError(f"series {series} and closed form {closed} disagree")
    return closed


# -- escape paths and resistances ---------------------------------------------

def iter_escape_path(v: Vertex, cfg) -> Iterator[Edge]:
    """Edges of the unique rightward path from v to infinity, in order.

    Defined for vertices on a main line (warm-up / naked line: y = 0) or on a
    fractal main part or abutment. x(e) is non-decreasing along the yield.
    """
    if isinstance(cfg, ShiftedConfig):
        sx, sy = cfg.shift_x, cfg.shift_y
        for a, b in iter_escape_path((v[0] + sx, v[1] - sy), cfg.base):
            yield ((a[0] - sx, a[1] + sy), (b[0] - sx, b[1] + sy))
        return
    if isinstance(cfg, FractalConfig):
        yield from _iter_fractal_path(v, cfg)
        return
    x, y = v
    if y != 0 or x < 0:
        raise ValueError(f"{v!r} is not on the escape path")
    while True:
        yield ((x, 0), (x + 1, 0))
        x += 1


def _iter_fractal_path(v: Vertex, cfg: FractalConfig) -> Iterator[Edge]:
    loc = cfg.locate(v)
    if loc.kind == "main":
        br = loc.branch
        x = v[0]
    elif loc.kind == "abutment":
        br = loc.branch
        x = None  # start on the abutment, partway up
    else:
        raise ValueError(f"{v!r} is not on a main part or abutment")
    y0 = v[1]
    while True:
        cx = None if br.truncated else br.corner[0]
        if x is not None:
            while cx is None or x < cx:
                yield ((x, br.line), (x + 1, br.line))
                x += 1
        if br.truncated:
            return
        step = 1 if br.abutment_up else -1
        yy = br.line if x is not None else y0
        while yy != br.root[1]:
            yield ((cx, yy), (cx, yy + step))
            yy += step
        root = br.root
        br = cfg.branch_at(cfg.parent_line(br.line), root[0])
        x = root[0]


def effective_resistance_path(
    v1: Vertex, v2: Vertex, cfg, bias, budget: int = 200_000
) -> float:
    """Sum of beta^(-x(e)) along the unique tree path between v1 and v2."""
    if v1 == v2:
        return 0.0
    b = _beta(bias)
    path = _tree_path(v1, v2, cfg, budget)
    origin = max(v1[0], v2[0])
    rel = sum(b ** (origin - edge_x(canonical_edge(a, c))) for a, c in path)
    return rel * b ** (-origin)


def _tree_path(v1: Vertex, v2: Vertex, cfg, budget: int) -> list[Edge]:
    """Bidirectional BFS in the adjacency oracle; errors out past the budget."""
    parents: list[dict[Vertex, Optional[Vertex]]] = [{v1: None}, {v2: None}]
    frontiers: list[list[Vertex]] = [[v1], [v2]]
    explored = 0
    meet: Optional[Vertex] = None
    while meet is None:
        side = 0 if len(parents[0]) <= len(parents[1]) else 1
        if not frontiers[side]:
            raise ValueError("vertices are not connected")
        nxt = []
        for u in frontiers[side]:
            for w in cfg.neighbors(u):
                if w in parents[side]:
                    continue
                parents[side][w] = u
                nxt.append(w)
                explored += 1
                if w in parents[1 - side]:
                    meet = w
                    break
                if explored > budget:
                    raise ValueError("exploration budget exceeded; not connected?")
            if meet:
                break
        frontiers[side] = nxt

    def walk_back(side: int) -> list[Vertex]:
        seq: list[Vertex] = []
        u = meet
        while u is not None:
            seq.append(u)
            u = parents[side][u]
        return seq

    left = walk_back(0)[::-1]  # v1 .. meet
    right = walk_back(1)       # meet .. v2
    chain = left + right[1:]
    return [(chain[i], chain[i + 1]) for i in range(len(chain) - 1)]


def incident_conductance(v: Vertex, cfg, bias, origin: Optional[int] = None) -> float:
    """Sum of R(e)^(-1) over open edges at v, scaled by beta^(-origin)."""
    b = _beta(bias)
    if origin is None:
        origin = v[0]
    return sum(b ** (edge_x(canonical_edge(v, u)) - origin) for u in cfg.neighbors(v))


def resistance_to_infinity(v: Vertex, cfg, bias, horizon: int) -> Interval:
    """Two-sided bound on R_eff(v, inf), absolute units.

    Lower bound: exact partial sum of escape-path resistances with
    x(e) <= horizon. Upper: add 2 beta^(-horizon)/(beta-1), the horizontal
    tail doubled to cover vertical edges by the pairing argument.
    """
    lo_rel, hi_rel = _resistance_to_infinity_scaled(v, cfg, bias, horizon)
    scale = _beta(bias) ** (-v[0])
    return Interval(lo_rel * scale, hi_rel * scale)


def _resistance_to_infinity_scaled(v: Vertex, cfg, bias, horizon: int) -> tuple[float, float]:
    b = _beta(bias)
    if horizon <= v[0]:
        raise ValueError("horizon must lie strictly right of the vertex")
    lo = 0.0
    for e in iter_escape_path(v, cfg):
        xe = edge_x(canonical_edge(*e))
        if xe > horizon:
            break
        lo += b ** (v[0] - xe)
    tail = 2.0 * b ** (v[0] - horizon) / (b - 1.0)
    return lo, lo + tail


def escape_probability(v: Vertex, cfg, bias, horizon: int) -> Interval:
    """Interval for the probability of leaving v and never returning."""
    r_lo, r_hi = _resistance_to_infinity_scaled(v, cfg, bias, horizon)
    c_rel = incident_conductance(v, cfg, bias, origin=v[0])
    return Interval(1.0 / (r_hi * c_rel), 1.0 / (r_lo * c_rel))


# -- finite subgraph solvers ----------------------------------------------------

def _conductance_matrix(edges: list[Edge], bias):
    b = _beta(bias)
    verts = sorted({u for e in edges for u in e})
    index = {u: i for i, u in enumerate(verts)}
    origin = max(u[0] for u in verts)
    n = len(verts)
    rows, cols, vals = [], [], []
    for a, c in edges:
        w = b ** (edge_x(canonical_edge(a, c)) - origin)
        i, j = index[a], index[c]
        rows += [i, j]
        cols += [j, i]
        vals += [w, w]
    C = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    deg = np.asarray(C.sum(axis=1)).ravel()
    return verts, index, C, deg


def absorbing_solve(
    edges: Iterable[Edge], bias, absorbing: Iterable[Vertex], reward
) -> dict[Vertex, float]:
    """Per-vertex hitting probabilities or expected absorption times.

    reward = ("hit", target_set): probability of being absorbed in target_set
    (a subset of ``absorbing``) rather than elsewhere; reward = ("time",):
    expected steps until absorption. Direct sparse solve, residual < 1e-10.
    """
    edges = sorted({canonical_edge(*e) for e in edges})
    verts, index, C, deg = _conductance_matrix(edges, bias)
    absorbing = set(absorbing)
    if not absorbing:
        raise ValueError("need at least one absorbing vertex")
    missing = absorbing - set(verts)
    if missing:
        raise ValueError(f"absorbing vertices {missing} not in subgraph")
    interior = [i for i, u in enumerate(verts) if u not in absorbing]

    kind = reward[0]
    out: dict[Vertex, float] = {}
    if interior:
        Dinv = sp.diags(1.0 / deg[interior])
        Q = Dinv @ C[interior, :][:, interior]
        A = (sp.eye(len(interior), format="csr") - Q).tocsc()
        if kind == "hit":
            target = set(reward[1])
            if not target <= absorbing:
                raise ValueError("target must be a subset of the absorbing set")
            t_idx = [index[u] for u in target]
            rhs = np.asarray((Dinv @ C[interior, :][:, t_idx]).sum(axis=1)).ravel()
        elif kind == "time":
            rhs = np.ones(len(interior))
        else:
            raise ValueError(f"unknown reward {reward!r}")
        try:
            x = spla.spsolve(A, rhs)
        except Exception as exc:
            raise ValueError("singular absorbing system") from exc
        if not np.all(np.isfinite(x)):
            raise ValueError("singular absorbing system")
        resid = np.abs(A @ x - rhs).max()
        if resid >= 1e-10:
            raise ArithmeticError(f"solver residual {resid:.3e} too large")
        out = {verts[i]: float(x[k]) for k, i in enumerate(interior)}

    for u in absorbing:
        out[u] = (1.0 if u in reward[1] else 0.0) if kind == "hit" else 0.0
    return out


def stationary_return_time(edges: Iterable[Edge], bias, v: Vertex) -> float:
    """pi(v)^(-1) = sum_w R^(-1)(w) / R^(-1)(v) on the finite subgraph."""
    edges = sorted({canonical_edge(*e) for e in edges})
    verts, index, _, deg = _conductance_matrix(edges, bias)
    if v not in index:
        raise ValueError(f"{v!r} not in subgraph")
    return float(deg.sum() / deg[index[v]])


def finite_region_edges(cfg, cut: Vertex, into: Vertex, budget: int = 500_000) -> list[Edge]:
    """Edges of the finite component hanging off ``cut`` through ``into``.

    BFS from ``into`` that never crosses back through ``cut``; the cut-into
    edge is included, so eq (4.6) return times to ``cut`` on this subgraph
    equal forced-step excursion times in the full configuration.
    """
    if into not in cfg.neighbors(cut):
        raise ValueError("cut and into must be adjacent")
    seen = {cut, into}
    frontier = [into]
    edges = {canonical_edge(cut, into)}
    while frontier:
        nxt = []
        for u in frontier:
            for w in cfg.neighbors(u):
                edges.add(canonical_edge(u, w))
                if w in seen:
                    continue
                seen.add(w)
                nxt.append(w)
                if len(seen) > budget:
                    raise ValueError("region exceeds budget; not finite?")
        frontier = nxt
    return sorted(edges)
