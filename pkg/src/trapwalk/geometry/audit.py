"""Structural audits: forest property, neighbor symmetry, disjointness.

Two modes. The full mode scans every vertex of a window through the
adjacency oracle (union-find for cycles, symmetry per edge, multi-membership
claims); it is exact but per-vertex, so it suits windows up to a few hundred
thousand cells and arbitrary oracles, including fault-injection doubles.
The structural mode re-derives the window's open edges from branch/trap
arithmetic that is independent of the neighbor-assembly code path, checks
interval disjointness row by row, counts components with scipy, and
cross-checks the oracle's neighbor sets on a vertex sample. Large fractal
windows get the structural mode; both report zero violations on a correct
configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .base import Vertex, canonical_edge
from .fractal import FractalConfig, line_order
from .warmup import WarmupConfig

Window = tuple[int, int, int, int]   # x0, x1, y0, y1 inclusive


@dataclass
class AuditReport:
    window: Window
    mode: str
    n_vertices: int = 0
    n_edges: int = 0
    n_components: int = 0
    violations: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, detail: str, cap: int = 200) -> None:
        if len(self.violations) < cap:
            self.violations.append(f"{kind}: {detail}")
        elif len(self.violations) == cap:
            self.violations.append("... further violations suppressed")


# -- full per-vertex audit ------------------------------------------------------

def _full_audit(oracle, window: Window) -> AuditReport:
    x0, x1, y0, y1 = window
    rep = AuditReport(window=window, mode="full")
    parent: dict[Vertex, Vertex] = {}

    def find(v: Vertex) -> Vertex:
        r = v
        while parent[r] != r:
            r = parent[r]
        while parent[v] != r:
            parent[v], v = r, parent[v]
        return r

    in_cfg = 0
    n_edges = 0
    has_structs = hasattr(oracle, "structures_at")
    memo: dict[Vertex, tuple] = {}

    def nb(v: Vertex) -> tuple:
        got = memo.get(v)
        if got is None:
            got = memo[v] = oracle.neighbors(v)
        return got

    for x in range(x0, x1 + 1):
        for y in range(y0, y1 + 1):
            v = (x, y)
            nbrs = nb(v)
            if nbrs:
                in_cfg += 1
            for u in nbrs:
                if v not in nb(u):
                    rep.add("symmetry", f"{v} -> {u} but not back")
                if not (x0 <= u[0] <= x1 and y0 <= u[1] <= y1):
                    continue
                if u > v:
                    n_edges += 1
                    parent.setdefault(v, v)
                    parent.setdefault(u, u)
                    rv, ru = find(v), find(u)
                    if rv == ru:
                        rep.add("cycle", f"edge {v}-{u} closes a cycle")
                    else:
                        parent[rv] = ru
            if has_structs and nbrs:
                _claims_check(oracle, v, rep)
    rep.n_vertices = in_cfg
    rep.n_edges = n_edges
    roots = {find(v) for v in parent}
    rep.n_components = len(roots)
    rep.checks = {"symmetry": True, "forest": True,
                  "claims": has_structs, "disjointness": False}
    return rep


def _claims_check(oracle, v: Vertex, rep: AuditReport) -> None:
    items = oracle.structures_at(v)
    mains = [i for i in items if i[0] == "main"]
    abuts = [i for i in items if i[0] == "abutment"]
    traps = [i for i in items if i[0] == "trap"]
    roots = [i for i in items if i[0] == "root"]
    anchors = [i for i in items if i[0] == "anchor"]
    if len(mains) > 1:
        rep.add("claims", f"{v} on two main parts")
    if abuts and (mains or traps or len(abuts) > 1):
        rep.add("claims", f"{v} abutment overlaps another structure")
    if traps and (mains or len(traps) > 1):
        rep.add("claims", f"{v} trap overlaps another structure")
    if (roots or anchors) and not mains:
        rep.add("claims", f"{v} attach point off any main part")


# -- structural enumeration (fractal) --------------------------------------------

def iter_branch_tips(cfg: FractalConfig, line: int, x0: int, x1: int) -> Iterator[int]:
    """Tips of branches on ``line`` whose main span intersects [x0, x1]."""
    k = line_order(line)
    if k is None or k > cfg.max_order or x1 < 0:
        return
    if k == cfg.max_order:
        yield 0
        return
    bk = cfg.b(k)
    qk = cfg.q(k)
    for p_tip in iter_branch_tips(cfg, cfg.parent_line(line), x0, x1):
        j_lo = max(0, (x0 - p_tip - bk + 1 + bk - 1) // bk)
        j_hi = min(qk - 1, (x1 - p_tip) // bk)
        for j in range(j_lo, j_hi + 1):
            yield p_tip + j * bk


def _fractal_row_intervals(cfg: FractalConfig, y: int, x0: int, x1: int) -> list:
    """(lo, hi, structure-id) vertex intervals occupying row y within [x0, x1].

    Main parts, trap cells and abutment interior cells; derived from layout
    arithmetic, not from the neighbor oracle.
    """
    out = []
    k0 = line_order(y)
    if k0 is not None and k0 <= cfg.max_order:
        for tip in iter_branch_tips(cfg, y, x0, x1):
            if k0 == cfg.max_order:
                hi = x1
            else:
                hi = min(x1, tip + cfg.b(k0) - 1)
            lo = max(x0, tip)
            if lo <= hi:
                out.append((lo, hi, ("main", y, tip)))
    for dy, part in ((1, "entrance"), (2, "core")):
        yy = y - dy
        kh = line_order(yy)
        if kh is None or kh < 2 or kh > cfg.max_order - 1:
            continue
        t = cfg.half_stretch(kh)
        e, c = cfg.e(kh), cfg.c(kh)
        for tip in iter_branch_tips(cfg, yy, x0 - 3 * t, x1 + 3 * t):
            corner = tip + cfg.b(kh) - 1
            a = corner - 2 * t
            lo, hi = (a - e, a) if part == "entrance" else (a - e, a - e + c)
            lo, hi = max(lo, x0), min(hi, x1)
            if lo <= hi:
                out.append((lo, hi, ("trap", yy, corner, part)))
    for m in range(1, cfg.max_order):
        s = 3 * 2 ** (m - 1)
        for line, up in _abutment_rows_crossing(y, s):
            for tip in iter_branch_tips(cfg, line, x0, x1):
                br = cfg.descriptor(line, tip)
                if br.truncated or br.abutment_up is not up:
                    continue
                cx = br.corner[0]
                if x0 <= cx <= x1:
                    out.append((cx, cx, ("abut", line, cx)))
    return out


def _abutment_rows_crossing(y: int, s: int):
    """Order-m rows (span s) whose abutment interior crosses row y."""
    rows = []
    l = (y - 1) // s
    if l % 2 == 0:
        l -= 1
    lo_line = s * l
    if lo_line < y < lo_line + s:
        rows.append((lo_line, True))    # points up, crosses from below
    l = -((-(y + 1)) // s)
    if l % 2 == 0:
        l += 1
    hi_line = s * l
    if hi_line > y > hi_line - s:
        rows.append((hi_line, False))   # points down, crosses from above
    return rows


def _fractal_vertical_edges(cfg: FractalConfig, y: int, x0: int, x1: int) -> list[int]:
    """Columns with an open vertical edge between rows y and y+1 in [x0, x1]."""
    cols = []
    for m in range(1, cfg.max_order):
        s = 3 * 2 ** (m - 1)
        for line, up in _abutment_gaps_crossing(y, s):
            for tip in iter_branch_tips(cfg, line, x0, x1):
                br = cfg.descriptor(line, tip)
                if br.truncated or br.abutment_up is not up:
                    continue
                cx = br.corner[0]
                if x0 <= cx <= x1:
                    cols.append(cx)
    for yy, which in ((y, "anchor"), (y - 1, "connector")):
        kh = line_order(yy)
        if kh is None or kh < 2 or kh > cfg.max_order - 1:
            continue
        t = cfg.half_stretch(kh)
        for tip in iter_branch_tips(cfg, yy, x0 - 3 * t, x1 + 3 * t):
            corner = tip + cfg.b(kh) - 1
            a = corner - 2 * t
            col = a if which == "anchor" else a - cfg.e(kh)
            if x0 <= col <= x1:
                cols.append(col)
    return cols


def _abutment_gaps_crossing(y: int, s: int):
    """Order-m rows whose abutment contains the vertical edge y -> y+1."""
    rows = []
    l = y // s
    if l % 2 == 0:
        l -= 1
    lo_line = s * l
    if lo_line <= y <= lo_line + s - 1:
        rows.append((lo_line, True))
    l = -((-(y + 1)) // s)
    if l % 2 == 0:
        l += 1
    hi_line = s * l
    if hi_line - s <= y <= hi_line - 1:
        rows.append((hi_line, False))
    return rows


def fractal_window_edges(cfg: FractalConfig, window: Window):
    """All open edges with both endpoints in the window, via structural arithmetic."""
    x0, x1, y0, y1 = window
    x0 = max(x0, 0)
    horiz = []   # (x, y) meaning (x,y)-(x+1,y)
    vert = []    # (x, y) meaning (x,y)-(x,y+1)
    for y in range(y0, y1 + 1):
        for lo, hi, sid in _fractal_row_intervals(cfg, y, x0, x1):
            if sid[0] == "abut":
                continue  # vertical-only cells
            if hi > lo:
                horiz.append((lo, hi, y))
        if y < y1:
            for col in _fractal_vertical_edges(cfg, y, x0, x1):
                vert.append((col, y))
    return horiz, vert


def _structural_audit(cfg: FractalConfig, window: Window,
                      rng: Optional[np.random.Generator], sample: int) -> AuditReport:
    x0, x1, y0, y1 = window
    x0 = max(x0, 0)
    rep = AuditReport(window=window, mode="structural")

    n_vertices = 0
    h_runs: list[tuple[int, int, int]] = []
    v_cols: list[tuple[int, int]] = []
    for y in range(y0, y1 + 1):
        ivs = sorted(_fractal_row_intervals(cfg, y, x0, x1), key=lambda r: r[0])
        for i in range(1, len(ivs)):
            if ivs[i][0] <= ivs[i - 1][1]:
                rep.add("disjointness",
                        f"row {y}: {ivs[i - 1][2]} overlaps {ivs[i][2]}")
        n_vertices += sum(hi - lo + 1 for lo, hi, _ in ivs)
        for lo, hi, sid in ivs:
            if sid[0] != "abut" and hi > lo:
                h_runs.append((lo, hi, y))
        if y < y1:
            for col in _fractal_vertical_edges(cfg, y, x0, x1):
                v_cols.append((col, y))

    # edge arrays, encoded as (x << shift) + row-offset
    shift = (y1 - y0 + 2).bit_length()
    parts_u, parts_v = [], []
    for lo, hi, y in h_runs:
        xs = np.arange(lo, hi, dtype=np.int64)
        code = (xs << shift) + (y - y0)
        parts_u.append(code)
        parts_v.append(code + (1 << shift))
    if v_cols:
        arr = np.asarray(v_cols, dtype=np.int64)
        code = (arr[:, 0] << shift) + (arr[:, 1] - y0)
        parts_u.append(code)
        parts_v.append(code + 1)
    if parts_u:
        u = np.concatenate(parts_u)
        v = np.concatenate(parts_v)
        ids, idx = np.unique(np.concatenate([u, v]), return_inverse=True)
        n = len(ids)
        ui, vi = idx[: len(u)], idx[len(u):]
        g = coo_matrix((np.ones(len(ui), dtype=np.int8), (ui, vi)), shape=(n, n))
        n_comp = connected_components(g, directed=False)[0]
        n_edges = len(u)
        if n_edges != n - n_comp:
            rep.add("cycle", f"{n_edges} edges on {n} vertices in {n_comp} components")
        rep.n_edges = n_edges
        rep.n_components = n_comp
    rep.n_vertices = n_vertices

    # sampled neighbor-symmetry check through the oracle itself
    if rng is not None and sample > 0:
        xs = rng.integers(x0, x1 + 1, size=sample)
        ys = rng.integers(y0, y1 + 1, size=sample)
        for x, y in zip(xs.tolist(), ys.tolist()):
            vtx = (x, y)
            for uu in cfg.neighbors(vtx):
                if vtx not in cfg.neighbors(uu):
                    rep.add("symmetry", f"{vtx} -> {uu} but not back")
    rep.checks = {"symmetry": rng is not None, "forest": True,
                  "claims": False, "disjointness": True}
    return rep


def audit_window(
    oracle, window: Window, mode: str = "auto",
    rng: Optional[np.random.Generator] = None, sample: int = 10_000,
) -> AuditReport:
    """Audit the configuration within a rectangle.

    mode "full" scans every vertex through the oracle; "structural"
    (fractal only) re-derives the window from layout arithmetic and
    cross-checks the oracle on a sample; "auto" picks by window size.
    """
    x0, x1, y0, y1 = window
    area = (x1 - x0 + 1) * (y1 - y0 + 1)
    if mode == "auto":
        mode = "structural" if isinstance(oracle, FractalConfig) and area > 400_000 else "full"
    if mode == "full":
        return _full_audit(oracle, window)
    if mode != "structural":
        raise ValueError(f"unknown audit mode {mode!r}")
    if not isinstance(oracle, FractalConfig):
        raise ValueError("structural mode requires a fractal configuration")
    return _structural_audit(oracle, window, rng or np.random.default_rng(0), sample)


def warmup_window_edges(cfg: WarmupConfig, window: Window):
    """Open warm-up edges in the window as (horizontal runs, vertical columns)."""
    x0, x1, y0, y1 = window
    x0 = max(x0, 0)
    horiz = []
    vert = []
    if y0 <= 0 <= y1 and x1 > x0:
        horiz.append((x0, x1, 0))
    cfg._materialize_covering(x1 + 1)
    for spec in cfg._traps:
        d, _ = spec.anchor
        e, c = spec.entrance_len, spec.core_len
        if d - e > x1 or d - e + c < x0 - 1:
            if d - e > x1:
                break
            continue
        if y0 <= 1 <= y1:
            lo, hi = max(x0, d - e), min(x1, d)
            if lo < hi:
                horiz.append((lo, hi, 1))
        if y0 <= 2 <= y1:
            lo, hi = max(x0, d - e), min(x1, d - e + c)
            if lo < hi:
                horiz.append((lo, hi, 2))
        if y0 <= 0 and 1 <= y1 and x0 <= d <= x1:
            vert.append((d, 0))
        if y0 <= 1 and 2 <= y1 and x0 <= d - e <= x1:
            vert.append((d - e, 1))
    return horiz, vert


def window_edge_dump(oracle, window: Window) -> list[str]:
    """Canonical `x1 y1 x2 y2` lines, sorted, for the CLI edge dump."""
    if isinstance(oracle, FractalConfig):
        horiz, vert = fractal_window_edges(oracle, window)
        edges = []
        for lo, hi, y in horiz:
            edges.extend(((x, y), (x + 1, y)) for x in range(lo, hi))
        edges.extend(((x, y), (x, y + 1)) for x, y in vert)
    elif isinstance(oracle, WarmupConfig):
        horiz, vert = warmup_window_edges(oracle, window)
        edges = []
        for lo, hi, y in horiz:
            edges.extend(((x, y), (x + 1, y)) for x in range(lo, hi))
        edges.extend(((x, y), (x, y + 1)) for x, y in vert)
    else:
        from .base import enumerate_window_edges
        edges = enumerate_window_edges(oracle, window)
    edges = sorted(canonical_edge(a, b) for a, b in edges)
    return [f"{a[0]} {a[1]} {b[0]} {b[1]}" for a, b in edges]
