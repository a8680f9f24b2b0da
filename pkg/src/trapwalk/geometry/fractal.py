"""Self-similar branch hierarchy with one trap per branch of order >= 2.

A branch of order k is a horizontal main part of b_k - 1 edges plus a
vertical abutment of 3*2^(k-1) edges rising from its right end (the corner)
to its root on a branch of order k+1, where

    b_k = 4 * 3^(k(k-1)/2),        q_k = 3^k - 1,     b_{k+1} = (q_k + 1) b_k.

Rows y = 3*2^(k-1)*l with l odd carry order-k main parts. The branch on such
a row abuts toward the unique neighbouring row at distance 3*2^(k-1) whose
own order is exactly k+1 (l = 1 mod 4 points up, l = 3 mod 4 points down).
Every order-(k+1) branch with tip x_p hosts order-k children tipped at
x_p + (j-1) b_k for j = 1..q_k on both adjacent order-k rows, leaving a final
stretch of b_k columns before the corner; the trap anchors at its midpoint,
2 * 3^((k-1)(k-2)/2) columns left of the corner, entrance extent
e_k = min(ceil(log_gamma k), 3^((k-1)(k-2)/2)) and core c_k = 3^((k-1)(k-2)/2).

Branches of order ``max_order`` are truncated: infinite main part, no
abutment, no trap. All arithmetic is exact integer work; tips of order-k
branches are always multiples of b_k, corners are -1 mod b_k.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .base import COORD_MAX, TruncationError, Vertex, check_vertex
from .traps import TrapSpec, trap_neighbors, trap_vertex_kind


def line_order(y: int) -> Optional[int]:
    """k such that y = 3 * 2^(k-1) * l with l odd, or None (y = 0 included)."""
    if y == 0 or y % 3 != 0:
        return None
    m = y // 3
    k = 1
    while m % 2 == 0:
        m //= 2
        k += 1
    return k


@dataclass(frozen=True)
class BranchDescriptor:
    order: int
    tip: Vertex
    corner: Optional[Vertex]       # None when truncated (infinite main part)
    root: Optional[Vertex]         # None when truncated
    abutment_up: Optional[bool]    # None when truncated

    @property
    def line(self) -> int:
        return self.tip[1]

    @property
    def truncated(self) -> bool:
        return self.corner is None

    def contains_main(self, v: Vertex) -> bool:
        x, y = v
        if y != self.line or x < self.tip[0]:
            return False
        return self.corner is None or x <= self.corner[0]


@dataclass(frozen=True)
class LocateResult:
    kind: str                      # "main" | "abutment" | "trap_entrance" | "trap_core" | "none"
    branch: Optional[BranchDescriptor] = None
    trap: Optional[TrapSpec] = None


class FractalConfig:
    def __init__(self, gamma: float = 2.0, max_order: int = 8):
        if gamma <= 1:
            raise ValueError("gamma must exceed 1")
        if max_order < 1:
            raise ValueError("max_order must be >= 1")
        self.gamma = gamma
        self.max_order = max_order
        if self.b(max_order) > COORD_MAX:
            raise ValueError(f"b({max_order}) exceeds the 128-bit coordinate range")
        for k in range(1, max_order):
            assert self.b(k + 1) == (self.q(k) + 1) * self.b(k)
        # (line, x // b_k) -> tip or None; valid because every order-k tip
        # is a multiple of b_k, so a slot holds at most one branch.
        self._tip_cache: dict = {}

    @property
    def beta_c(self) -> float:
        return self.gamma

    @staticmethod
    def b(k: int) -> int:
        return 4 * 3 ** (k * (k - 1) // 2)

    @staticmethod
    def q(k: int) -> int:
        return 3**k - 1

    @staticmethod
    def half_stretch(k: int) -> int:
        """3^((k-1)(k-2)/2): core length and half the reserved final stretch."""
        return 3 ** ((k - 1) * (k - 2) // 2)

    def c(self, k: int) -> int:
        return self.half_stretch(k)

    def e(self, k: int) -> int:
        """Entrance extent: smallest m with gamma^m >= k, capped by the core length.

        The loop avoids ceil(log(k)/log(gamma)) which misrounds at exact powers.
        """
        if k < 2:
            raise ValueError("traps exist on branches of order >= 2 only")
        m, p = 0, 1.0
        while p < k:
            p *= self.gamma
            m += 1
        return max(1, min(m, self.half_stretch(k)))

    @staticmethod
    def abutment_len(k: int) -> int:
        return 3 * 2 ** (k - 1)

    def parent_line(self, line: int) -> int:
        k = line_order(line)
        if k is None:
            raise ValueError(f"{line} is not a branch row")
        s = 3 * 2 ** (k - 1)
        l = line // s
        return line + s if l % 4 == 1 else line - s

    # -- recursive descent ---------------------------------------------------

    def branch_tip_on_line(self, line: int, x: int) -> Optional[int]:
        """Tip x-coordinate of the branch on ``line`` whose main part spans x."""
        k = line_order(line)
        if k is None:
            return None
        if k > self.max_order:
            raise TruncationError(f"row {line} needs a branch of order {k} > max_order")
        if x < 0:
            return None
        if k == self.max_order:
            return 0
        bk = self.b(k)
        key = (line, x // bk)
        cached = self._tip_cache.get(key, -1)
        if cached != -1:
            return cached
        parent_tip = self.branch_tip_on_line(self.parent_line(line), x)
        if parent_tip is None:
            tip = None
        else:
            j = (x - parent_tip) // bk
            # j >= q(k): x is in the parent's reserved final stretch
            tip = parent_tip + j * bk if j < self.q(k) else None
        self._tip_cache[key] = tip
        return tip

    def branch_at(self, line: int, x: int) -> Optional[BranchDescriptor]:
        tip = self.branch_tip_on_line(line, x)
        if tip is None:
            return None
        return self.descriptor(line, tip)

    def descriptor(self, line: int, tip_x: int) -> BranchDescriptor:
        k = line_order(line)
        assert k is not None
        if k == self.max_order:
            return BranchDescriptor(order=k, tip=(tip_x, line), corner=None,
                                    root=None, abutment_up=None)
        corner_x = tip_x + self.b(k) - 1
        p_line = self.parent_line(line)
        return BranchDescriptor(order=k, tip=(tip_x, line), corner=(corner_x, line),
                                root=(corner_x, p_line), abutment_up=p_line > line)

    def next_branch_tip(self, line: int, x: int) -> Optional[int]:
        """Smallest branch tip >= x on ``line``; None once past the truncation edge."""
        k = line_order(line)
        if k is None:
            return None
        x = max(x, 0)
        if k == self.max_order:
            return 0 if x <= 0 else None
        p_line = self.parent_line(line)
        p_tip = self.branch_tip_on_line(p_line, x)
        if p_tip is None:
            # x sits in a gap of the parent row; jump to the next parent branch,
            # whose first child shares its tip column.
            return self.next_branch_tip(p_line, x)
        bk = self.b(k)
        j = (x - p_tip) // bk
        if j < self.q(k):
            tip = p_tip + j * bk
            if tip >= x:
                return tip
            if j + 1 < self.q(k):
                return tip + bk
        return self.next_branch_tip(line, p_tip + self.b(k + 1))

    def trap_of_branch(self, br: BranchDescriptor) -> Optional[TrapSpec]:
        if br.order < 2 or br.truncated:
            return None
        t = self.half_stretch(br.order)
        anchor = (br.corner[0] - 2 * t, br.line)
        return TrapSpec(anchor=anchor, entrance_len=self.e(br.order),
                        core_len=self.c(br.order), index=br.order)

    # -- classification ------------------------------------------------------

    def structures_at(self, v: Vertex) -> list[tuple]:
        """Memberships of v: ("main", B), ("root", child_B), ("anchor", trap, B),
        ("abutment", B), ("trap", trap, kind)."""
        x, y = check_vertex(v)
        if x < 0:
            return []
        out: list[tuple] = []

        k0 = line_order(y)
        if k0 is not None:
            if k0 > self.max_order:
                raise TruncationError(f"row {y} needs order {k0} > max_order")
            tip = self.branch_tip_on_line(y, x)
            if tip is not None:
                br = self.descriptor(y, tip)
                out.append(("main", br))
                if k0 >= 2:
                    bc = self.b(k0 - 1)
                    rel = x - tip
                    if (rel + 1) % bc == 0 and (rel + 1) // bc <= self.q(k0 - 1):
                        s = 3 * 2 ** (k0 - 2)
                        for child_line in (y + s, y - s):
                            child = self.descriptor(child_line, x - bc + 1)
                            out.append(("root", child))
                    trap = self.trap_of_branch(br)
                    if trap is not None and trap.anchor == v:
                        out.append(("anchor", trap, br))

        for dy in (1, 2):
            kh = line_order(y - dy)
            if kh is None or kh < 2:
                continue
            if kh > self.max_order:
                raise TruncationError(f"row {y - dy} needs order {kh} > max_order")
            host = self.branch_at(y - dy, x)
            if host is None or host.truncated:
                continue
            trap = self.trap_of_branch(host)
            if trap is not None:
                kind = trap_vertex_kind(trap, v)
                if kind is not None:
                    out.append(("trap", trap, kind))

        for m in range(1, self.max_order):
            bm = self.b(m)
            if (x + 1) % bm != 0:
                continue  # corners of order m sit at -1 mod b_m
            s = 3 * 2 ** (m - 1)
            # Upward abutment from the order-m row just below y.
            lo = _largest_line_leq(y - 1, s)
            if lo is not None and lo > y - s:
                br = self._corner_branch(lo, x)
                if br is not None and br.abutment_up:
                    out.append(("abutment", br))
            # Downward abutment from the order-m row just above y.
            hi = _smallest_line_geq(y + 1, s)
            if hi is not None and hi < y + s:
                br = self._corner_branch(hi, x)
                if br is not None and br.abutment_up is False:
                    out.append(("abutment", br))
        return out

    def _corner_branch(self, line: int, x: int) -> Optional[BranchDescriptor]:
        br = self.branch_at(line, x)
        if br is not None and not br.truncated and br.corner[0] == x:
            return br
        return None

    def locate(self, v: Vertex) -> LocateResult:
        items = self.structures_at(v)
        for item in items:
            if item[0] == "main":
                return LocateResult(kind="main", branch=item[1])
        for item in items:
            if item[0] == "abutment":
                return LocateResult(kind="abutment", branch=item[1])
        for item in items:
            if item[0] == "trap":
                return LocateResult(kind=f"trap_{item[2]}", trap=item[1])
        return LocateResult(kind="none")

    def neighbors(self, v: Vertex) -> tuple[Vertex, ...]:
        x, y = v
        out: set[Vertex] = set()
        for item in self.structures_at(v):
            tag = item[0]
            if tag == "main":
                br: BranchDescriptor = item[1]
                if x > br.tip[0]:
                    out.add((x - 1, y))
                if br.corner is None or x < br.corner[0]:
                    out.add((x + 1, y))
                if br.corner is not None and x == br.corner[0]:
                    out.add((x, y + 1) if br.abutment_up else (x, y - 1))
            elif tag == "root":
                child: BranchDescriptor = item[1]
                out.add((x, y - 1) if child.line < y else (x, y + 1))
            elif tag == "abutment":
                out.add((x, y - 1))
                out.add((x, y + 1))
            elif tag == "anchor":
                out.add((x, y + 1))
            elif tag == "trap":
                out.update(trap_neighbors(item[1], v))
        return tuple(sorted(out))

    def vertex_meta(self, v: Vertex):
        """(kind, trap_key, is_core) at trap-relevant vertices, else None.

        trap_key is the host branch's (line, corner_x) pair plus its order so
        visits to distinct same-order traps are told apart.
        """
        for item in self.structures_at(v):
            if item[0] == "anchor":
                trap, br = item[1], item[2]
                return ("anchor", (br.line, br.corner[0], trap.index), False)
            if item[0] == "trap":
                trap = item[1]
                d, yy = trap.anchor
                key = (yy, d + 2 * self.half_stretch(trap.index), trap.index)
                return ("trap", key, item[2] == "core")
        return None

    # -- escape path ----------------------------------------------------------

    def escape_chain(self, start: Vertex) -> list[BranchDescriptor]:
        """Branches of order 1..max_order traversed by the path from ``start`` to infinity."""
        loc = self.locate(start)
        if loc.kind != "main" or loc.branch.order != 1:
            raise ValueError(f"{start!r} is not on the main part of an order-1 branch")
        chain = [loc.branch]
        br = loc.branch
        while br.order < self.max_order:
            parent = self.branch_at(self.parent_line(br.line), br.root[0])
            assert parent is not None and parent.contains_main(br.root)
            chain.append(parent)
            br = parent
        return chain

    def path_to_infinity(self, start: Vertex, up_to_order: int) -> list[tuple[int, int]]:
        """[(k, a_k)] for k = 1..up_to_order; a_k is the order-k abutment column."""
        if up_to_order >= self.max_order:
            raise TruncationError("the truncated top-order branch has no abutment")
        chain = self.escape_chain(start)
        return [(br.order, br.corner[0]) for br in chain[:up_to_order]]


def _largest_line_leq(y: int, s: int) -> Optional[int]:
    """Largest s*l <= y with l odd."""
    l = y // s
    if l % 2 == 0:
        l -= 1
    return s * l


def _smallest_line_geq(y: int, s: int) -> Optional[int]:
    """Smallest s*l >= y with l odd."""
    l = -((-y) // s)
    if l % 2 == 0:
        l += 1
    return s * l
