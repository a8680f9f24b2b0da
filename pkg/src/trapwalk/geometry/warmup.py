"""Warm-up configuration: the positive x-axis decorated with traps.

Trap n anchors at (d_n, 0) with entrance extent e_n and core length c_n.
Defaults follow d_n = n^3, e_n = ceil(alpha * ln n) (clamped to 1) and
c_n = n, with deterministic small-n shrinking (c first, then e) so that the
non-overlap constraints

    e_n < d_n - d_{n-1}                      (entrances clear the previous anchor)
    e_n + c_{n-1} - e_{n-1} < d_n - d_{n-1}  (cores clear the next entrance)

hold for every n >= 2. Traps are materialized lazily as queries move right.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from typing import Callable, Optional

from .base import Vertex, check_vertex
from .traps import TrapSpec, trap_neighbors, trap_vertex_kind


class WarmupConfig:
    def __init__(
        self,
        alpha: float = 1.0,
        d_fn: Optional[Callable[[int], int]] = None,
        e_fn: Optional[Callable[[int], int]] = None,
        c_fn: Optional[Callable[[int], int]] = None,
        traps_enabled: bool = True,
    ):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.alpha = alpha
        self._d = d_fn or (lambda n: n**3)
        self._e = e_fn or (lambda n: max(1, math.ceil(alpha * math.log(n))))
        self._c = c_fn or (lambda n: n)
        self.traps_enabled = traps_enabled
        self._traps: list[TrapSpec] = []
        self._anchors: list[int] = []

    @property
    def beta_c(self) -> float:
        """Critical drift e^(1/alpha) for the default parameter choice."""
        return math.exp(1.0 / self.alpha)

    def _raw(self, n: int) -> tuple[int, int, int]:
        """Constraint-corrected (d_n, e_n, c_n); independent of materialization."""
        d = self._d(n)
        e = max(1, self._e(n))
        c = max(1, self._c(n))
        if n >= 2:
            dd = d - self._d(n - 1)
            if dd <= 1:
                raise ValueError(f"d must be strictly increasing with gaps > 1 at n={n}")
            e = min(e, dd - 1)
        # Shrink this trap's core so the NEXT entrance fits (2.2); prefer c, then e.
        d_next = self._d(n + 1)
        dd_next = d_next - d
        e_next = min(max(1, self._e(n + 1)), dd_next - 1)
        c = min(c, dd_next - e_next + e - 1)
        if c < 1:
            # Cannot happen for e <= dd-1, e >= 1; guard stays for exotic d maps.
            raise ValueError(f"no admissible core length at n={n}")
        return d, e, c

    def trap(self, n: int) -> TrapSpec:
        if n < 1:
            raise ValueError("trap index starts at 1")
        self._materialize_through(n)
        return self._traps[n - 1]

    def _materialize_through(self, n: int) -> None:
        while len(self._traps) < n:
            m = len(self._traps) + 1
            d, e, c = self._raw(m)
            spec = TrapSpec(anchor=(d, 0), entrance_len=e, core_len=c, index=m)
            check_vertex((d - e, 2))
            self._traps.append(spec)
            self._anchors.append(d)

    def _materialize_covering(self, x: int) -> None:
        """Ensure every trap whose span can reach column x exists."""
        while not self._traps or self._anchors[-1] <= x:
            self._materialize_through(len(self._traps) + 1)

    def validate(self, n_max: int) -> None:
        """Check constraints (2.1)/(2.2) for all 2 <= n <= n_max."""
        self._materialize_through(n_max)
        for n in range(2, n_max + 1):
            a, b = self._traps[n - 2], self._traps[n - 1]
            dd = b.anchor[0] - a.anchor[0]
            if not b.entrance_len < dd:
                raise ValueError(f"entrance overlap at n={n}")
            if not b.entrance_len + a.core_len - a.entrance_len < dd:
                raise ValueError(f"core overlap at n={n}")

    def trap_at_anchor(self, x: int) -> Optional[TrapSpec]:
        if not self.traps_enabled or x < 1:
            return None
        self._materialize_covering(x)
        i = bisect_right(self._anchors, x) - 1
        if i >= 0 and self._anchors[i] == x:
            return self._traps[i]
        return None

    def _trap_covering(self, v: Vertex) -> Optional[TrapSpec]:
        """The trap whose entrance/core rows contain v, if any."""
        if not self.traps_enabled:
            return None
        x, y = v
        if y not in (1, 2) or x < 0:
            return None
        self._materialize_covering(x)
        # Entrances end at their anchor, but a core may overshoot it by c - e,
        # so the covering trap is the first with anchor >= x or the one before.
        i = bisect_right(self._anchors, x - 1)
        for spec in self._traps[max(0, i - 1):]:
            if spec.anchor[0] >= x and spec.anchor[0] - spec.entrance_len > x:
                break
            if trap_vertex_kind(spec, v):
                return spec
        return None

    def neighbors(self, v: Vertex) -> tuple[Vertex, ...]:
        x, y = check_vertex(v)
        if y == 0:
            if x < 0:
                return ()
            out = [(x + 1, 0)] if x == 0 else [(x - 1, 0), (x + 1, 0)]
            if self.trap_at_anchor(x) is not None:
                out.append((x, 1))
            return tuple(out)
        if y in (1, 2):
            spec = self._trap_covering(v)
            if spec is not None:
                return tuple(trap_neighbors(spec, v))
        return ()

    def vertex_meta(self, v: Vertex):
        """(kind, trap_index, is_core) for trap bookkeeping; None off-trap."""
        x, y = v
        if y == 0:
            spec = self.trap_at_anchor(x)
            return ("anchor", spec.index, False) if spec else None
        if y in (1, 2):
            spec = self._trap_covering(v)
            if spec is not None:
                kind = trap_vertex_kind(spec, v)
                return ("trap", spec.index, kind == "core")
        return None


class SingleTrapLineConfig(WarmupConfig):
    """Half-line with exactly one trap; used for trap-entry statistics."""

    def __init__(self, d: int = 8, e: int = 1, c: int = 1):
        super().__init__(alpha=1.0)
        spec = TrapSpec(anchor=(d, 0), entrance_len=e, core_len=c, index=1)
        self._traps = [spec]
        self._anchors = [d]

    def _materialize_through(self, n: int) -> None:
        pass

    def _materialize_covering(self, x: int) -> None:
        pass
