"""Stationarizing shifts: compose an oracle with a lattice translation.

The base configuration is translated by (-S_x, +S_y); a query at v is
answered by querying the base at v + (S_x, -S_y) and translating the result
back, so equivariance is exact by construction and testable against the base.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import Vertex


@dataclass
class ShiftedConfig:
    base: object
    shift_x: int = 0     # leftward shift of the base configuration
    shift_y: int = 0

    def _pullback(self, v: Vertex) -> Vertex:
        return (v[0] + self.shift_x, v[1] - self.shift_y)

    def _pushforward(self, u: Vertex) -> Vertex:
        return (u[0] - self.shift_x, u[1] + self.shift_y)

    def neighbors(self, v: Vertex) -> tuple[Vertex, ...]:
        return tuple(self._pushforward(u) for u in self.base.neighbors(self._pullback(v)))

    def vertex_meta(self, v: Vertex):
        return self.base.vertex_meta(self._pullback(v))


def sample_shifts(cfg, m: int, n: int, rng: np.random.Generator) -> ShiftedConfig:
    """Uniform S_y in {-m..m} and S_x in {0..b(n)-1} on top of a fractal oracle."""
    if n > cfg.max_order:
        raise ValueError("n must not exceed the truncation order")
    s_y = int(rng.integers(-m, m + 1))
    s_x = int(rng.integers(0, cfg.b(n)))
    return ShiftedConfig(base=cfg, shift_x=s_x, shift_y=s_y)
