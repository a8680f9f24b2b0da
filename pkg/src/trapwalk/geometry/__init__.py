from .base import (
    COORD_MAX,
    COORD_MIN,
    CoordinateRangeError,
    Edge,
    LineConfig,
    TruncationError,
    Vertex,
    canonical_edge,
    edge_x,
    enumerate_window_edges,
)
from .fractal import BranchDescriptor, FractalConfig, LocateResult, line_order
from .shifts import ShiftedConfig, sample_shifts
from .traps import TrapSpec, trap_edges, trap_neighbors, trap_vertex_kind
from .warmup import SingleTrapLineConfig, WarmupConfig

__all__ = [
    "COORD_MAX",
    "COORD_MIN",
    "CoordinateRangeError",
    "Edge",
    "LineConfig",
    "TruncationError",
    "Vertex",
    "canonical_edge",
    "edge_x",
    "enumerate_window_edges",
    "BranchDescriptor",
    "FractalConfig",
    "LocateResult",
    "line_order",
    "ShiftedConfig",
    "sample_shifts",
    "TrapSpec",
    "trap_edges",
    "trap_neighbors",
    "trap_vertex_kind",
    "SingleTrapLineConfig",
    "WarmupConfig",
]
