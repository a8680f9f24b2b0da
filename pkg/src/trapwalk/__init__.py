"""Biased random walk on trap-decorated percolation configurations.

Lazy adjacency oracles for two infinite configurations (a trap-decorated
half-line and a translation-invariant fractal branch hierarchy), exact
electrical-network computations on them, an instrumented walker, and the
statistical harness that checks the closed forms against Monte Carlo.
"""

from . import experiments, geometry, network, walker

__all__ = ["experiments", "geometry", "network", "walker"]
__version__ = "0.1.0"
