"""The biased step rule and instrumented trajectory runner.

Step rule at a vertex with open neighbor set L of size l: if the rightward
neighbor is open it gets probability beta/(beta+l-1) and every other open
neighbor 1/(beta+l-1); otherwise the step is uniform on L; an isolated
vertex stays put. This equals choosing an incident edge with probability
inversely proportional to its resistance beta^(-x(e)).

A trap visit begins when the walker moves from an anchor to the vertex above
it and ends when it next occupies the anchor, so the recorded duration
counts both the entering and the exiting step (minimum 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .geometry.base import TruncationError, Vertex
from .geometry.fractal import FractalConfig
from .geometry.shifts import ShiftedConfig
from .geometry.warmup import WarmupConfig

_RNG_BUF = 8192


def step_distribution(v: Vertex, neighbors, bias) -> dict:
    """Exact step law at v; keys are next positions ({v: 1} when isolated).

    With a Fraction bias the probabilities come back as Fractions, which is
    what the rule/conductance equivalence tests compare exactly.
    """
    beta = bias.beta if hasattr(bias, "beta") else bias
    nbrs = tuple(neighbors)
    l = len(nbrs)
    if l == 0:
        one = Fraction(1) if isinstance(beta, Fraction) else 1.0
        return {v: one}
    right = (v[0] + 1, v[1])
    if right in nbrs:
        p_other = 1 / (beta + l - 1)
        return {u: beta * p_other if u == right else p_other for u in nbrs}
    p = Fraction(1, l) if isinstance(beta, Fraction) else 1.0 / l
    return {u: p for u in nbrs}


def conductance_distribution(v: Vertex, neighbors, beta) -> dict:
    """Step law as normalized incident conductances beta^(x(e) - v.x)."""
    nbrs = tuple(neighbors)
    if not nbrs:
        return {v: Fraction(1) if isinstance(beta, Fraction) else 1.0}
    weights = {u: (beta if u[0] > v[0] else beta**0) for u in nbrs}
    total = sum(weights.values())
    return {u: w / total for u, w in weights.items()}


@dataclass
class TrapVisitRecord:
    trap_index: int       # n (warm-up) or branch order k (fractal)
    visit_number: int
    duration: int
    hit_core: bool

    @property
    def duration_if_no_core(self) -> int:
        """T* companion value: zero when the core was touched during the visit."""
        return 0 if self.hit_core else self.duration


@dataclass
class TrapEventInfo:
    """First-arrival bookkeeping behind the zero-speed event counters."""
    first_arrival_time: int
    entered_immediately: bool = False
    first_visit_duration: Optional[int] = None
    first_visit_hit_core: bool = False
    open_at_stop: bool = False
    event: bool = False   # entered at first arrival and stayed >= beta^c (t_max-capped)


@dataclass
class WalkRecord:
    first_passage: dict = field(default_factory=dict)         # x -> U(x)
    trap_visits: list = field(default_factory=list)           # TrapVisitRecord
    time_on_P: int = 0
    time_off_P: int = 0
    time_in_traps_on_P: int = 0
    final_position: Vertex = (0, 0)
    final_time: int = 0
    checkpoint_positions: dict = field(default_factory=dict)  # t -> (x, y)
    stop_reason: str = "t_max"
    trap_events: dict = field(default_factory=dict)           # trap key -> TrapEventInfo


class WalkTruncated(TruncationError):
    """The walker reached the truncation boundary b(max_order) - 1."""

    def __init__(self, record: WalkRecord):
        super().__init__("walker reached the truncation boundary")
        self.record = record


def _core_len_lookup(cfg) -> Callable:
    base = cfg.base if isinstance(cfg, ShiftedConfig) else cfg
    if isinstance(base, FractalConfig):
        return lambda key: base.c(key[2])
    if isinstance(base, WarmupConfig):
        return lambda key: base.trap(key).core_len
    return lambda key: 1


def _on_path_test(cfg, start: Vertex):
    """(vertex -> bool on P, set of on-P trap keys) for the path from start."""
    if isinstance(cfg, ShiftedConfig):
        raise ValueError("path splitting is supported on unshifted configurations")
    if isinstance(cfg, WarmupConfig) or type(cfg).__name__ == "LineConfig":
        return (lambda v: v[1] == 0), None  # every warm-up trap hangs off P
    if not isinstance(cfg, FractalConfig):
        raise ValueError("path splitting needs a warm-up or fractal configuration")
    chain = cfg.escape_chain(start)
    by_line: dict[int, tuple] = {}
    prev_a = start[0]
    for br in chain:
        a_k = None if br.truncated else br.corner[0]
        by_line[br.line] = (prev_a, a_k)
        prev_a = a_k
    abut_cols = [
        (br.corner[0], min(br.line, br.root[1]), max(br.line, br.root[1]))
        for br in chain if not br.truncated
    ]
    trap_keys = {
        (br.line, br.corner[0], br.order)
        for br in chain
        if not br.truncated and br.order >= 2
    }

    def on_path(v: Vertex) -> bool:
        x, y = v
        hit = by_line.get(y)
        if hit is not None:
            lo, hi = hit
            if lo <= x and (hi is None or x <= hi):
                return True
        for ax, y0, y1 in abut_cols:
            if x == ax and y0 <= y <= y1:
                return True
        return False

    return on_path, trap_keys


def _a_event(duration: int, core_len: int, beta: float, t_max: int) -> bool:
    """duration >= min(beta^core_len, t_max), evaluated in logs for huge cores."""
    threshold_log = min(core_len * math.log(beta), math.log(t_max))
    return math.log(duration) >= threshold_log - 1e-9


def run(
    start: Vertex,
    cfg,
    bias,
    t_max: int,
    stop=("time",),
    rng: Optional[np.random.Generator] = None,
    t_checkpoints=(),
    x_checkpoints=(),
    path_split: bool = False,
) -> WalkRecord:
    """Run one instrumented trajectory; deterministic given the rng state.

    stop is one of ("time",), ("first_passage", x_target), ("first_return",).
    t_max always caps the run; hitting the cap under a non-time rule is
    reported via stop_reason, not an error.
    """
    beta = float(bias.beta if hasattr(bias, "beta") else bias)
    if beta <= 1:
        raise ValueError("bias beta must exceed 1")
    if rng is None:
        rng = np.random.default_rng()
    if not cfg.neighbors(start):
        raise ValueError(f"start {start!r} is not in the configuration")

    base = cfg.base if isinstance(cfg, ShiftedConfig) else cfg
    trunc_bound = None
    if isinstance(base, FractalConfig):
        trunc_bound = base.b(base.max_order) - 1
        if isinstance(cfg, ShiftedConfig):
            trunc_bound -= cfg.shift_x

    core_len = _core_len_lookup(cfg)
    on_path = None
    chain_trap_keys = None
    if path_split:
        on_path, chain_trap_keys = _on_path_test(cfg, start)

    mode = stop[0]
    if mode not in ("time", "first_passage", "first_return"):
        raise ValueError(f"unknown stopping rule {stop!r}")
    target_x = stop[1] if mode == "first_passage" else None

    rec = WalkRecord()
    tcps = sorted(set(t_checkpoints))
    xcps = sorted(x for x in set(x_checkpoints) if x >= start[0])
    tcp_i = xcp_i = 0
    if xcps and xcps[0] == start[0]:
        rec.first_passage[start[0]] = 0
        xcp_i = 1

    cache: dict = {}

    def build(v: Vertex):
        nbrs = cfg.neighbors(v)
        if not nbrs:
            entry = ((v,), (2.0,), None, False)
        else:
            l = len(nbrs)
            right = (v[0] + 1, v[1])
            if right in nbrs:
                denom = beta + l - 1
                probs = [beta / denom if u == right else 1.0 / denom for u in nbrs]
            else:
                probs = [1.0 / l] * l
            cum, acc = [], 0.0
            for p in probs:
                acc += p
                cum.append(acc)
            cum[-1] = 2.0  # guard against float round-off in the last slot
            entry = (nbrs, tuple(cum), cfg.vertex_meta(v), on_path(v) if on_path else False)
        cache[v] = entry
        return entry

    pos = start
    entry = build(pos)
    t = 0
    max_x = start[0]
    active_key = None
    active_t0 = 0
    active_hit = False
    active_first = False
    visit_counts: dict = {}
    pending_anchor = None

    meta0 = entry[2]
    if meta0 is not None:
        if meta0[0] == "anchor":
            rec.trap_events[meta0[1]] = TrapEventInfo(first_arrival_time=0)
            pending_anchor = meta0[1]
        else:  # starting inside a trap opens a visit at t = 0
            active_key, active_t0, active_hit = meta0[1], 0, meta0[2]

    buf = rng.random(_RNG_BUF)
    bi = 0
    rec.stop_reason = "t_max"

    while t < t_max:
        if bi == _RNG_BUF:
            buf = rng.random(_RNG_BUF)
            bi = 0
        u = buf[bi]
        bi += 1
        nbrs, cum, _, _ = entry
        k = 0
        while u > cum[k]:
            k += 1
        was_pending = pending_anchor
        pending_anchor = None
        pos = nbrs[k]
        t += 1
        entry = cache.get(pos)
        if entry is None:
            entry = build(pos)
        meta = entry[2]

        if path_split:
            if entry[3]:
                rec.time_on_P += 1
            else:
                rec.time_off_P += 1

        if meta is not None:
            if meta[0] == "trap":
                key = meta[1]
                if active_key is None:
                    active_key = key
                    active_t0 = t - 1
                    active_hit = meta[2]
                    active_first = was_pending == key
                elif meta[2]:
                    active_hit = True
                if chain_trap_keys is None or key in chain_trap_keys:
                    rec.time_in_traps_on_P += 1
            else:  # anchor
                key = meta[1]
                if active_key is not None:
                    _close_visit(rec, visit_counts, active_key, t - active_t0,
                                 active_hit, active_first, core_len, beta, t_max)
                    active_key = None
                if key not in rec.trap_events:
                    rec.trap_events[key] = TrapEventInfo(first_arrival_time=t)
                    pending_anchor = key

        x = pos[0]
        if x > max_x:
            max_x = x
            if trunc_bound is not None and x >= trunc_bound:
                rec.final_position, rec.final_time = pos, t
                raise WalkTruncated(rec)
            while xcp_i < len(xcps) and xcps[xcp_i] == x:
                rec.first_passage[x] = t
                xcp_i += 1
        if tcp_i < len(tcps) and t == tcps[tcp_i]:
            rec.checkpoint_positions[t] = pos
            tcp_i += 1
        if mode == "first_passage" and x == target_x:
            rec.stop_reason = "first_passage"
            break
        if mode == "first_return" and pos == start:
            rec.stop_reason = "first_return"
            break

    if active_key is not None:
        # Visit still open at the stop: no completed-visit record, but the
        # blow-up event counts if the core is held when time runs out.
        info = rec.trap_events.get(active_key)
        if info is not None and info.first_visit_duration is None:
            info.open_at_stop = True
            info.first_visit_hit_core = active_hit
            info.entered_immediately = active_first
            if active_first and active_hit:
                info.event = True
    rec.final_position = pos
    rec.final_time = t
    return rec


def _trap_order(key) -> int:
    return key[2] if isinstance(key, tuple) else key


def _close_visit(rec, visit_counts, key, duration, hit_core, was_first,
                 core_len, beta, t_max) -> None:
    n = visit_counts.get(key, 0) + 1
    visit_counts[key] = n
    rec.trap_visits.append(TrapVisitRecord(_trap_order(key), n, duration, hit_core))
    info = rec.trap_events.get(key)
    if info is not None and info.first_visit_duration is None:
        info.first_visit_duration = duration
        info.first_visit_hit_core = hit_core
        info.entered_immediately = was_first
        if was_first:
            info.event = _a_event(duration, core_len(key), beta, t_max)


@dataclass
class ZeroSpeedReport:
    ratios: list          # (x, U(x)/x or None when the checkpoint was missed)
    events: dict          # trap key -> TrapEventInfo


def zero_speed_detector(record: WalkRecord, checkpoints) -> ZeroSpeedReport:
    """First-passage ratio sequence plus per-trap blow-up event flags."""
    ratios = []
    for x in checkpoints:
        if x == 0:
            continue  # U at the start column is 0 by convention
        t = record.first_passage.get(x)
        ratios.append((x, (t / x) if t is not None else None))
    return ZeroSpeedReport(ratios=ratios, events=dict(record.trap_events))


# -- excursion samplers ---------------------------------------------------------

def sample_infinite_entrance_excursion(
    bias, rng: np.random.Generator, cap: int = 10**9
) -> int:
    """One visit to the idealized coreless trap with infinite entrance.

    The walk starts one step inside (at the vertex above the anchor) and the
    excursion ends on the first return there; the anchor below reflects. The
    duration has minimum 2 and mean (2 beta - 1)/(beta - 1).
    """
    beta = float(bias.beta if hasattr(bias, "beta") else bias)
    if beta <= 1:
        raise ValueError("bias beta must exceed 1")
    p_exit = beta / (beta + 1.0)
    if rng.random() < 0.5:
        return 2  # down to the anchor, reflected straight back
    depth, t = 1, 1
    buf = rng.random(_RNG_BUF)
    bi = 0
    while depth > 0:
        if bi == _RNG_BUF:
            buf = rng.random(_RNG_BUF)
            bi = 0
        if buf[bi] < p_exit:
            depth -= 1
        else:
            depth += 1
        bi += 1
        t += 1
        if t >= cap:
            raise RuntimeError("excursion cap exceeded; beta <= 1 misconfiguration?")
    return t


def sample_matched_finite_excursion(
    entrance_len: int, bias, rng: np.random.Generator, cap: int = 10**9
) -> int:
    """Finite-entrance counterpart of the idealized excursion, zeroed on core contact.

    Same protocol (start one step inside, stop on first return there, anchor
    reflects); the move the idealized walk spends going deeper at the far end
    of the entrance instead touches the core, which zeroes the sample. The
    per-step laws match the idealized sampler exactly, realizing the coupling
    behind the stochastic-domination claim.
    """
    beta = float(bias.beta if hasattr(bias, "beta") else bias)
    p_exit = beta / (beta + 1.0)
    if rng.random() < 0.5:
        return 2
    depth, t = 1, 1
    buf = rng.random(_RNG_BUF)
    bi = 0
    while depth > 0:
        if bi == _RNG_BUF:
            buf = rng.random(_RNG_BUF)
            bi = 0
        goes_out = buf[bi] < p_exit
        bi += 1
        if depth == entrance_len and not goes_out:
            return 0  # stepped onto the core
        depth += -1 if goes_out else 1
        t += 1
        if t >= cap:
            raise RuntimeError("excursion cap exceeded")
    return t


def sample_trap_visit(
    entrance_len: int, core_len: int, bias, rng: np.random.Generator,
    t_cap: int = 10**7
) -> tuple[int, bool]:
    """One full visit to a real trap: anchor-to-anchor duration and core flag.

    Positions are entrance depths 0..e at the lower level and core offsets
    0..c one level up; the visit starts with the step onto depth 0 and ends
    back at the anchor. Durations cap at t_cap (returned capped).
    """
    beta = float(bias.beta if hasattr(bias, "beta") else bias)
    e, c = entrance_len, core_len
    p = beta / (beta + 1.0)
    t = 1                  # the entering step
    depth = 0              # entrance depth: 0 = directly above the anchor
    core = -1              # core offset; -1 = not in the core
    hit = False
    buf = rng.random(_RNG_BUF)
    bi = 0
    while True:
        if bi == _RNG_BUF:
            buf = rng.random(_RNG_BUF)
            bi = 0
        u = buf[bi]
        bi += 1
        if core < 0:
            if depth == 0:
                if u < 0.5:
                    return t + 1, hit   # the exiting step to the anchor
                depth = 1
            elif depth < e:
                depth += -1 if u < p else 1
            else:  # far end of the entrance: rightward or up into the core
                if u < p:
                    depth -= 1
                else:
                    core = 0
                    hit = True
        else:
            if core == 0:
                if u < 1.0 - p:   # connector down has conductance 1 vs beta rightward
                    core = -1
                    depth = e
                else:
                    core = 1
            elif core < c:
                core += 1 if u < p else -1
            else:
                core -= 1       # dead end: forced back
        t += 1
        if t >= t_cap:
            return t_cap, hit
