"""Statistical harness: censuses, lemma verification suites, speed sweeps.

Census probabilities are exact rationals obtained by enumeration; Monte
Carlo comparisons always report the point estimate, its standard error and
the closed-form target, failing only past 3 standard errors (two-sided) or
on one-sided bound violations beyond 3 standard errors. Replicate i of a
batch draws its generator from SeedSequence(master_seed, spawn_key=(i,)),
and aggregation runs in replicate-index order, so results are reproducible
regardless of worker scheduling.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import network, walker
from .geometry.base import LineConfig, Vertex
from .geometry.fractal import FractalConfig
from .geometry.warmup import SingleTrapLineConfig, WarmupConfig


def replicate_rng(master_seed: int, index: int) -> np.random.Generator:
    """The documented mixing of master seed and replicate index."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(index,)))


@dataclass(frozen=True)
class ReplicateSpec:
    model: str                       # "warmup" | "fractal" | "line"
    beta: float
    start: Vertex
    t_max: int
    alpha: float = 1.0
    gamma: float = 2.0
    max_order: int = 8
    t_checkpoints: tuple = ()
    x_checkpoints: tuple = ()
    replicates: int = 1
    master_seed: int = 0
    path_split: bool = False

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ValueError("replicate count must be >= 1")
        if list(self.t_checkpoints) != sorted(self.t_checkpoints):
            raise ValueError("t_checkpoints must be sorted")
        if list(self.x_checkpoints) != sorted(self.x_checkpoints):
            raise ValueError("x_checkpoints must be sorted")


def build_config(spec: ReplicateSpec):
    if spec.model == "warmup":
        return WarmupConfig(alpha=spec.alpha)
    if spec.model == "fractal":
        return FractalConfig(gamma=spec.gamma, max_order=spec.max_order)
    if spec.model == "line":
        return LineConfig()
    raise ValueError(f"unknown model {spec.model!r}")


@dataclass
class SummaryStats:
    n: int
    mean: float
    variance: float
    stderr: float
    quantiles: dict
    minimum: float
    maximum: float

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "SummaryStats":
        n = len(values)
        if n == 0:
            raise ValueError("no values to summarize")
        mean = 0.0
        m2 = 0.0
        for i, v in enumerate(values, start=1):   # Welford, fixed order
            delta = v - mean
            mean += delta / i
            m2 += delta * (v - mean)
        var = m2 / (n - 1) if n > 1 else 0.0
        qs = np.quantile(np.asarray(values, dtype=float), [0.05, 0.25, 0.5, 0.75, 0.95])
        return cls(
            n=n, mean=mean, variance=var, stderr=math.sqrt(var / n) if n > 1 else 0.0,
            quantiles={5: float(qs[0]), 25: float(qs[1]), 50: float(qs[2]),
                       75: float(qs[3]), 95: float(qs[4])},
            minimum=float(min(values)), maximum=float(max(values)),
        )

    @property
    def median(self) -> float:
        return self.quantiles[50]


# -- censuses -------------------------------------------------------------------

@dataclass(frozen=True)
class CensusResult:
    event: str
    probability: Fraction
    domain_size: int


def census_vertical(k: int, cfg: Optional[FractalConfig] = None) -> CensusResult:
    """P(origin is the tip of an order-k branch) over one vertical period."""
    if k < 1:
        raise ValueError("k must be >= 1")
    cfg = cfg or FractalConfig(gamma=2.0, max_order=max(8, k + 2))
    period = 3 * 2**k
    hits = 0
    for y in range(1, period + 1):
        loc = cfg.locate((0, y))
        if loc.kind == "main" and loc.branch.order == k and loc.branch.tip == (0, y):
            hits += 1
    return CensusResult(
        event=f"origin is the tip of an order-{k} branch",
        probability=Fraction(hits, period), domain_size=period,
    )


def census_horizontal(
    k: int, n: int, cfg: Optional[FractalConfig] = None, max_enum: int = 5
) -> CensusResult:
    """P(origin on an order-k main part | order-k row), enumerating b(n) shifts."""
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n")
    if n > max_enum:
        raise ValueError(f"b({n}) is too large to enumerate (cap {max_enum})")
    cfg = cfg or FractalConfig(gamma=2.0, max_order=max(8, n + 2))
    if n > cfg.max_order:
        raise ValueError("n must not exceed the truncation order")
    y = 3 * 2 ** (k - 1)
    bn = cfg.b(n)
    hits = 0
    for x in range(bn):
        loc = cfg.locate((x, y))
        if loc.kind == "main" and loc.branch.order == k:
            hits += 1
    return CensusResult(
        event=f"origin on an order-{k} main part given an order-{k} row, period b({n})",
        probability=Fraction(hits, bn), domain_size=bn,
    )


def census_horizontal_target(k: int, n: int) -> Fraction:
    out = Fraction(1)
    for i in range(k, n):
        q = 3**i - 1
        out *= Fraction(q, q + 1)
    return out


# -- lemma suites ----------------------------------------------------------------

@dataclass
class CheckRow:
    lemma: str
    beta: float
    e: Optional[int]
    c: Optional[int]
    estimate: float
    stderr: float
    target: float
    verdict: str           # "pass" | "fail"

    def ok(self) -> bool:
        return self.verdict == "pass"


def _two_sided(name, beta, e, c, est, se, target) -> CheckRow:
    ok = abs(est - target) <= 3 * se if se > 0 else est == target
    return CheckRow(name, beta, e, c, est, se, target, "pass" if ok else "fail")


def _one_sided_ge(name, beta, e, c, est, se, bound) -> CheckRow:
    ok = est >= bound - 3 * se
    return CheckRow(name, beta, e, c, est, se, bound, "pass" if ok else "fail")


def one_sided_ks_dominated(
    lower: Sequence[float], upper: Sequence[float], alpha: float = 0.01
) -> tuple[float, float, bool]:
    """Test X <= Y stochastically: statistic sup_x(F_Y(x) - F_X(x)) vs threshold.

    Returns (statistic, critical value, dominated?); large positive statistic
    means some mass of X sits above Y, refuting domination.
    """
    xs = np.sort(np.asarray(lower, dtype=float))
    ys = np.sort(np.asarray(upper, dtype=float))
    grid = np.union1d(xs, ys)
    f_x = np.searchsorted(xs, grid, side="right") / len(xs)
    f_y = np.searchsorted(ys, grid, side="right") / len(ys)
    stat = float(np.max(f_y - f_x))
    n, m = len(xs), len(ys)
    crit = math.sqrt(-math.log(alpha) / 2.0) * math.sqrt((n + m) / (n * m))
    return stat, crit, stat <= crit


def lemma_suite(
    betas: Sequence[float] = (1.5, 2.0, 3.0),
    entrances: Sequence[int] = (1, 2, 5),
    samples: int = 20_000,
    tail_core_len: int = 5,
    master_seed: int = 20_250_809,
) -> list[CheckRow]:
    """Monte Carlo vs closed forms for the trap lemmas and the entry count."""
    rows: list[CheckRow] = []
    stream = 0
    for beta in betas:
        for e in entrances:
            rng = replicate_rng(master_seed, stream); stream += 1
            hits = sum(
                walker.sample_trap_visit(e, 1, beta, rng)[1] for _ in range(samples)
            )
            p_hat = hits / samples
            se = math.sqrt(p_hat * (1 - p_hat) / samples)
            rows.append(_two_sided("core_hit", beta, e, 1, p_hat, se,
                                   network.hit_core_probability(e, beta)))

            rng = replicate_rng(master_seed, stream); stream += 1
            c = tail_core_len
            thr = beta**c
            tail_hits = 0
            for _ in range(samples):
                dur, _hit = walker.sample_trap_visit(e, c, beta, rng)
                if dur >= thr:
                    tail_hits += 1
            p_hat = tail_hits / samples
            se = math.sqrt(max(p_hat * (1 - p_hat), 1e-12) / samples)
            rows.append(_one_sided_ge("core_sojourn_tail", beta, e, c, p_hat, se,
                                      network.stay_in_core_lower_bound(e, beta)))

            rng = replicate_rng(master_seed, stream); stream += 1
            ideal = [walker.sample_infinite_entrance_excursion(beta, rng)
                     for _ in range(samples)]
            finite = [walker.sample_matched_finite_excursion(e, beta, rng)
                      for _ in range(samples)]
            stat, crit, ok = one_sided_ks_dominated(finite, ideal)
            rows.append(CheckRow("exit_time_domination", beta, e, None, stat, 0.0,
                                 crit, "pass" if ok else "fail"))

        rng = replicate_rng(master_seed, stream); stream += 1
        ideal = [walker.sample_infinite_entrance_excursion(beta, rng)
                 for _ in range(samples)]
        st = SummaryStats.from_values(ideal)
        rows.append(_two_sided("mean_exit_time", beta, None, None, st.mean, st.stderr,
                               network.expected_infinite_entrance_excursion(beta)))

        rng = replicate_rng(master_seed, stream); stream += 1
        st = trap_entry_stats(beta, rng, replicates=max(2000, samples // 2))
        rows.append(_two_sided("trap_entries", beta, 1, 1, st.mean, st.stderr,
                               1.0 / (beta - 1.0)))
    return rows


def trap_entry_stats(
    beta: float, rng: np.random.Generator, replicates: int = 10_000,
    escape_columns: int = 40,
) -> SummaryStats:
    """Entries into a single trap, walking from its anchor until escape.

    The walk starts at the anchor and runs to x = anchor + escape_columns;
    the return probability from there is ~ beta^(-escape_columns), far below
    the resolution of the estimate.
    """
    cfg = SingleTrapLineConfig(d=8, e=1, c=1)
    counts = []
    for _ in range(replicates):
        rec = walker.run((8, 0), cfg, beta, t_max=10**7,
                         stop=("first_passage", 8 + escape_columns), rng=rng)
        counts.append(len(rec.trap_visits))
    return SummaryStats.from_values(counts)


# -- speed sweeps ----------------------------------------------------------------

@dataclass
class ReplicateOutcome:
    index: int
    aborted: bool
    t_ratios: dict          # t -> X_t / t
    x_ratios: dict          # x -> U(x) / x
    final_ratio: float


def _run_one(args) -> ReplicateOutcome:
    spec, index = args
    cfg = build_config(spec)
    rng = replicate_rng(spec.master_seed, index)
    try:
        rec = walker.run(
            spec.start, cfg, spec.beta, t_max=spec.t_max,
            rng=rng, t_checkpoints=spec.t_checkpoints,
            x_checkpoints=spec.x_checkpoints, path_split=spec.path_split,
        )
    except walker.WalkTruncated as exc:
        rec = exc.record
        return ReplicateOutcome(index, True, {}, {}, 0.0)
    t_ratios = {
        t: (pos[0] - spec.start[0]) / t for t, pos in rec.checkpoint_positions.items()
    }
    x_ratios = {x: u / (x - spec.start[0]) for x, u in rec.first_passage.items()
                if x > spec.start[0]}
    final = (rec.final_position[0] - spec.start[0]) / rec.final_time if rec.final_time else 0.0
    return ReplicateOutcome(index, False, t_ratios, x_ratios, final)


def run_replicates(spec: ReplicateSpec, jobs: int = 1) -> list[ReplicateOutcome]:
    args = [(spec, i) for i in range(spec.replicates)]
    if jobs == 1 or spec.replicates == 1:
        results = [_run_one(a) for a in args]
    else:
        workers = jobs if jobs > 0 else (os.cpu_count() or 1)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, args, chunksize=1))
    results.sort(key=lambda r: r.index)   # aggregation order is index order
    return results


@dataclass
class SweepCell:
    beta: float
    t: Optional[int]
    x: Optional[int]
    stats: Optional[SummaryStats]
    n_replicates: int
    n_aborted: int


def speed_sweep(spec: ReplicateSpec, betas: Sequence[float], jobs: int = 1) -> list[SweepCell]:
    cells: list[SweepCell] = []
    for beta in betas:
        bspec = ReplicateSpec(**{**spec.__dict__, "beta": beta})
        outs = run_replicates(bspec, jobs=jobs)
        aborted = sum(o.aborted for o in outs)
        live = [o for o in outs if not o.aborted]
        for t in spec.t_checkpoints:
            vals = [o.t_ratios[t] for o in live if t in o.t_ratios]
            cells.append(SweepCell(beta, t, None,
                                   SummaryStats.from_values(vals) if vals else None,
                                   len(outs), aborted))
        for x in spec.x_checkpoints:
            vals = [o.x_ratios[x] for o in live if x in o.x_ratios]
            cells.append(SweepCell(beta, None, x,
                                   SummaryStats.from_values(vals) if vals else None,
                                   len(outs), aborted))
    return cells


def sweep_to_csv(cells: Sequence[SweepCell], master_seed: int) -> str:
    lines = [f"# master_seed={master_seed}",
             "beta,t,checkpoint_x,stat,value,stderr,n_replicates,n_aborted"]
    for c in cells:
        t = "" if c.t is None else c.t
        x = "" if c.x is None else c.x
        if c.stats is None:
            lines.append(f"{c.beta:.12g},{t},{x},missing,,,{c.n_replicates},{c.n_aborted}")
            continue
        rows = [("mean", c.stats.mean, f"{c.stats.stderr:.12g}")]
        rows += [(f"q{q:02d}", c.stats.quantiles[q], "") for q in (5, 25, 50, 75, 95)]
        rows += [("min", c.stats.minimum, ""), ("max", c.stats.maximum, "")]
        for name, val, se in rows:
            lines.append(
                f"{c.beta:.12g},{t},{x},{name},{val:.12g},{se},{c.n_replicates},{c.n_aborted}"
            )
    return "\n".join(lines) + "\n"


def lemma_rows_to_csv(rows: Sequence[CheckRow], master_seed: int) -> str:
    lines = [f"# master_seed={master_seed}",
             "lemma,beta,e,c,estimate,stderr,target,verdict"]
    for r in rows:
        e = "" if r.e is None else r.e
        c = "" if r.c is None else r.c
        lines.append(
            f"{r.lemma},{r.beta:.12g},{e},{c},{r.estimate:.12g},"
            f"{r.stderr:.12g},{r.target:.12g},{r.verdict}"
        )
    return "\n".join(lines) + "\n"


# -- branch-level checks -----------------------------------------------------------

def sample_qualifying_vertices(
    cfg: FractalConfig, count: int, rng: np.random.Generator,
    orders: Optional[Sequence[int]] = None, line_span: int = 99,
) -> list[tuple[Vertex, int]]:
    """Vertices on order-k main parts at least 3*2^(k-1) left of their corner."""
    orders = list(orders or range(1, min(5, cfg.max_order - 1) + 1))
    out: list[tuple[Vertex, int]] = []
    while len(out) < count:
        k = int(rng.choice(orders))
        s = 3 * 2 ** (k - 1)
        l = 2 * int(rng.integers(0, line_span // 2 + 1)) + 1
        if rng.random() < 0.5:
            l = -l
        line = s * l
        span = cfg.b(k + 1) if k + 1 <= cfg.max_order else cfg.b(cfg.max_order)
        x = int(rng.integers(0, span))
        br = cfg.branch_at(line, x)
        if br is None or br.truncated:
            continue
        margin = br.corner[0] - x
        if margin < s:
            continue
        out.append(((x, line), k))
    return out


def lemma42_bound_check(
    cfg: FractalConfig, bias: float, sample_count: int = 100,
    master_seed: int = 424_242, horizon_slack: int = 60,
) -> list[CheckRow]:
    """Escape-probability interval lower bounds vs (beta-1)/(2(3+beta))."""
    rng = replicate_rng(master_seed, 0)
    bound = (bias - 1.0) / (2.0 * (3.0 + bias))
    rows = []
    worst = math.inf
    samples = sample_qualifying_vertices(cfg, sample_count, rng)
    for v, k in samples:
        iv = network.escape_probability(v, cfg, bias, horizon=v[0] + horizon_slack)
        worst = min(worst, iv.lo)
        if iv.lo < bound:
            rows.append(CheckRow("escape_lower_bound", bias, None, None,
                                 iv.lo, 0.0, bound, "fail"))
    rows.append(CheckRow("escape_lower_bound_worst", bias, None, None, worst, 0.0,
                         bound, "pass" if worst >= bound else "fail"))
    return rows


def return_time_check(
    bias: float, orders: Sequence[int] = (2, 3), samples: int = 4000,
    gamma: float = 2.0, master_seed: int = 77_000,
) -> list[CheckRow]:
    """Lemma-style excursion bounds plus the stationary return-time identity."""
    cfg = FractalConfig(gamma=gamma, max_order=max(6, max(orders) + 2))
    c_bound = network.cone_return_time_bound(bias)
    rows: list[CheckRow] = []
    stream = 0
    for k in orders:
        line = 3 * 2 ** (k - 1)
        br = cfg.branch_at(line, 0)
        corner = br.corner
        into = (corner[0] - 1, corner[1])
        region = network.finite_region_edges(cfg, corner, into)
        sub = ExplicitConfig(region)

        rng = replicate_rng(master_seed, stream); stream += 1
        durations = []
        for _ in range(samples):
            rec = walker.run(corner, sub, bias, t_max=10**7, stop=("first_return",), rng=rng)
            durations.append(rec.final_time)
        st = SummaryStats.from_values(durations)
        rows.append(_one_sided_le("corner_excursion", bias, k, st.mean, st.stderr, c_bound))
        exact = network.stationary_return_time(region, bias, corner)
        rows.append(_two_sided("corner_return_identity", bias, k, None,
                               st.mean, st.stderr, exact))
        if st.minimum < 2:
            rows.append(CheckRow("excursion_min", bias, k, None, st.minimum, 0.0, 2, "fail"))

        root = br.root
        first = (root[0], root[1] - 1) if br.abutment_up else (root[0], root[1] + 1)
        region_b = network.finite_region_edges(cfg, root, first)
        sub_b = ExplicitConfig(region_b)
        rng = replicate_rng(master_seed, stream); stream += 1
        durations = []
        for _ in range(samples):
            rec = walker.run(root, sub_b, bias, t_max=10**7, stop=("first_return",), rng=rng)
            durations.append(rec.final_time)
        st_b = SummaryStats.from_values(durations)
        rows.append(_one_sided_le("root_excursion", bias, k, st_b.mean, st_b.stderr,
                                  3 * 2**k + c_bound))
    return rows


def _one_sided_le(name, beta, k, est, se, bound) -> CheckRow:
    ok = est <= bound + 3 * se
    return CheckRow(name, beta, k, None, est, se, bound, "pass" if ok else "fail")


class ExplicitConfig:
    """Adjacency oracle backed by an explicit finite edge list."""

    def __init__(self, edges):
        adj: dict[Vertex, set] = {}
        for a, b in edges:
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)
        self._adj = {v: tuple(sorted(us)) for v, us in adj.items()}

    def neighbors(self, v: Vertex) -> tuple[Vertex, ...]:
        return self._adj.get(v, ())

    def vertex_meta(self, v: Vertex):
        return None
