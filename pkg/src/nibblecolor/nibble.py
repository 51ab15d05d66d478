"""Offline two-phase nibble edge coloring.

Phase one runs t_eps - 1 rounds; each round samples every live edge
independently with probability eps, lets sampled edges draw a tentative color
uniformly from their palette (colors of [C] not tentatively taken by incident
edges in earlier rounds), finalizes collision-free draws, and permanently
blocks every drawn color at both endpoints - including the colors of failed
edges.  Phase two colors the failed and never-sampled edges greedily in a
separate band above C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, EdgeColoring, NULL_COLOR


class InvalidEpsilon(ValueError):
    pass


class DegreeOutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class Params:
    """Derived run parameters.

    gamma[i-1] is the round-i relative deviation envelope:
    gamma_1 = K*eps^2, gamma_{i+1} = (1 + K*eps) * gamma_i + K*eps^2.
    """
    n: int
    delta: int
    epsilon: float
    K: int
    t_eps: int
    phase1_colors: int          # C = ceil((1 + eps^2) * delta)
    gamma: tuple[float, ...]    # gamma_1 .. gamma_{t_eps}
    regime_ok: bool             # whether 1e-4 >= eps >= 10*(ln n / delta)^(1/6)

    @property
    def rounds(self) -> int:
        return self.t_eps - 1


def regime_holds(n: int, delta: int, epsilon: float) -> bool:
    if delta <= 0 or n < 2:
        return False
    lower = 10.0 * (math.log(n) / delta) ** (1.0 / 6.0)
    return lower <= epsilon <= 1e-4


def derive_params(n: int, delta: int, epsilon: float, K: int = 48,
                  rounds: int | None = None) -> Params:
    """Derive t_eps, the phase-one color count and the gamma envelope.

    t_eps = floor(ln(1/eps) / (2*K*eps)).  Parameter sets where this is 0
    are rejected unless an explicit ``rounds`` override is given (the
    harness uses overrides to probe round-level statistics in regimes where
    the formula collapses; epsilon=0 is allowed only with an override and
    makes phase one a no-op).
    """
    if delta < 1:
        raise ValueError("delta must be >= 1")
    if K < 1:
        raise ValueError("K must be >= 1")
    if rounds is None:
        if not 0.0 < epsilon < 1.0:
            raise InvalidEpsilon(f"epsilon={epsilon} outside (0, 1)")
        t_eps = int(math.floor(math.log(1.0 / epsilon) / (2.0 * K * epsilon)))
        if t_eps < 1:
            raise InvalidEpsilon(
                f"epsilon={epsilon} too large for K={K}: t_eps would be 0")
    else:
        if rounds < 0:
            raise ValueError("rounds override must be >= 0")
        if not 0.0 <= epsilon < 1.0:
            raise InvalidEpsilon(f"epsilon={epsilon} outside [0, 1)")
        t_eps = rounds + 1
    C = math.ceil((1.0 + epsilon ** 2) * delta)
    gammas = []
    g = K * epsilon ** 2
    for _ in range(t_eps):
        gammas.append(g)
        g = (1.0 + K * epsilon) * g + K * epsilon ** 2
    return Params(n=n, delta=delta, epsilon=epsilon, K=K, t_eps=t_eps,
                  phase1_colors=C, gamma=tuple(gammas),
                  regime_ok=regime_holds(n, delta, epsilon))


class RoundState:
    """Mutable phase-one state shared by the per-round operations.

    ``blocked[v, c-1]`` is True once any edge at v tentatively drew color c in
    a round before the current one (failed edges included).  ``live`` is E_i
    in ascending edge-id order; ``tentative`` maps sampled edge ids to their
    draw (NULL_COLOR for empty palettes).
    """

    def __init__(self, g: Graph, params: Params):
        self.g = g
        self.params = params
        self.C = params.phase1_colors
        self.round_index = 1
        self.live = np.array([eid for eid, _, _ in g.edges()], dtype=np.int64)
        self.endpoints = np.zeros((int(self.live.max()) + 1 if len(self.live)
                                   else 1, 2), dtype=np.int64)
        for eid, u, v in g.edges():
            self.endpoints[eid] = (u, v)
        self.blocked = np.zeros((g.node_count, self.C), dtype=bool)
        self.tentative: dict[int, int] = {}
        self.final: dict[int, int] = {}
        self.sampled: np.ndarray | None = None
        self.failed_by_round: list[list[int]] = []
        self.sampled_by_round: list[np.ndarray] = []

    def node_palette(self, v: int) -> np.ndarray:
        return np.flatnonzero(~self.blocked[v]) + 1


def sample_round(state: RoundState, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """Draw S_i: each live edge kept independently with probability epsilon.

    Consumes exactly one uniform draw per live edge, in ascending edge-id
    order; sets E_{i+1} to the complement.
    """
    draws = rng.random(len(state.live))
    mask = draws < epsilon
    sampled = state.live[mask]
    state.sampled = sampled
    state.live = state.live[~mask]
    state.sampled_by_round.append(sampled)
    return sampled


def compute_palette(state: RoundState, e: tuple[int, int], i: int | None = None) -> np.ndarray:
    """Palette of edge e for the current round: [C] minus every color
    tentatively drawn at either endpoint in earlier rounds, as an ascending
    array (indexable for uniform sampling)."""
    u, v = e
    return np.flatnonzero(~(state.blocked[u] | state.blocked[v])) + 1


def tentative_color(palette: np.ndarray, rng: np.random.Generator) -> int:
    """Uniform draw from a palette; NULL_COLOR when it is empty."""
    k = len(palette)
    if k == 0:
        return NULL_COLOR
    return int(palette[int(rng.random() * k)])


def resolve_failures(state: RoundState, i: int | None = None) -> list[int]:
    """F_i: sampled edges whose draw was NULL or matched a same-round incident
    draw.  Survivors get their tentative color as final; every non-NULL draw
    (failed or not) is then blocked at both endpoints for later rounds."""
    assert state.sampled is not None
    ids = state.sampled.astype(np.int64)
    tents = np.fromiter((state.tentative[int(e)] for e in ids),
                        dtype=np.int64, count=len(ids))
    us = state.endpoints[ids, 0]
    vs = state.endpoints[ids, 1]
    nn = tents != NULL_COLOR
    stride = state.C + 1
    keys_u = us[nn] * stride + tents[nn]
    keys_v = vs[nn] * stride + tents[nn]
    uniq, cnts = np.unique(np.concatenate([keys_u, keys_v]),
                           return_counts=True)
    conflicted = uniq[cnts >= 2]
    bad = np.isin(keys_u, conflicted) | np.isin(keys_v, conflicted)
    failed_mask = ~nn
    failed_mask[np.flatnonzero(nn)[bad]] = True
    ok = ~failed_mask
    state.final.update(zip(ids[ok].tolist(), tents[ok].tolist()))
    state.blocked[us[nn], tents[nn] - 1] = True
    state.blocked[vs[nn], tents[nn] - 1] = True
    failed = ids[failed_mask].tolist()
    state.failed_by_round.append(failed)
    state.sampled = None
    state.round_index += 1
    return failed


@dataclass
class RoundTrace:
    """Per-round statistics consumed by the verification harness."""
    i: int
    live_count: int
    sampled_count: int
    failed_count: int
    palette_sizes: np.ndarray          # |P_i(e)| over sampled live edges
    cdeg_samples: np.ndarray           # |N_{i,c}(v)| over sampled (v, c) pairs
    sampled_fractions: np.ndarray      # |S_i cap N_i(v)| / |N_i(v)| per node
    failed_fractions: np.ndarray       # |F_i cap N_i(v)| / |S_i cap N_i(v)|
    failed_degree_max: int             # Delta(G_{F_i})

    def palette_stats(self) -> tuple[float, float, float]:
        p = self.palette_sizes
        if len(p) == 0:
            return (0.0, 0.0, 0.0)
        return float(p.min()), float(p.max()), float(p.mean())


@dataclass
class PhaseOneResult:
    coloring: EdgeColoring           # final colors assigned in phase one
    tentative: dict[int, int]
    failed_edges: list[int]          # union of F_i
    tail_edges: list[int]            # E_{t_eps}: never sampled
    trace: list[RoundTrace]
    state: RoundState


def _collect_trace(state: RoundState, g: Graph, i: int,
                   live_before: np.ndarray, sampled: np.ndarray,
                   failed: list[int], budget: int,
                   trace_rng: np.random.Generator) -> RoundTrace:
    live_set = set(int(x) for x in live_before)
    sampled_set = set(int(x) for x in sampled)
    failed_set = set(failed)

    # palette sizes over a sample of live edges (palettes as of round start)
    if len(live_before) > budget:
        idx = trace_rng.choice(len(live_before), size=budget, replace=False)
        pal_edges = live_before[np.sort(idx)]
    else:
        pal_edges = live_before
    pal_sizes = np.array([
        len(compute_palette(state, g.endpoints(int(eid)))) for eid in pal_edges
    ], dtype=np.int64)

    # per-node round-i degree, sampled and failed counts
    n = g.node_count
    ndeg = np.zeros(n, dtype=np.int64)
    nsamp = np.zeros(n, dtype=np.int64)
    nfail = np.zeros(n, dtype=np.int64)
    for eid in live_before:
        u, v = g.endpoints(int(eid))
        ndeg[u] += 1
        ndeg[v] += 1
    for eid in sampled:
        u, v = g.endpoints(int(eid))
        nsamp[u] += 1
        nsamp[v] += 1
    for eid in failed:
        u, v = g.endpoints(eid)
        nfail[u] += 1
        nfail[v] += 1
    with np.errstate(invalid="ignore", divide="ignore"):
        sampled_frac = np.where(ndeg > 0, nsamp / np.maximum(ndeg, 1), np.nan)
        failed_frac = np.where(nsamp > 0, nfail / np.maximum(nsamp, 1), np.nan)
    sampled_frac = sampled_frac[ndeg > 0]
    failed_frac = failed_frac[nsamp > 0]

    # c-degrees |N_{i,c}(v)| over sampled (v, c) pairs
    nodes_with_live = np.flatnonzero(ndeg > 0)
    cdeg_vals: list[int] = []
    if len(nodes_with_live) > 0:
        n_nodes = min(len(nodes_with_live), max(1, int(math.isqrt(budget))))
        n_cols = max(1, budget // max(n_nodes, 1))
        n_cols = min(n_cols, state.C)
        pick_nodes = trace_rng.choice(nodes_with_live, size=n_nodes, replace=False)
        for v in pick_nodes:
            v = int(v)
            nbrs = [u for u, eid in g.neighbors(v) if eid in live_set]
            if not nbrs:
                continue
            cols = trace_rng.choice(state.C, size=min(n_cols, state.C),
                                    replace=False)
            sub = ~state.blocked[np.array(nbrs, dtype=np.int64)][:, cols]
            cdeg_vals.extend(int(x) for x in sub.sum(axis=0))
    cdeg = np.array(cdeg_vals, dtype=np.int64)

    return RoundTrace(
        i=i, live_count=len(live_before), sampled_count=len(sampled),
        failed_count=len(failed), palette_sizes=pal_sizes, cdeg_samples=cdeg,
        sampled_fractions=sampled_frac, failed_fractions=failed_frac,
        failed_degree_max=int(nfail.max()) if n else 0)


def run_phase_one(g: Graph, params: Params, rng: np.random.Generator,
                  strict: bool = False, trace: bool = False,
                  trace_budget: int = 10_000) -> PhaseOneResult:
    """Run rounds 1 .. t_eps - 1 on g.

    In strict mode every node degree must lie in [(1-eps^2)D, (1+eps^2)D].
    With ``trace=True`` per-round statistics are sampled with an RNG stream
    spawned from ``rng``, so traced and untraced runs color identically.
    """
    if strict:
        lo = (1.0 - params.epsilon ** 2) * params.delta
        hi = (1.0 + params.epsilon ** 2) * params.delta
        for v in range(g.node_count):
            if not lo <= g.degree[v] <= hi:
                raise DegreeOutOfRange(
                    f"node {v} degree {g.degree[v]} outside [{lo:.2f}, {hi:.2f}]")
    alg_rng, trace_rng = rng.spawn(2)
    state = RoundState(g, params)
    endpoints = state.endpoints
    traces: list[RoundTrace] = []
    for i in range(1, params.t_eps):
        live_before = state.live.copy()
        sampled = sample_round(state, params.epsilon, alg_rng)
        draws = alg_rng.random(len(sampled))
        # batched palette materialization: identical to per-edge
        # compute_palette + tentative_color, one uniform draw per edge
        for lo in range(0, len(sampled), 100_000):
            chunk = sampled[lo:lo + 100_000]
            rr = draws[lo:lo + 100_000]
            us = endpoints[chunk, 0]
            vs = endpoints[chunk, 1]
            avail = ~(state.blocked[us] | state.blocked[vs])
            L = avail.sum(axis=1)
            idx = (rr * L).astype(np.int64)
            cs = np.cumsum(avail, axis=1, dtype=np.int32)
            colors = np.argmax(cs == (idx + 1)[:, None], axis=1) + 1
            colors[L == 0] = NULL_COLOR
            for eid, c in zip(chunk.tolist(), colors.tolist()):
                state.tentative[eid] = c
        failed = resolve_failures(state)
        if trace:
            traces.append(_collect_trace(state, g, i, live_before, sampled,
                                         failed, trace_budget, trace_rng))
    coloring = EdgeColoring(state.final)
    failed_all = [eid for fs in state.failed_by_round for eid in fs]
    tail = [int(x) for x in state.live]
    return PhaseOneResult(coloring=coloring, tentative=dict(state.tentative),
                          failed_edges=failed_all, tail_edges=tail,
                          trace=traces, state=state)


def run_phase_two(g: Graph, coloring: EdgeColoring, uncolored: list[int],
                  C: int) -> EdgeColoring:
    """First-fit the uncolored edges with colors C+1, C+2, ... in ascending
    edge-id order.  Stays within C + 2*D' - 1 where D' is the max degree of
    the uncolored subgraph."""
    band: dict[int, int] = {}
    for eid in sorted(uncolored):
        u, v = g.endpoints(eid)
        mask = band.get(u, 0) | band.get(v, 0)
        inv = ~mask
        low = inv & -inv
        c = C + low.bit_length()
        band[u] = band.get(u, 0) | low
        band[v] = band.get(v, 0) | low
        coloring.set(eid, c)
    return coloring


@dataclass
class BasicMetrics:
    n: int
    delta: int
    epsilon: float
    K: int
    C: int
    t_eps: int
    m: int
    colors_used: int
    max_color: int
    phase1_colored: int
    uncolored_count: int             # |G_F| + |G_tail| fed to phase two
    uncolored_max_degree: int        # Delta(G_tail cup G_F)
    tentative_band_max: int
    greedy_band_min: int             # 0 when phase two colored nothing
    greedy_band_max: int
    failed_per_round: list[int] = field(default_factory=list)
    sampled_per_round: list[int] = field(default_factory=list)
    failure_fractions: list[float] = field(default_factory=list)


def run_basic(g: Graph, params: Params, rng: np.random.Generator,
              strict: bool = False, trace: bool = False,
              trace_budget: int = 10_000) -> tuple[EdgeColoring, BasicMetrics, PhaseOneResult]:
    """Both phases; returns the complete coloring plus metrics and the
    phase-one result (for the harness trace)."""
    p1 = run_phase_one(g, params, rng, strict=strict, trace=trace,
                       trace_budget=trace_budget)
    uncolored = p1.failed_edges + p1.tail_edges
    udeg = np.zeros(g.node_count, dtype=np.int64)
    for eid in uncolored:
        u, v = g.endpoints(eid)
        udeg[u] += 1
        udeg[v] += 1
    phase1_colored = len(p1.coloring.color_of)
    coloring = run_phase_two(g, p1.coloring, uncolored, params.phase1_colors)
    band_colors = [coloring.get(eid) for eid in uncolored]
    tent_colors = [c for eid, c in coloring.color_of.items()
                   if c <= params.phase1_colors]
    metrics = BasicMetrics(
        n=g.node_count, delta=params.delta, epsilon=params.epsilon,
        K=params.K, C=params.phase1_colors, t_eps=params.t_eps,
        m=g.edge_count,
        colors_used=coloring.distinct_colors(),
        max_color=coloring.max_color(),
        phase1_colored=phase1_colored,
        uncolored_count=len(uncolored),
        uncolored_max_degree=int(udeg.max()) if g.node_count else 0,
        tentative_band_max=max(tent_colors, default=0),
        greedy_band_min=min(band_colors, default=0),
        greedy_band_max=max(band_colors, default=0),
        failed_per_round=[len(f) for f in p1.state.failed_by_round],
        sampled_per_round=[len(s) for s in p1.state.sampled_by_round],
        failure_fractions=[
            len(f) / len(s) if len(s) else 0.0
            for f, s in zip(p1.state.failed_by_round, p1.state.sampled_by_round)
        ],
    )
    return coloring, metrics, p1
