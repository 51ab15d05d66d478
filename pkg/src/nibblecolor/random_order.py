"""Random-order online edge coloring.

Two algorithms: a warm-up for near-regular graphs with known edge count m
(rounds realized as binomial prefixes of the stream), and a general version
for arbitrary graphs with unknown m that estimates the stream length from a
greedy prefix, pads the middle section to near-regularity with a dummy-clique
gadget, and finishes greedily.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import EdgeColoring, NULL_COLOR
from .nibble import Params, derive_params


class StreamLengthMismatch(ValueError):
    pass


def binomial_prefix_partition(total: int, epsilon: float, rounds: int,
                              rng: np.random.Generator) -> list[int]:
    """Cumulative cut points b_1 <= ... <= b_rounds with increments
    X_i ~ Bin(total - b_{i-1}, epsilon).

    Taking stream prefix (b_{i-1}, b_i] as round i makes every remaining
    element land in round i independently with probability epsilon.
    """
    if total < 0:
        raise ValueError("total must be >= 0")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    bounds = []
    prev = 0
    for _ in range(rounds):
        prev += int(rng.binomial(total - prev, epsilon))
        bounds.append(prev)
    return bounds


@dataclass
class Decision:
    """One irrevocable online choice, kept for replay validation."""
    index: int            # 0-based arrival index
    u: int
    v: int
    round: int            # 0 = past all rounds (tail)
    tentative: int        # NULL_COLOR when palette empty / tail edge
    final: int
    went_greedy: bool


class WarmupColorer:
    """Online near-regular colorer with known m.

    Round membership comes from precomputed binomial prefix boundaries.  An
    arriving round-i edge draws a tentative color uniformly from the colors
    of [C] not drawn by its neighbors in rounds j < i; it keeps the draw
    unless it was NULL or some previously-arrived same-round neighbor drew
    the same color, in which case it is colored first-fit above C.  Either
    way a non-NULL draw permanently blocks that color at both endpoints for
    later rounds.  Tail edges (past the last boundary) go straight to the
    first-fit band above C.
    """

    def __init__(self, n: int, delta: int, m: int, epsilon: float, K: int = 48,
                 rng: np.random.Generator | None = None,
                 params: Params | None = None,
                 boundaries: list[int] | None = None,
                 log_decisions: bool = False):
        self.n = n
        self.delta = delta
        self.m = m
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.params = params if params is not None else derive_params(
            n, delta, epsilon, K)
        self.C = self.params.phase1_colors
        if boundaries is None:
            boundaries = binomial_prefix_partition(
                m, self.params.epsilon, max(self.params.rounds, 1), self.rng) \
                if self.params.rounds >= 1 else []
        self.boundaries = boundaries
        self.blocked = np.zeros((n, self.C), dtype=bool)
        self._round_tent: list[dict[int, bool]] = [dict() for _ in range(n)]
        self._pending: list[tuple[int, int]] = []
        self.band: dict[int, int] = {}
        self._round = 0          # index into boundaries; round number - 1
        self.arrived = 0
        self.degree = np.zeros(n, dtype=np.int64)
        self.decisions: list[Decision] | None = [] if log_decisions else None
        self.tentative_band_max = 0
        self.greedy_band_min = 0
        self.greedy_band_max = 0
        self.greedy_count = 0

    def _roll_round(self, position: int) -> int:
        """Advance the current round for a 1-based stream position; returns
        the 1-based round of this position, or 0 for the tail."""
        while (self._round < len(self.boundaries)
               and position > self.boundaries[self._round]):
            for x, c in self._pending:
                self.blocked[x, c - 1] = True
            self._pending.clear()
            self._round_tent = [dict() for _ in range(self.n)]
            self._round += 1
        if self._round >= len(self.boundaries):
            return 0
        return self._round + 1

    def _band_color(self, u: int, v: int) -> int:
        mask = self.band.get(u, 0) | self.band.get(v, 0)
        inv = ~mask
        low = inv & -inv
        c = self.C + low.bit_length()
        self.band[u] = self.band.get(u, 0) | low
        self.band[v] = self.band.get(v, 0) | low
        self.greedy_count += 1
        if self.greedy_band_min == 0 or c < self.greedy_band_min:
            self.greedy_band_min = c
        self.greedy_band_max = max(self.greedy_band_max, c)
        return c

    def process(self, u: int, v: int) -> int:
        if self.arrived >= self.m:
            raise StreamLengthMismatch(f"more than m={self.m} arrivals")
        self.arrived += 1
        self.degree[u] += 1
        self.degree[v] += 1
        rnd = self._roll_round(self.arrived)
        tent = NULL_COLOR
        went_greedy = False
        if rnd > 0:
            pal = np.flatnonzero(~(self.blocked[u] | self.blocked[v])) + 1
            if len(pal) > 0:
                tent = int(pal[int(self.rng.random() * len(pal))])
            collide = (tent == NULL_COLOR
                       or tent in self._round_tent[u]
                       or tent in self._round_tent[v])
            if tent != NULL_COLOR:
                self._round_tent[u][tent] = True
                self._round_tent[v][tent] = True
                self._pending.append((u, tent))
                self._pending.append((v, tent))
            if collide:
                final = self._band_color(u, v)
                went_greedy = True
            else:
                final = tent
                self.tentative_band_max = max(self.tentative_band_max, final)
        else:
            final = self._band_color(u, v)
            went_greedy = True
        if self.decisions is not None:
            self.decisions.append(Decision(
                index=self.arrived - 1, u=u, v=v, round=rnd, tentative=tent,
                final=final, went_greedy=went_greedy))
        return final

    def finish(self) -> None:
        if self.arrived != self.m:
            raise StreamLengthMismatch(
                f"stream ended after {self.arrived} of m={self.m} edges")


@dataclass
class WarmupMetrics:
    n: int
    delta: int
    epsilon: float
    K: int
    C: int
    m: int
    colors_used: int
    max_color: int
    tentative_colors_used: int   # distinct colors <= C
    greedy_colors_used: int      # distinct colors > C
    tentative_band_max: int
    greedy_band_min: int
    greedy_band_max: int
    greedy_count: int            # edges that went to the fallback band
    near_regular: bool           # final degrees within (1 +- eps^2) * delta


def run_warmup(stream: list[tuple[int, int]], n: int, delta: int, m: int,
               epsilon: float, K: int = 48,
               rng: np.random.Generator | None = None,
               log_decisions: bool = False
               ) -> tuple[EdgeColoring, WarmupMetrics, list[Decision] | None]:
    """Color a full random-order stream with the warm-up algorithm.

    Edge ids in the returned coloring are arrival indices.  Raises
    StreamLengthMismatch when len(stream) != m.
    """
    if len(stream) != m:
        raise StreamLengthMismatch(f"stream has {len(stream)} edges, m={m}")
    colorer = WarmupColorer(n, delta, m, epsilon, K, rng=rng,
                            log_decisions=log_decisions)
    coloring = EdgeColoring()
    for idx, (u, v) in enumerate(stream):
        coloring.set(idx, colorer.process(u, v))
    colorer.finish()
    eps = colorer.params.epsilon
    lo, hi = (1 - eps ** 2) * delta, (1 + eps ** 2) * delta
    near_regular = all(lo <= d <= hi for d in colorer.degree)
    distinct = set(coloring.color_of.values())
    metrics = WarmupMetrics(
        n=n, delta=delta, epsilon=eps, K=K, C=colorer.C, m=m,
        colors_used=coloring.distinct_colors(), max_color=coloring.max_color(),
        tentative_colors_used=sum(1 for c in distinct if c <= colorer.C),
        greedy_colors_used=sum(1 for c in distinct if c > colorer.C),
        tentative_band_max=colorer.tentative_band_max,
        greedy_band_min=colorer.greedy_band_min,
        greedy_band_max=colorer.greedy_band_max,
        greedy_count=colorer.greedy_count,
        near_regular=near_regular)
    return coloring, metrics, colorer.decisions


# ---------------------------------------------------------------------------
# General algorithm: estimate, pad, finish.
# ---------------------------------------------------------------------------

@dataclass
class EstimateResult:
    T: int                           # edges consumed by the estimation step
    dT: np.ndarray                   # degree snapshot after T edges
    m_prime: int                     # floor(T / (eps * (1 + eps^2)))
    delta1: int                      # largest color used on the prefix
    prefix_colors: list[int]
    stream_exhausted: bool


def estimate_stage(stream: list[tuple[int, int]], start: int, n: int,
                   epsilon: float, delta: int) -> EstimateResult:
    """Greedily color stream edges from ``start`` until some node's running
    degree reaches ceil(eps * delta), or the stream ends."""
    trigger = math.ceil(epsilon * delta)
    used: dict[int, int] = {}
    deg = np.zeros(n, dtype=np.int64)
    colors: list[int] = []
    delta1 = 0
    T = 0
    exhausted = True
    for u, v in stream[start:]:
        mask = used.get(u, 0) | used.get(v, 0)
        inv = ~mask
        low = inv & -inv
        c = low.bit_length()
        used[u] = used.get(u, 0) | low
        used[v] = used.get(v, 0) | low
        colors.append(c)
        delta1 = max(delta1, c)
        deg[u] += 1
        deg[v] += 1
        T += 1
        if trigger > 0 and (deg[u] >= trigger or deg[v] >= trigger):
            exhausted = False
            break
    m_prime = int(math.floor(T / (epsilon * (1.0 + epsilon ** 2)))) if T else 0
    return EstimateResult(T=T, dT=deg, m_prime=m_prime, delta1=delta1,
                          prefix_colors=colors, stream_exhausted=exhausted)


def build_dummy_gadget(dT: np.ndarray, epsilon: float, delta: int,
                       n: int) -> tuple[list[tuple[int, int]], int]:
    """Dummy part of the padded graph H.

    Per real node v: delta dummy nodes (ids n + v*delta + k) forming a
    delta-clique, plus round(max(0, delta - (1/eps - 1) * dT[v])) spoke edges
    from v to its lowest-indexed dummy nodes (clamped to [0, delta]).
    Returns (dummy edge list, total node count of H).
    """
    dummy: list[tuple[int, int]] = []
    for v in range(n):
        base = n + v * delta
        for a in range(delta):
            for b in range(a + 1, delta):
                dummy.append((base + a, base + b))
        deficit = delta - (1.0 / epsilon - 1.0) * float(dT[v])
        k = int(round(deficit))
        k = min(max(k, 0), delta)
        for j in range(k):
            dummy.append((v, base + j))
    return dummy, n + n * delta


def interleave(reals: list, dummies: list, rng: np.random.Generator):
    """Yield ('real', x) / ('dummy', x) merging the ordered reals with the
    dummy pool: each step picks a uniformly random remaining dummy with
    probability |D'| / (|R'| + |D'|), else the next real.  The result is a
    uniform interleaving given the reals' internal order."""
    pool = list(dummies)
    r = 0
    while r < len(reals) or pool:
        nd = len(pool)
        nr = len(reals) - r
        if nd > 0 and rng.random() < nd / (nd + nr):
            j = int(rng.random() * nd)
            pool[j], pool[-1] = pool[-1], pool[j]
            yield "dummy", pool.pop()
        else:
            yield "real", reals[r]
            r += 1


@dataclass
class GeneralMetrics:
    n: int
    delta: int
    epsilon: float
    K: int
    m: int
    T: int
    m_prime: int
    delta1: int
    delta2: int
    delta3: int
    colors_used: int
    max_color: int
    dummy_edges: int
    step2_real: int
    step3_edges: int
    degenerate: bool          # stream ended inside the estimation step
    m_prime_capped: bool      # planned m' exceeded the true stream length


def run_general(stream: list[tuple[int, int]], n: int, delta: int,
                epsilon: float, K: int = 48,
                rng: np.random.Generator | None = None
                ) -> tuple[EdgeColoring, GeneralMetrics]:
    """Three-step general-graph algorithm; knows n and delta but not m.

    Step I greedily colors a prefix until some node reaches ceil(eps*delta)
    (colors 1..delta1).  Step II runs the warm-up algorithm with parameter
    2*eps on the gadget-padded graph H over the next m'-T real edges
    interleaved with the dummy edges, shifting real colors by delta1.  Step
    III first-fits the remainder above the largest Step-II color.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    m = len(stream)
    coloring = EdgeColoring()

    est = estimate_stage(stream, 0, n, epsilon, delta)
    for idx, c in enumerate(est.prefix_colors):
        coloring.set(idx, c)
    delta1 = est.delta1
    if est.stream_exhausted:
        metrics = GeneralMetrics(
            n=n, delta=delta, epsilon=epsilon, K=K, m=m, T=est.T,
            m_prime=est.m_prime, delta1=delta1, delta2=delta1, delta3=delta1,
            colors_used=coloring.distinct_colors(),
            max_color=coloring.max_color(), dummy_edges=0, step2_real=0,
            step3_edges=0, degenerate=True, m_prime_capped=False)
        return coloring, metrics

    dummies, h_nodes = build_dummy_gadget(est.dT, epsilon, delta, n)
    planned_real = max(est.m_prime - est.T, 0)
    reals = list(range(est.T, min(est.T + planned_real, m)))  # arrival indices
    capped = est.T + planned_real > m
    m_h = planned_real + len(dummies)

    eps2 = 2.0 * epsilon
    warm = WarmupColorer(h_nodes, delta, m_h, eps2, K,
                         rng=rng, params=derive_params(h_nodes, delta, eps2, K))
    delta2 = delta1
    step2_real = 0
    for kind, item in interleave(reals, dummies, rng):
        if kind == "dummy":
            warm.process(item[0], item[1])
        else:
            u, v = stream[item]
            chi = warm.process(u, v)
            c = chi + delta1
            coloring.set(item, c)
            delta2 = max(delta2, c)
            step2_real += 1

    used: dict[int, int] = {}
    delta3 = delta2
    step3 = 0
    for idx in range(est.T + step2_real, m):
        u, v = stream[idx]
        mask = used.get(u, 0) | used.get(v, 0)
        inv = ~mask
        low = inv & -inv
        c = delta2 + low.bit_length()
        used[u] = used.get(u, 0) | low
        used[v] = used.get(v, 0) | low
        coloring.set(idx, c)
        delta3 = max(delta3, c)
        step3 += 1

    metrics = GeneralMetrics(
        n=n, delta=delta, epsilon=epsilon, K=K, m=m, T=est.T,
        m_prime=est.m_prime, delta1=delta1, delta2=delta2, delta3=delta3,
        colors_used=coloring.distinct_colors(), max_color=coloring.max_color(),
        dummy_edges=len(dummies), step2_real=step2_real, step3_edges=step3,
        degenerate=False, m_prime_capped=capped)
    return coloring, metrics
