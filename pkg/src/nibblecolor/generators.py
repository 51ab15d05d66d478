"""Instance generators and the greedy online baseline.

Every generator is a deterministic function of its parameters and seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph


class InfeasibleParams(ValueError):
    pass


class ResourceLimit(ValueError):
    pass


def greedy_online(stream: list[tuple[int, int]]) -> list[int]:
    """First-fit online edge coloring: smallest color unused at either endpoint.

    Returns one color (1-based) per stream position.  Uses at most 2D-1
    colors on any stream of maximum degree D: at decision time an edge sees
    at most 2D-2 colored incident edges.
    """
    used: dict[int, int] = {}
    out = []
    for u, v in stream:
        mask = used.get(u, 0) | used.get(v, 0)
        inv = ~mask
        low = inv & -inv  # lowest unset bit of mask
        c = low.bit_length()
        used[u] = used.get(u, 0) | low
        used[v] = used.get(v, 0) | low
        out.append(c)
    return out


def _matching_pairs(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    perm = rng.permutation(n)
    k = n // 2
    return [(int(perm[2 * i]), int(perm[2 * i + 1])) for i in range(k)]


def _repair_matching(pairs: list[tuple[int, int]], adj: list[set[int]],
                     rng: np.random.Generator, sweeps: int = 60) -> list[tuple[int, int]]:
    """Swap-based repair: resolve pairs duplicating existing edges.

    Crosswise swaps of two pairs keep the pairing perfect; a swap is only
    accepted if both resulting pairs are collision-free.  Pairs still
    colliding after the sweep budget are dropped by the caller.
    """
    for _ in range(sweeps):
        bad = [k for k, (a, b) in enumerate(pairs) if b in adj[a]]
        if not bad:
            break
        for k in bad:
            a, b = pairs[k]
            if b not in adj[a]:
                continue
            for _attempt in range(40):
                j = int(rng.integers(len(pairs)))
                if j == k:
                    continue
                c, d = pairs[j]
                if len({a, b, c, d}) < 4:
                    continue
                if d not in adj[a] and b not in adj[c]:
                    pairs[k] = (a, d)
                    pairs[j] = (c, b)
                    break
    return pairs


def gen_near_regular(n: int, delta: int, regularity_slack: float = 0.0,
                     seed: int = 0) -> Graph:
    """Random near-regular simple graph via a union of random perfect matchings.

    All degrees land in [delta*(1-regularity_slack), delta].  Colliding
    matching pairs are repaired by swaps; whole matchings are retried up to
    100 times, after which remaining collisions are dropped (the relaxed
    fallback) as long as the slack absorbs the deficit.
    """
    if regularity_slack < 0:
        raise InfeasibleParams("regularity_slack must be >= 0")
    if delta < 0 or n < 0:
        raise InfeasibleParams("n and delta must be >= 0")
    if delta == 0:
        return Graph(n, 0)
    if n <= delta:
        raise InfeasibleParams(f"need n > delta, got n={n} delta={delta}")
    if regularity_slack == 0 and n % 2 != 0:
        raise InfeasibleParams("exact regularity via matchings needs even n")

    rng = np.random.default_rng(seed)
    adj: list[set[int]] = [set() for _ in range(n)]
    edges: list[tuple[int, int]] = []
    min_allowed = delta * (1.0 - regularity_slack)

    for _round in range(delta):
        accepted = None
        for _retry in range(100):
            pairs = _repair_matching(_matching_pairs(n, rng), adj, rng)
            bad = sum(1 for a, b in pairs if b in adj[a])
            if bad == 0:
                accepted = pairs
                break
            if regularity_slack > 0:
                # relaxed fallback: keep the clean pairs, drop the rest
                accepted = [(a, b) for a, b in pairs if b not in adj[a]]
                break
        if accepted is None:
            raise InfeasibleParams(
                f"could not realize matching {_round + 1}/{delta} (n={n})")
        for a, b in accepted:
            adj[a].add(b)
            adj[b].add(a)
            edges.append((a, b) if a < b else (b, a))

    g = Graph(n, delta)
    for a, b in sorted(edges):
        g.insert_edge(a, b)
    if any(d < min_allowed for d in g.degree):
        raise InfeasibleParams(
            f"degree fell below {min_allowed:.1f}; increase regularity_slack")
    return g


def gen_random_order_stream(g: Graph, seed: int = 0) -> list[tuple[int, int]]:
    """Uniformly random permutation of g's edges."""
    rng = np.random.default_rng(seed)
    edges = g.edge_list()
    order = rng.permutation(len(edges))
    return [edges[i] for i in order]


def gen_update_sequence(n: int, delta: int, length: int, churn: float = 0.0,
                        seed: int = 0) -> list[tuple[str, int, int]]:
    """Oblivious insert/delete sequence keeping every degree <= delta.

    Starts with a pure-insertion warm-up phase (up to a quarter of the
    capacity n*delta/2), then flips a churn-biased coin per step between a
    deletion of a uniformly random current edge and a fresh insertion.
    """
    if not 0.0 <= churn <= 1.0:
        raise ValueError("churn must be in [0, 1]")
    rng = np.random.default_rng(seed)
    warmup = min(length, (n * delta) // 4)
    present: set[tuple[int, int]] = set()
    current: list[tuple[int, int]] = []
    pos: dict[tuple[int, int], int] = {}
    degree = np.zeros(n, dtype=np.int64)
    updates: list[tuple[str, int, int]] = []

    def try_insert() -> tuple[int, int] | None:
        for _ in range(200):
            u = int(rng.integers(n))
            v = int(rng.integers(n))
            if u == v:
                continue
            if degree[u] >= delta or degree[v] >= delta:
                continue
            key = (u, v) if u < v else (v, u)
            if key in present:
                continue
            return key
        # dense corner: scan for any feasible pair
        open_nodes = [x for x in range(n) if degree[x] < delta]
        rng.shuffle(open_nodes)
        for i, u in enumerate(open_nodes):
            for v in open_nodes[i + 1:]:
                key = (u, v) if u < v else (v, u)
                if key not in present:
                    return key
        return None

    def do_insert(key):
        present.add(key)
        pos[key] = len(current)
        current.append(key)
        degree[key[0]] += 1
        degree[key[1]] += 1
        updates.append(("+", key[0], key[1]))

    def do_delete():
        i = int(rng.integers(len(current)))
        key = current[i]
        last = current[-1]
        current[i] = last
        pos[last] = i
        current.pop()
        del pos[key]
        present.remove(key)
        degree[key[0]] -= 1
        degree[key[1]] -= 1
        updates.append(("-", key[0], key[1]))

    while len(updates) < length:
        in_warmup = len(updates) < warmup
        want_delete = (not in_warmup) and current and rng.random() < churn
        if want_delete:
            do_delete()
            continue
        key = try_insert()
        if key is None:
            if current:
                do_delete()
                continue
            raise InfeasibleParams("no feasible insertion and nothing to delete")
        do_insert(key)
    return updates


@dataclass
class LowerBoundParams:
    """Hard-instance family: per copy, beta stars plus one hub node wired to
    delta random star centers; greedy is forced to 2*delta-1 colors with
    constant probability per copy under random arrival order."""
    delta: int
    copies: int = 1
    seed: int = 0
    node_budget: int = 10 ** 4
    beta: int = field(init=False)

    def __post_init__(self):
        if self.delta < 2:
            raise InfeasibleParams("delta must be >= 2")
        if self.copies < 1:
            raise InfeasibleParams("copies must be >= 1")
        d = self.delta
        self.beta = 2 * d * math.comb(2 * d - 2, d - 1) * math.comb(2 * d - 1, d)

    @property
    def nodes_per_copy(self) -> int:
        return self.beta * self.delta + 1

    @staticmethod
    def max_copies_for_budget(delta: int, node_budget: int) -> int:
        probe = LowerBoundParams(delta=delta, copies=1, node_budget=node_budget)
        return max(1, node_budget // probe.nodes_per_copy)


def gen_lower_bound_instance(params: LowerBoundParams) -> tuple[Graph, list[tuple[int, int]]]:
    """Build the star-and-hub instance and a uniformly shuffled edge stream.

    Each copy: beta stars with delta-1 leaves, one hub adjacent to delta
    distinct random star centers.  Copies are node-disjoint; the returned
    stream is one global uniform shuffle over all copies.
    """
    total_nodes = params.nodes_per_copy * params.copies
    if total_nodes > params.node_budget:
        raise ResourceLimit(
            f"{total_nodes} nodes exceed budget {params.node_budget}")
    rng = np.random.default_rng(params.seed)
    d = params.delta
    edges: list[tuple[int, int]] = []
    base = 0
    for _copy in range(params.copies):
        centers = []
        nxt = base
        for _s in range(params.beta):
            center = nxt
            centers.append(center)
            for leaf in range(nxt + 1, nxt + d):
                edges.append((center, leaf))
            nxt += d
        hub = nxt
        picked = rng.choice(params.beta, size=d, replace=False)
        for idx in sorted(int(i) for i in picked):
            edges.append((centers[idx], hub))
        base = hub + 1
    g = Graph(total_nodes, d)
    for u, v in edges:
        g.insert_edge(u, v)
    order = rng.permutation(len(edges))
    stream = [edges[i] for i in order]
    return g, stream
