"""Dynamic edge coloring with low recourse.

The engine maintains, after every edge update, the same coloring
distribution the offline two-phase algorithm would produce on the current
graph: every unordered node pair is permanently assigned a round drawn from
CappedGeo(eps, t_eps); after an update, tentative colors of affected edges
are re-derived round by round with a keep-if-still-uniform rule; failed and
never-tentatively-colored edges are maintained by a first-fit fallback
(SimpleColor) in a color band above C.

All randomness is derived by hashing (seed, pair, update index), which makes
round assignment lazily memoizable, re-insertions stable, and the optimized
dependency-cone update path bit-identical to the literal full sweep.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .graph import NULL_COLOR
from .nibble import Params, derive_params


class GadgetExhausted(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Keyed hashing (splitmix64 finalizer chain).
# ---------------------------------------------------------------------------

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_TAG_ROUND = 0x526F756E
_TAG_TENT = 0x54656E74
_EMPTY = np.empty(0, dtype=np.int64)


def _fmix64(z: int) -> int:
    z &= _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def mix64(*vals: int) -> int:
    """Absorb integers one by one through the splitmix64 finalizer."""
    h = _GOLDEN
    for v in vals:
        h = _fmix64(h + (v & _M64))
    return h


def _fmix64_vec(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


def mix64_vec(first: int, a: np.ndarray, b: np.ndarray, last: int) -> np.ndarray:
    """Vector form of mix64(first, a_i, b_i, last)."""
    h0 = np.uint64(_fmix64(_GOLDEN + (first & _M64)))
    z = _fmix64_vec(h0 + a.astype(np.uint64))
    z = _fmix64_vec(z + b.astype(np.uint64))
    z = _fmix64_vec(z + np.uint64(last & _M64))
    return z


def _unit_from_hash(h: int) -> float:
    return (h >> 11) * (2.0 ** -53)


# ---------------------------------------------------------------------------
# Capped geometric round assignment.
# ---------------------------------------------------------------------------

def capped_geo_pmf(epsilon: float, t_eps: int) -> list[float]:
    """Pr[k] = eps*(1-eps)^(k-1) for k < t_eps; the rest of the mass at t_eps."""
    pmf = [epsilon * (1 - epsilon) ** (k - 1) for k in range(1, t_eps)]
    pmf.append((1 - epsilon) ** (t_eps - 1))
    return pmf


def capped_geo_from_unit(u: float, epsilon: float, t_eps: int) -> int:
    """Inverse-CDF draw; uses float64 ops identical to the vectorized path."""
    if t_eps <= 1 or epsilon <= 0.0:
        return t_eps
    k = int(np.floor(np.log1p(np.float64(-u)) / np.log1p(np.float64(-epsilon)))) + 1
    return min(k, t_eps)


class RoundAssignment:
    """Memoized per-pair round in [t_eps], drawn from CappedGeo(eps, t_eps).

    The draw is a pure function of (seed, pair), so the same pair always maps
    to the same round across deletions and re-insertions; the memo is just a
    cache.  ``override`` pins specific pairs (used for matched-round tests).
    """

    def __init__(self, epsilon: float, t_eps: int, seed: int,
                 override: dict[tuple[int, int], int] | None = None):
        self.epsilon = epsilon
        self.t_eps = t_eps
        self.seed = seed
        self.memo: dict[tuple[int, int], int] = {}
        self.override: dict[tuple[int, int], int] = {}
        if override:
            for (a, b), r in override.items():
                key = (a, b) if a < b else (b, a)
                if not 1 <= r <= t_eps:
                    raise ValueError(f"override round {r} outside [1, {t_eps}]")
                self.override[key] = r

    def round_of(self, u: int, v: int) -> int:
        if u == v:
            raise ValueError("no self-loops")
        key = (u, v) if u < v else (v, u)
        r = self.memo.get(key)
        if r is None:
            r = self.override.get(key)
            if r is None:
                h = mix64(self.seed, _TAG_ROUND, key[0], key[1])
                r = capped_geo_from_unit(_unit_from_hash(h), self.epsilon,
                                         self.t_eps)
            self.memo[key] = r
        return r

    def rounds_vec(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        """Vectorized round_of for canonical (u < v) pair arrays; bit-equal
        to the scalar path."""
        h0 = np.uint64(_fmix64(_GOLDEN + self.seed))
        z = _fmix64_vec(np.uint64(_fmix64(int(h0) + _TAG_ROUND))
                        + us.astype(np.uint64))
        z = _fmix64_vec(z + vs.astype(np.uint64))
        unit = (z >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
        if self.t_eps <= 1 or self.epsilon <= 0.0:
            out = np.full(len(us), self.t_eps, dtype=np.int16)
        else:
            k = np.floor(np.log1p(-unit)
                         / np.log1p(np.float64(-self.epsilon))).astype(np.int64) + 1
            out = np.minimum(k, self.t_eps).astype(np.int16)
        if self.override:
            for idx in range(len(us)):
                r = self.override.get((int(us[idx]), int(vs[idx])))
                if r is not None:
                    out[idx] = r
        return out


def assign_round(u: int, v: int, ra: RoundAssignment) -> int:
    return ra.round_of(u, v)


# ---------------------------------------------------------------------------
# The per-edge tentative color update rule.
# ---------------------------------------------------------------------------

def _contains(sorted_arr, x: int) -> bool:
    i = int(np.searchsorted(sorted_arr, x))
    return i < len(sorted_arr) and int(sorted_arr[i]) == x


def _color_rule(c_prev: int, p_prev, p_now, draw: int) -> int:
    """Re-derive a tentative color after its palette may have changed.

    ``p_prev`` and ``p_now`` are ascending indexable color sequences,
    ``draw`` an unbounded non-negative integer used as the uniform index
    source.  If the previous color became unavailable, resample uniformly
    from the new palette; else draw a candidate and adopt it only when it is
    NULL or newly available, keeping the previous color otherwise.  The
    result is uniform on the new palette whenever the previous color was
    uniform on the old one.
    """
    k = len(p_now)
    c = NULL_COLOR if k == 0 else int(p_now[draw % k])
    if (c_prev != NULL_COLOR and _contains(p_prev, c_prev)
            and not (k > 0 and _contains(p_now, c_prev))):
        return c
    if c == NULL_COLOR or not _contains(p_prev, c):
        return c
    return c_prev


def tentatively_color(c_prev: int, p_prev, p_now,
                      rng: np.random.Generator) -> int:
    """Public form of the update rule; draws the uniform index from ``rng``."""
    p_now_arr = np.array(sorted(int(x) for x in p_now), dtype=np.int64)
    p_prev_arr = np.array(sorted(int(x) for x in p_prev), dtype=np.int64)
    draw = int(rng.integers(1 << 62))
    return _color_rule(c_prev, p_prev_arr, p_now_arr, draw)


# ---------------------------------------------------------------------------
# SimpleColor: first-fit fallback band.
# ---------------------------------------------------------------------------

class SimpleColor:
    """Deterministic first-fit coloring above ``band_floor``.

    Insertion assigns the smallest band color unused at either endpoint;
    deletion frees the color.  No other edge is ever recolored, and at most
    2*D'-1 band colors are needed for a subgraph of max degree D'.
    """

    def __init__(self, band_floor: int):
        self.band_floor = band_floor
        self.masks: dict[int, int] = {}

    def insert(self, u: int, v: int) -> int:
        mask = self.masks.get(u, 0) | self.masks.get(v, 0)
        inv = ~mask
        low = inv & -inv
        c = self.band_floor + low.bit_length()
        self.masks[u] = self.masks.get(u, 0) | low
        self.masks[v] = self.masks.get(v, 0) | low
        return c

    def delete(self, u: int, v: int, color: int) -> None:
        bit = 1 << (color - self.band_floor - 1)
        self.masks[u] &= ~bit
        self.masks[v] &= ~bit


# ---------------------------------------------------------------------------
# Regularizing gadget.
# ---------------------------------------------------------------------------

class RegularizingGadget:
    """Per real node v: dummy nodes v_1..v_delta, with {v, v_1, .., v_delta}
    a (delta+1)-clique of dummy edges at preprocessing.  A real insertion
    (u, v) removes the lowest-index live spoke at u and at v; a deletion adds
    the lowest-index missing spokes back.  All degrees stay in
    {delta-1, delta}."""

    def __init__(self, n: int, delta: int):
        self.n = n
        self.delta = delta
        self.spoke_alive = np.ones((n, delta), dtype=bool)

    def dummy_id(self, v: int, k: int) -> int:
        return self.n + v * self.delta + k

    def _lowest(self, v: int, want_alive: bool) -> int:
        row = self.spoke_alive[v]
        idx = np.flatnonzero(row if want_alive else ~row)
        if len(idx) == 0:
            raise GadgetExhausted(
                f"node {v}: no {'removable' if want_alive else 'addable'} spoke")
        return int(idx[0])

    def wrap(self, op: str, u: int, v: int) -> list[tuple[str, int, int]]:
        if op == "+":
            i = self._lowest(u, True)
            j = self._lowest(v, True)
            self.spoke_alive[u, i] = False
            self.spoke_alive[v, j] = False
            return [("+", u, v), ("-", u, self.dummy_id(u, i)),
                    ("-", v, self.dummy_id(v, j))]
        if op == "-":
            i = self._lowest(u, False)
            j = self._lowest(v, False)
            self.spoke_alive[u, i] = True
            self.spoke_alive[v, j] = True
            return [("-", u, v), ("+", u, self.dummy_id(u, i)),
                    ("+", v, self.dummy_id(v, j))]
        raise ValueError(f"bad op {op!r}")


def gadget_wrap(update: tuple[str, int, int],
                gadget_state: RegularizingGadget) -> list[tuple[str, int, int]]:
    op, u, v = update
    return gadget_state.wrap(op, u, v)


# ---------------------------------------------------------------------------
# Reports and stats.
# ---------------------------------------------------------------------------

@dataclass
class SubUpdateReport:
    """Stats for one single-edge update of the working graph."""
    t: int
    op: str
    u: int
    v: int
    round: int
    dirty_per_round: list[int]
    recourse_real: int
    recourse_dummy: int
    sc_events: int
    estar_is_dummy: bool


@dataclass
class UpdateReport:
    """Stats for one user-facing update (one real edge; up to 3 sub-updates
    in gadget mode)."""
    t: int
    op: str
    u: int
    v: int
    recourse: int              # real edges (excluding the updated one)
    dummy_recourse: int
    estar_changed: bool
    dirty_per_round: list[int]
    sc_events: int
    colors_in_use: int
    sub_reports: list[SubUpdateReport] = field(default_factory=list)

    def json_dict(self) -> dict:
        return {"t": self.t, "op": self.op, "recourse": self.recourse,
                "dirty_per_round": self.dirty_per_round,
                "simplecolor_events": self.sc_events,
                "colors_in_use": self.colors_in_use}


def recourse_stats(log: list[UpdateReport]) -> dict:
    """Aggregate recourse and dirty-set statistics over a run.

    The dirty-set means are taken per single-edge sub-update, the granularity
    the recursion E|D_i| <= 6*eps*(1 + E|D_{<i}|) speaks about.
    """
    if not log:
        return {"updates": 0, "mean": 0.0, "max": 0, "histogram": {},
                "mean_dirty_per_round": [], "mean_dirty_prefix": [],
                "sub_updates": 0}
    rec = [r.recourse for r in log]
    hist = Counter(rec)
    subs = [s for r in log for s in r.sub_reports]
    rounds = max((len(s.dirty_per_round) for s in subs), default=0)
    mean_dirty = []
    mean_prefix = []
    for i in range(rounds):
        vals = [s.dirty_per_round[i] for s in subs]
        pref = [sum(s.dirty_per_round[:i]) for s in subs]
        mean_dirty.append(float(np.mean(vals)))
        mean_prefix.append(float(np.mean(pref)))
    return {
        "updates": len(log),
        "mean": float(np.mean(rec)),
        "max": int(max(rec)),
        "histogram": dict(sorted(hist.items())),
        "mean_dirty_per_round": mean_dirty,
        "mean_dirty_prefix": mean_prefix,
        "sub_updates": len(subs),
    }


# ---------------------------------------------------------------------------
# The dynamic engine.
# ---------------------------------------------------------------------------

class DynamicColorer:
    """Maintains the two-band coloring of the working graph under updates.

    gadget=True (default): updates are real-graph edges; each becomes three
    single-edge updates of the gadget-augmented graph.  gadget=False: updates
    apply to the raw graph directly (inputs should then already be
    near-regular for the color guarantees to mean anything).

    ``full_sweep=True`` re-derives every current edge's tentative color on
    each update instead of only the dependency cone; outputs are identical,
    so the flag exists for cross-checking on small instances.
    """

    def __init__(self, n: int, delta: int, epsilon: float, K: int = 1,
                 seed: int = 0, gadget: bool = True,
                 full_sweep: bool = False,
                 round_override: dict[tuple[int, int], int] | None = None,
                 params: Params | None = None):
        self.n = n
        self.delta = delta
        self.seed = seed
        self.gadget_mode = gadget
        self.full_sweep = full_sweep
        self.params = params if params is not None else derive_params(
            n, delta, epsilon, K)
        self.epsilon = self.params.epsilon
        self.C = self.params.phase1_colors
        self.t_eps = self.params.t_eps
        self.R = self.t_eps - 1          # tentative rounds 1..R
        self.rounds_assign = RoundAssignment(self.epsilon, self.t_eps, seed,
                                             override=round_override)
        self.t = 0
        self._zrow = np.zeros(self.C + 1, dtype=bool)
        self._fpal = np.arange(1, self.C + 1, dtype=np.int64)

        if gadget:
            if delta < 1:
                raise ValueError("gadget mode needs delta >= 1")
            self.gadget: RegularizingGadget | None = RegularizingGadget(n, delta)
            self.N = n * (delta + 1)
            self._clique_per_node = delta * (delta - 1) // 2
            self._spoke_base = n * self._clique_per_node
            self._real_base = self._spoke_base + n * delta
            self._arange_d = np.arange(delta, dtype=np.int64)
            # per dummy-index k: local clique-edge indices incident to k
            inc = np.zeros((delta, max(delta - 1, 0)), dtype=np.int64)
            for k in range(delta):
                col = 0
                for j in range(delta):
                    if j == k:
                        continue
                    a, b = (j, k) if j < k else (k, j)
                    inc[k, col] = a * delta - a * (a + 1) // 2 + (b - a - 1)
                    col += 1
            self._inc_idx = inc
        else:
            self.gadget = None
            self.N = n
            self._real_base = 0

        cap = self._real_base + 64
        self.e_u = np.zeros(cap, dtype=np.int64)
        self.e_v = np.zeros(cap, dtype=np.int64)
        self.e_round = np.zeros(cap, dtype=np.int16)
        self.tent = np.zeros(cap, dtype=np.int32)
        self.alive = np.zeros(cap, dtype=bool)
        self.failed = np.zeros(cap, dtype=bool)
        self.band = np.zeros(cap, dtype=np.int32)
        self._count = self._real_base

        self.real_ids: dict[tuple[int, int], int] = {}
        self.real_adj: list[dict[int, int]] = [dict() for _ in range(n)]
        # cumulative tentative-color counts: ccnt[x, k, c] = number of alive
        # edges at node x with round <= k+1 and tentative color c
        self.ccnt = np.zeros((self.N, max(self.R, 1), self.C + 1),
                             dtype=np.uint8)
        self.sc = SimpleColor(self.C)
        self.real_color_counter: Counter = Counter()
        self.log: list[UpdateReport] = []

        if gadget:
            self._init_gadget_edges()
            self._preprocess()

    # -- topology -----------------------------------------------------------

    def _grow(self, need: int) -> None:
        cap = len(self.e_u)
        if need < cap:
            return
        new = max(need + 1, cap * 2)
        for name in ("e_u", "e_v", "e_round", "tent", "alive", "failed", "band"):
            arr = getattr(self, name)
            grown = np.zeros(new, dtype=arr.dtype)
            grown[:cap] = arr
            setattr(self, name, grown)

    def _clique_eid(self, v: int, a: int, b: int) -> int:
        d = self.delta
        idx = a * d - a * (a + 1) // 2 + (b - a - 1)
        return v * self._clique_per_node + idx

    def _spoke_eid(self, v: int, k: int) -> int:
        return self._spoke_base + v * self.delta + k

    def _is_dummy_edge(self, eid: int) -> bool:
        return self.gadget_mode and eid < self._real_base

    def _ensure_id(self, u: int, v: int) -> int:
        a, b = (u, v) if u < v else (v, u)
        if self.gadget_mode:
            d, n = self.delta, self.n
            if a >= n:  # both dummy: clique edge
                va, ka = divmod(a - n, d)
                vb, kb = divmod(b - n, d)
                if va != vb:
                    raise ValueError("dummy nodes of different cliques")
                return self._clique_eid(va, min(ka, kb), max(ka, kb))
            if b >= n:  # spoke
                vb, kb = divmod(b - n, d)
                if vb != a:
                    raise ValueError("spoke endpoints mismatch")
                return self._spoke_eid(a, kb)
        eid = self.real_ids.get((a, b))
        if eid is None:
            eid = self._count
            self._count += 1
            self._grow(self._count)
            self.real_ids[(a, b)] = eid
            self.e_u[eid] = a
            self.e_v[eid] = b
            self.e_round[eid] = self.rounds_assign.round_of(a, b)
        return eid

    def _incident_alive_eids(self, x: int) -> np.ndarray:
        """Alive incident edge ids at node x (int64 array)."""
        if not self.gadget_mode:
            adj = self.real_adj[x]
            return np.fromiter(adj.values(), dtype=np.int64, count=len(adj))
        n, d = self.n, self.delta
        if x < n:
            spokes = self._spoke_base + x * d + self._arange_d
            spokes = spokes[self.alive[spokes]]
            adj = self.real_adj[x]
            if not adj:
                return spokes
            ra = np.fromiter(adj.values(), dtype=np.int64, count=len(adj))
            return np.concatenate([spokes, ra])
        v, k = divmod(x - n, d)
        eids = v * self._clique_per_node + self._inc_idx[k]
        eids = eids[self.alive[eids]]
        sp = self._spoke_eid(v, k)
        if self.alive[sp]:
            eids = np.append(eids, sp)
        return eids

    # -- gadget preprocessing -------------------------------------------------

    def _init_gadget_edges(self) -> None:
        n, d = self.n, self.delta
        q = self._clique_per_node
        if q > 0:
            a_idx, b_idx = np.triu_indices(d, k=1)
            vv = np.repeat(np.arange(n, dtype=np.int64), q)
            self.e_u[:n * q] = n + vv * d + np.tile(a_idx, n)
            self.e_v[:n * q] = n + vv * d + np.tile(b_idx, n)
        vv = np.repeat(np.arange(n, dtype=np.int64), d)
        kk = np.tile(np.arange(d, dtype=np.int64), n)
        sb = self._spoke_base
        self.e_u[sb:sb + n * d] = vv
        self.e_v[sb:sb + n * d] = n + vv * d + kk
        m0 = self._real_base
        self.alive[:m0] = True
        self.e_round[:m0] = self.rounds_assign.rounds_vec(
            self.e_u[:m0], self.e_v[:m0])

    def _preprocess(self) -> None:
        """Static pass over the initial (all-dummy) graph: tentative colors,
        failures, fallback coloring; then the incremental count structure."""
        m0 = self._real_base
        ids = np.arange(m0, dtype=np.int64)
        us = self.e_u[:m0]
        vs = self.e_v[:m0]
        rounds = self.e_round[:m0]
        C = self.C
        blocked = np.zeros((self.N, C + 1), dtype=bool)
        blocked[:, 0] = True
        for i in range(1, self.R + 1):
            sel = ids[rounds == i]
            if len(sel) == 0:
                continue
            h = mix64_vec(self.seed ^ _TAG_TENT, us[sel], vs[sel], 0)
            for lo in range(0, len(sel), 200_000):
                chunk = sel[lo:lo + 200_000]
                hc = h[lo:lo + 200_000]
                avail = ~(blocked[us[chunk]] | blocked[vs[chunk]])
                L = avail.sum(axis=1).astype(np.uint64)
                idx = np.zeros(len(chunk), dtype=np.uint64)
                nz = L > 0
                idx[nz] = hc[nz] % L[nz]
                cs = np.cumsum(avail, axis=1, dtype=np.int32)
                color = np.argmax(cs == (idx.astype(np.int32) + 1)[:, None],
                                  axis=1)
                color[~nz] = 0
                self.tent[chunk] = color
            cc = self.tent[sel]
            nn = cc > 0
            keys_u = us[sel[nn]] * (C + 1) + cc[nn]
            keys_v = vs[sel[nn]] * (C + 1) + cc[nn]
            both = np.concatenate([keys_u, keys_v])
            uniq, cnts = np.unique(both, return_counts=True)
            conflicted = uniq[cnts >= 2]
            bad = np.isin(keys_u, conflicted) | np.isin(keys_v, conflicted)
            f = np.zeros(len(sel), dtype=bool)
            f[~nn] = True
            f[np.flatnonzero(nn)[bad]] = True
            self.failed[sel] = f
            blocked[us[sel[nn]], cc[nn]] = True
            blocked[vs[sel[nn]], cc[nn]] = True
        for k in range(self.R):
            m = (rounds <= k + 1) & (self.tent[:m0] > 0)
            np.add.at(self.ccnt[:, k, :], (us[m], self.tent[:m0][m]), 1)
            np.add.at(self.ccnt[:, k, :], (vs[m], self.tent[:m0][m]), 1)
        in_gu = np.flatnonzero(self.failed[:m0] | (rounds == self.t_eps))
        # inlined SimpleColor first-fit; the loop dominates preprocessing
        masks = self.sc.masks
        mget = masks.get
        floor = self.C
        out = []
        for u, v in zip(us[in_gu].tolist(), vs[in_gu].tolist()):
            mu = mget(u, 0)
            mv = mget(v, 0)
            inv = ~(mu | mv)
            low = inv & -inv
            masks[u] = mu | low
            masks[v] = mv | low
            out.append(floor + low.bit_length())
        self.band[in_gu] = out

    # -- observers ------------------------------------------------------------

    def final_color(self, eid: int) -> int:
        if not self.alive[eid]:
            return NULL_COLOR
        if self.e_round[eid] == self.t_eps or self.failed[eid]:
            return int(self.band[eid])
        return int(self.tent[eid])

    def real_coloring(self) -> dict[tuple[int, int], int]:
        return {pair: self.final_color(eid)
                for pair, eid in self.real_ids.items() if self.alive[eid]}

    def real_edge_state(self) -> dict[tuple[int, int], tuple[int, bool]]:
        """(tentative color, failed flag) per alive real edge; round-t_eps
        edges report (NULL, False)."""
        out = {}
        for pair, eid in self.real_ids.items():
            if not self.alive[eid]:
                continue
            if self.e_round[eid] == self.t_eps:
                out[pair] = (NULL_COLOR, False)
            else:
                out[pair] = (int(self.tent[eid]), bool(self.failed[eid]))
        return out

    def iter_alive_edges(self):
        """(eid, u, v) over all alive working-graph edges (dummies included).
        Linear in the id space; for verification, not the hot path."""
        for eid in range(self._count):
            if self.alive[eid]:
                yield eid, int(self.e_u[eid]), int(self.e_v[eid])

    def check_proper(self) -> bool:
        seen: set[tuple[int, int]] = set()
        for eid, u, v in self.iter_alive_edges():
            c = self.final_color(eid)
            if c == NULL_COLOR:
                return False
            for x in (u, v):
                if (x, c) in seen:
                    return False
                seen.add((x, c))
        return True

    # -- palettes ---------------------------------------------------------------

    def _blocked_row(self, x: int, i: int, prev_rows) -> np.ndarray:
        if i <= 1:
            return self._zrow
        if prev_rows is not None:
            row = prev_rows.get((x, i - 2))
            if row is not None:
                return row > 0
        return self.ccnt[x, i - 2] > 0

    def palette(self, u: int, v: int, i: int, prev_rows=None) -> np.ndarray:
        """Ascending array of colors available to a round-i edge (u, v):
        [C] minus tentative colors of rounds < i at either endpoint."""
        if i <= 1:
            return self._fpal
        mask = self._blocked_row(u, i, prev_rows) | self._blocked_row(v, i, prev_rows)
        out = np.flatnonzero(~mask)
        return out[out > 0]

    # -- update machinery --------------------------------------------------------

    def _bump(self, x: int, rnd: int, color: int, delta: int, prev_rows: dict,
              affected: dict) -> None:
        """Adjust cumulative counts after a round-``rnd`` edge at x
        gained/lost tentative ``color``; snapshot rows for palette rollback
        and record later rounds whose palettes flipped at x."""
        if color == NULL_COLOR or rnd > self.R:
            return
        for k in range(rnd - 1, self.R):
            key = (x, k)
            if key not in prev_rows:
                prev_rows[key] = self.ccnt[x, k].copy()
            before = int(self.ccnt[x, k, color])
            self.ccnt[x, k, color] = before + delta
            if (before == 0) != (before + delta == 0):
                affected.setdefault(x, set()).add(k + 2)

    def _exact_count(self, x: int, i: int, color: int) -> int:
        c = int(self.ccnt[x, i - 1, color])
        if i >= 2:
            c -= int(self.ccnt[x, i - 2, color])
        return c

    def _is_failed(self, eid: int) -> bool:
        c = int(self.tent[eid])
        if c == NULL_COLOR:
            return True
        i = int(self.e_round[eid])
        return (self._exact_count(int(self.e_u[eid]), i, c) >= 2
                or self._exact_count(int(self.e_v[eid]), i, c) >= 2)

    def apply_gprime_update(self, op: str, u: int, v: int,
                            _shared_before: dict | None = None) -> SubUpdateReport:
        """One single-edge update of the working graph.

        Step I re-derives tentative colors in ascending round order for the
        edges whose palettes changed; Step II refreshes failed flags around
        every tentative change; Step III feeds the uncolored-subgraph
        symmetric difference to SimpleColor.
        """
        self.t += 1
        t = self.t
        eid_star = self._ensure_id(u, v)
        i_star = int(self.e_round[eid_star])
        if op == "+" and self.alive[eid_star]:
            raise ValueError(f"insert of present edge ({u}, {v})")
        if op == "-" and not self.alive[eid_star]:
            raise ValueError(f"delete of absent edge ({u}, {v})")

        before: dict[int, int] = {}

        def touch(eid: int) -> None:
            if eid not in before:
                val = self.final_color(eid) if self.alive[eid] else -1
                before[eid] = val
                if _shared_before is not None and eid not in _shared_before:
                    _shared_before[eid] = val

        prev_rows: dict[tuple[int, int], np.ndarray] = {}
        affected: dict[int, set[int]] = {}
        changes: list[tuple[int, int, int, int, int, int]] = []

        touch(eid_star)
        a, b = (u, v) if u < v else (v, u)
        if op == "-":
            old_c = int(self.tent[eid_star])
            self.alive[eid_star] = False
            if not self._is_dummy_edge(eid_star):
                self.real_adj[a].pop(b, None)
                self.real_adj[b].pop(a, None)
            if i_star <= self.R and old_c != NULL_COLOR:
                self._bump(a, i_star, old_c, -1, prev_rows, affected)
                self._bump(b, i_star, old_c, -1, prev_rows, affected)
                changes.append((eid_star, a, b, i_star, old_c, NULL_COLOR))
                self.tent[eid_star] = NULL_COLOR
        else:
            self.alive[eid_star] = True
            self.tent[eid_star] = NULL_COLOR
            self.failed[eid_star] = False
            if not self._is_dummy_edge(eid_star):
                self.real_adj[a][b] = eid_star
                self.real_adj[b][a] = eid_star

        # Step I
        dirty_per_round = [0] * self.R
        for i in range(1, self.R + 1):
            cand: set[int] = set()
            if self.full_sweep:
                live = np.flatnonzero(self.alive[:self._count]
                                      & (self.e_round[:self._count] == i))
                cand.update(int(x) for x in live)
            else:
                for x, rounds_hit in affected.items():
                    if i in rounds_hit:
                        eids = self._incident_alive_eids(x)
                        if len(eids):
                            cand.update(eids[self.e_round[eids] == i].tolist())
            if op == "+" and i_star == i:
                cand.add(eid_star)
            for eid in sorted(cand):
                if not self.alive[eid]:
                    continue
                eu = int(self.e_u[eid])
                ev = int(self.e_v[eid])
                p_now = self.palette(eu, ev, i)
                if eid == eid_star:
                    c_prev = NULL_COLOR
                    p_prev = _EMPTY
                else:
                    c_prev = int(self.tent[eid])
                    p_prev = self.palette(eu, ev, i, prev_rows)
                draw = mix64(self.seed ^ _TAG_TENT, eu, ev, t)
                c_new = _color_rule(c_prev, p_prev, p_now, draw)
                if c_new != c_prev:
                    touch(eid)
                    if c_prev != NULL_COLOR:
                        self._bump(eu, i, c_prev, -1, prev_rows, affected)
                        self._bump(ev, i, c_prev, -1, prev_rows, affected)
                    if c_new != NULL_COLOR:
                        self._bump(eu, i, c_new, +1, prev_rows, affected)
                        self._bump(ev, i, c_new, +1, prev_rows, affected)
                    self.tent[eid] = c_new
                    changes.append((eid, eu, ev, i, c_prev, c_new))
                    if eid != eid_star:
                        dirty_per_round[i - 1] += 1

        # Step II
        recheck: set[int] = set()
        for eid, eu, ev, i, c_old, c_new in changes:
            if self.alive[eid]:
                recheck.add(eid)
            for x in (eu, ev):
                eids = self._incident_alive_eids(x)
                if len(eids) == 0:
                    continue
                tt = self.tent[eids]
                mask = ((self.e_round[eids] == i) & (tt != NULL_COLOR)
                        & ((tt == c_old) | (tt == c_new)) & (eids != eid))
                recheck.update(eids[mask].tolist())
        if op == "+" and i_star <= self.R:
            recheck.add(eid_star)
        gu_insert: list[int] = []
        gu_delete: list[int] = []
        for eid in sorted(recheck):
            if not self.alive[eid]:
                continue
            was = bool(self.failed[eid])
            now = self._is_failed(eid)
            if was != now:
                touch(eid)
                self.failed[eid] = now
                (gu_insert if now else gu_delete).append(eid)

        # Step III
        sc_events = 0
        if op == "-" and self.band[eid_star] != 0:
            self.sc.delete(a, b, int(self.band[eid_star]))
            self.band[eid_star] = 0
            sc_events += 1
        for eid in gu_delete:
            if self.band[eid] != 0:
                self.sc.delete(int(self.e_u[eid]), int(self.e_v[eid]),
                               int(self.band[eid]))
                self.band[eid] = 0
                sc_events += 1
        to_insert = list(gu_insert)
        if op == "+" and i_star == self.t_eps:
            to_insert.append(eid_star)
        for eid in sorted(to_insert):
            touch(eid)
            self.band[eid] = self.sc.insert(int(self.e_u[eid]),
                                            int(self.e_v[eid]))
            sc_events += 1

        rec_real = rec_dummy = 0
        for eid, bval in before.items():
            if eid == eid_star:
                continue
            aval = self.final_color(eid) if self.alive[eid] else -1
            if bval == -1 or aval == -1 or bval == aval:
                continue
            if self._is_dummy_edge(eid):
                rec_dummy += 1
            else:
                rec_real += 1
        return SubUpdateReport(
            t=t, op=op, u=u, v=v, round=i_star,
            dirty_per_round=dirty_per_round, recourse_real=rec_real,
            recourse_dummy=rec_dummy, sc_events=sc_events,
            estar_is_dummy=self._is_dummy_edge(eid_star))

    def apply_update(self, op: str, u: int, v: int) -> UpdateReport:
        """One user-facing update; wraps through the gadget when enabled.

        Recourse compares final colors before and after the whole wrapped
        update, counts only edges present at both times, excludes the updated
        real edge, and reports dummy-edge recolorings separately.
        """
        if self.gadget_mode:
            if max(u, v) >= self.n:
                raise ValueError("real updates must name real nodes")
            assert self.gadget is not None
            ops = self.gadget.wrap(op, u, v)
        else:
            ops = [(op, u, v)]
        shared: dict[int, int] = {}
        subs = [self.apply_gprime_update(o, x, y, _shared_before=shared)
                for o, x, y in ops]
        estar = self._ensure_id(u, v)
        rec_real = rec_dummy = 0
        estar_changed = False
        for eid, bval in shared.items():
            aval = self.final_color(eid) if self.alive[eid] else -1
            if eid == estar:
                estar_changed = bval != aval
            elif bval != -1 and aval != -1 and bval != aval:
                if self._is_dummy_edge(eid):
                    rec_dummy += 1
                else:
                    rec_real += 1
            if not self._is_dummy_edge(eid) and bval != aval:
                if bval != -1:
                    self.real_color_counter[bval] -= 1
                    if self.real_color_counter[bval] <= 0:
                        del self.real_color_counter[bval]
                if aval != -1:
                    self.real_color_counter[aval] += 1
        dirty = [0] * self.R
        for s in subs:
            for i, d in enumerate(s.dirty_per_round):
                dirty[i] += d
        report = UpdateReport(
            t=self.t, op=op, u=u, v=v, recourse=rec_real,
            dummy_recourse=rec_dummy, estar_changed=estar_changed,
            dirty_per_round=dirty,
            sc_events=sum(s.sc_events for s in subs),
            colors_in_use=len(self.real_color_counter),
            sub_reports=subs)
        self.log.append(report)
        return report
