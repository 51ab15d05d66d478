"""Experiment orchestration, metrics output, and statistical verification.

A config plus a seed list determines every output byte: instances are built
from the instance seed, streams and algorithm randomness from the per-trial
seed.  CSV rows follow a stable column schema (documented in the README);
the JSON mirror holds the same records plus wall-clock timings, which are
deliberately kept out of the CSV so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from collections import Counter
from dataclasses import dataclass, field, asdict

import numpy as np

from . import generators
from .dynamic import DynamicColorer, recourse_stats
from .graph import (Graph, EdgeColoring, verify_proper_coloring,
                    read_edge_list)
from .nibble import Params, derive_params, run_basic, RoundTrace
from .random_order import run_warmup, run_general, WarmupColorer


class ConfigError(ValueError):
    pass


class EmptySamples(ValueError):
    pass


ALGORITHMS = ("basic", "warmup", "general", "dynamic", "greedy")

CSV_COLUMNS = [
    "config_hash", "algorithm", "seed", "n", "delta", "epsilon", "K", "m",
    "colors_used", "max_color", "proper", "band_floor", "tentative_band_max",
    "greedy_band_min", "greedy_band_max", "recourse_mean", "recourse_max",
    "extra",
]


@dataclass
class ExperimentConfig:
    algorithm: str
    n: int = 0
    delta: int = 1
    epsilon: float = 0.1
    K: int = 1
    seeds: tuple[int, ...] = (0,)
    instance_kind: str = "near_regular"   # near_regular | file | lower_bound
    instance_seed: int = 0
    regularity_slack: float = 0.02
    input_path: str | None = None
    copies: int = 1
    node_budget: int = 10_000
    updates: int = 0
    churn: float = 0.3
    gadget: bool = True
    strict_regularity: bool = False
    rounds_override: int | None = None
    trace: bool = False
    trace_budget: int = 10_000
    tolerance_slack: float = 0.1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.instance_kind not in ("near_regular", "file", "lower_bound"):
            raise ConfigError(f"unknown instance kind {self.instance_kind!r}")
        if self.instance_kind == "file" and not self.input_path:
            raise ConfigError("instance_kind='file' needs input_path")
        self.seeds = tuple(int(s) for s in self.seeds)

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def build_instance(config: ExperimentConfig) -> Graph:
    if config.instance_kind == "file":
        return read_edge_list(config.input_path)
    if config.instance_kind == "lower_bound":
        params = generators.LowerBoundParams(
            delta=config.delta, copies=config.copies,
            seed=config.instance_seed, node_budget=config.node_budget)
        g, _ = generators.gen_lower_bound_instance(params)
        return g
    return generators.gen_near_regular(config.n, config.delta,
                                       config.regularity_slack,
                                       config.instance_seed)


def _verify_stream_coloring(stream: list[tuple[int, int]],
                            colors: list[int], n: int, delta: int) -> bool:
    g = Graph(n, delta, enforce_degree_bound=False)
    col = EdgeColoring()
    for idx, (u, v) in enumerate(stream):
        eid = g.insert_edge(u, v)
        col.set(eid, colors[idx])
    return verify_proper_coloring(g, col, require_complete=True).valid


def run_trial(config: ExperimentConfig, seed: int, g: Graph | None = None,
              update_sink=None) -> tuple[dict, RoundTrace | None]:
    """One seeded run of the configured algorithm; returns the flat record
    and (for traced basic runs) the phase-one trace.  ``update_sink``, when
    given, receives each dynamic per-update report as a JSON-ready dict."""
    record: dict = {
        "config_hash": config.config_hash(), "algorithm": config.algorithm,
        "seed": seed, "n": config.n, "delta": config.delta,
        "epsilon": config.epsilon, "K": config.K,
    }
    extra: dict = {}
    trace_out = None

    if config.algorithm == "dynamic":
        if config.instance_kind == "file":
            from .graph import read_update_stream
            n_run, delta_run, updates = read_update_stream(config.input_path)
        else:
            n_run, delta_run = config.n, config.delta
            updates = generators.gen_update_sequence(
                n_run, delta_run, config.updates, config.churn,
                config.instance_seed)
        record["n"] = n_run
        record["delta"] = delta_run
        eng = DynamicColorer(n_run, delta_run, config.epsilon,
                             config.K, seed=seed, gadget=config.gadget)
        for op, u, v in updates:
            rep = eng.apply_update(op, u, v)
            if update_sink is not None:
                update_sink(rep.json_dict())
        coloring = eng.real_coloring()
        gg = Graph(n_run, delta_run, enforce_degree_bound=False)
        col = EdgeColoring()
        for (u, v), c in coloring.items():
            eid = gg.insert_edge(u, v)
            col.set(eid, c)
        rep = verify_proper_coloring(gg, col, require_complete=True)
        stats = recourse_stats(eng.log)
        tent = [c for c in coloring.values() if c <= eng.C]
        band = [c for c in coloring.values() if c > eng.C]
        record.update({
            "m": gg.edge_count,
            "colors_used": len(set(coloring.values())),
            "max_color": max(coloring.values(), default=0),
            "proper": rep.valid,
            "band_floor": eng.C,
            "tentative_band_max": max(tent, default=0),
            "greedy_band_min": min(band, default=0),
            "greedy_band_max": max(band, default=0),
            "recourse_mean": round(stats["mean"], 9),
            "recourse_max": stats["max"],
        })
        extra = {"updates": len(updates),
                 "mean_dirty_per_round":
                     [round(x, 9) for x in stats["mean_dirty_per_round"]],
                 "gadget": config.gadget}
        record["extra"] = json.dumps(extra, sort_keys=True)
        return record, None

    assert g is not None
    if config.algorithm == "basic":
        params = derive_params(config.n, config.delta, config.epsilon,
                               config.K, rounds=config.rounds_override)
        rng = np.random.default_rng(seed)
        coloring, metrics, p1 = run_basic(
            g, params, rng, strict=config.strict_regularity,
            trace=config.trace, trace_budget=config.trace_budget)
        rep = verify_proper_coloring(g, coloring, require_complete=True)
        record.update({
            "m": g.edge_count, "colors_used": metrics.colors_used,
            "max_color": metrics.max_color, "proper": rep.valid,
            "band_floor": metrics.C,
            "tentative_band_max": metrics.tentative_band_max,
            "greedy_band_min": metrics.greedy_band_min,
            "greedy_band_max": metrics.greedy_band_max,
            "recourse_mean": "", "recourse_max": "",
        })
        extra = {"t_eps": metrics.t_eps,
                 "uncolored_max_degree": metrics.uncolored_max_degree,
                 "phase1_colored": metrics.phase1_colored}
        trace_out = p1.trace
    elif config.algorithm in ("warmup", "general", "greedy"):
        stream = generators.gen_random_order_stream(g, seed)
        if config.algorithm == "greedy":
            colors = generators.greedy_online(stream)
            proper = _verify_stream_coloring(stream, colors, g.node_count,
                                             config.delta)
            record.update({
                "m": len(stream), "colors_used": len(set(colors)),
                "max_color": max(colors, default=0), "proper": proper,
                "band_floor": 0, "tentative_band_max": 0,
                "greedy_band_min": min(colors, default=0),
                "greedy_band_max": max(colors, default=0),
                "recourse_mean": "", "recourse_max": "",
            })
        elif config.algorithm == "warmup":
            rng = np.random.default_rng(seed)
            coloring, metrics, _ = run_warmup(
                stream, g.node_count, config.delta, len(stream),
                config.epsilon, config.K, rng=rng)
            colors = [coloring.get(i) for i in range(len(stream))]
            proper = _verify_stream_coloring(stream, colors, g.node_count,
                                             config.delta)
            record.update({
                "m": metrics.m, "colors_used": metrics.colors_used,
                "max_color": metrics.max_color, "proper": proper,
                "band_floor": metrics.C,
                "tentative_band_max": metrics.tentative_band_max,
                "greedy_band_min": metrics.greedy_band_min,
                "greedy_band_max": metrics.greedy_band_max,
                "recourse_mean": "", "recourse_max": "",
            })
            extra = {"near_regular": metrics.near_regular,
                     "greedy_count": metrics.greedy_count}
        else:
            rng = np.random.default_rng(seed)
            coloring, metrics = run_general(
                stream, g.node_count, config.delta, config.epsilon,
                config.K, rng=rng)
            colors = [coloring.get(i) for i in range(len(stream))]
            proper = _verify_stream_coloring(stream, colors, g.node_count,
                                             config.delta)
            record.update({
                "m": metrics.m, "colors_used": metrics.colors_used,
                "max_color": metrics.max_color, "proper": proper,
                "band_floor": metrics.delta1,
                "tentative_band_max": metrics.delta2,
                "greedy_band_min": metrics.delta2 + 1 if metrics.step3_edges else 0,
                "greedy_band_max": metrics.delta3,
                "recourse_mean": "", "recourse_max": "",
            })
            extra = {"T": metrics.T, "m_prime": metrics.m_prime,
                     "delta1": metrics.delta1, "delta2": metrics.delta2,
                     "delta3": metrics.delta3,
                     "degenerate": metrics.degenerate,
                     "m_prime_capped": metrics.m_prime_capped}
    else:
        raise ConfigError(f"unhandled algorithm {config.algorithm}")
    record["extra"] = json.dumps(extra, sort_keys=True)
    return record, trace_out


def run_experiment(config: ExperimentConfig
                   ) -> tuple[list[dict], list[float], list]:
    """All seeds of a config.  Returns (records, per-trial runtimes, traces)."""
    g = None
    if config.algorithm != "dynamic":
        g = build_instance(config)
    records = []
    runtimes = []
    traces = []
    for seed in config.seeds:
        t0 = time.perf_counter()
        rec, trace = run_trial(config, seed, g)
        if g is not None:
            rec["n"] = g.node_count
        runtimes.append(time.perf_counter() - t0)
        records.append(rec)
        traces.append(trace)
    return records, runtimes, traces


def records_to_csv(records: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for rec in records:
        row = {}
        for col in CSV_COLUMNS:
            val = rec.get(col, "")
            if isinstance(val, bool):
                val = int(val)
            if isinstance(val, float):
                val = f"{val:.9g}"
            row[col] = val
        w.writerow(row)
    return buf.getvalue()


def write_outputs(config: ExperimentConfig, records: list[dict],
                  runtimes: list[float], output: str | None,
                  fmt: str = "csv") -> str:
    """Write CSV and/or JSON; returns the CSV text (the determinism surface)."""
    csv_text = records_to_csv(records)
    if output:
        if fmt in ("csv", "both"):
            with open(output if fmt == "csv" else output + ".csv", "w") as f:
                f.write(csv_text)
        if fmt in ("json", "both"):
            path = output if fmt == "json" else output + ".json"
            payload = {"config": config.to_dict(),
                       "config_hash": config.config_hash(),
                       "records": records,
                       "timing": {"per_trial_sec": runtimes,
                                  "total_sec": sum(runtimes)}}
            with open(path, "w") as f:
                json.dump(payload, f, indent=1, sort_keys=True)
                f.write("\n")
    return csv_text


# ---------------------------------------------------------------------------
# Event-envelope verification.
# ---------------------------------------------------------------------------

@dataclass
class RoundEventStats:
    i: int
    envelope_center: float
    gamma: float
    palette_pass: float
    palette_n: int
    cdeg_pass: float
    cdeg_n: int
    sampled_pass: float
    sampled_n: int
    failed_degree: int
    failed_degree_bound: float
    failed_degree_ok: bool


@dataclass
class EventReport:
    rounds: list[RoundEventStats]
    palette_pass: float
    cdeg_pass: float
    sampled_pass: float
    failed_degree_ok: bool

    def passed(self, threshold: float = 0.99) -> bool:
        return (self.palette_pass >= threshold
                and self.cdeg_pass >= threshold
                and self.sampled_pass >= threshold
                and self.failed_degree_ok)


def _frac_within(values: np.ndarray, lo: float, hi: float) -> tuple[float, int]:
    n = len(values)
    if n == 0:
        return 1.0, 0
    ok = np.count_nonzero((values >= lo) & (values <= hi))
    return ok / n, n


def verify_events(trace: list[RoundTrace], params: Params,
                  tolerance_slack: float = 0.1) -> EventReport:
    """Check per-round palette sizes and c-degrees against the
    (1-eps)^{2(i-1)} * (1 +- (gamma_i + slack)) * delta envelope, per-node
    sampled fractions against eps +- (eps^2 + slack), and the per-round
    failed-edge degree against 9*eps^2*delta + 3*sqrt(delta*ln n)."""
    eps = params.epsilon
    delta = params.delta
    fail_bound = 9 * eps ** 2 * delta + 3 * math.sqrt(delta * math.log(max(params.n, 2)))
    rounds = []
    pal_w = np.array([0.0, 0.0])   # pass count, total
    cdeg_w = np.array([0.0, 0.0])
    samp_w = np.array([0.0, 0.0])
    all_fail_ok = True
    for rt in trace:
        gamma = params.gamma[rt.i - 1]
        center = (1 - eps) ** (2 * (rt.i - 1)) * delta
        width = (gamma + tolerance_slack) * center
        p_pass, p_n = _frac_within(rt.palette_sizes, center - width, center + width)
        c_pass, c_n = _frac_within(rt.cdeg_samples, center - width, center + width)
        s_lo = eps - (eps ** 2 + tolerance_slack)
        s_hi = eps + (eps ** 2 + tolerance_slack)
        s_pass, s_n = _frac_within(rt.sampled_fractions, s_lo, s_hi)
        f_ok = rt.failed_degree_max <= fail_bound
        all_fail_ok = all_fail_ok and f_ok
        pal_w += (p_pass * p_n, p_n)
        cdeg_w += (c_pass * c_n, c_n)
        samp_w += (s_pass * s_n, s_n)
        rounds.append(RoundEventStats(
            i=rt.i, envelope_center=center, gamma=gamma,
            palette_pass=p_pass, palette_n=p_n,
            cdeg_pass=c_pass, cdeg_n=c_n,
            sampled_pass=s_pass, sampled_n=s_n,
            failed_degree=rt.failed_degree_max,
            failed_degree_bound=fail_bound, failed_degree_ok=f_ok))
    return EventReport(
        rounds=rounds,
        palette_pass=pal_w[0] / pal_w[1] if pal_w[1] else 1.0,
        cdeg_pass=cdeg_w[0] / cdeg_w[1] if cdeg_w[1] else 1.0,
        sampled_pass=samp_w[0] / samp_w[1] if samp_w[1] else 1.0,
        failed_degree_ok=all_fail_ok)


# ---------------------------------------------------------------------------
# Total-variation distance.
# ---------------------------------------------------------------------------

@dataclass
class TvResult:
    tv: float
    n_a: int
    n_b: int


def tv_distance_test(samples_a: list, samples_b: list,
                     outcome_space: list | None = None) -> TvResult:
    """Empirical total-variation distance: half the L1 distance between the
    two empirical pmfs over the union of supports (or a given space)."""
    if not samples_a or not samples_b:
        raise EmptySamples("both sample sets must be nonempty")
    ca = Counter(samples_a)
    cb = Counter(samples_b)
    support = outcome_space if outcome_space is not None else set(ca) | set(cb)
    na = len(samples_a)
    nb = len(samples_b)
    tv = 0.5 * sum(abs(ca.get(x, 0) / na - cb.get(x, 0) / nb) for x in support)
    return TvResult(tv=tv, n_a=na, n_b=nb)


# ---------------------------------------------------------------------------
# Online replay validation.
# ---------------------------------------------------------------------------

@dataclass
class ReplayVerdict:
    valid: bool
    first_bad_index: int | None = None
    reason: str = ""


def replay_validate(final_colors: list[int], stream: list[tuple[int, int]],
                    rerun, cuts: int | None = None) -> ReplayVerdict:
    """Confirm a decision log is online: recomputing on every checked stream
    prefix must reproduce the logged prefix of colors exactly (so no decision
    used future arrivals or was revised).

    ``rerun(prefix)`` returns the colors an identically-seeded run assigns to
    that prefix.
    """
    m = len(stream)
    if len(final_colors) != m:
        return ReplayVerdict(False, None,
                             f"{len(final_colors)} decisions for {m} arrivals")
    if cuts is None:
        points = sorted({m, m // 2, m // 4, 3 * m // 4, 1, 2, m - 1})
    else:
        points = sorted({max(1, (m * k) // cuts) for k in range(1, cuts + 1)})
    points = [p for p in points if 1 <= p <= m]
    for k in points:
        got = rerun(stream[:k])
        for idx in range(k):
            if got[idx] != final_colors[idx]:
                return ReplayVerdict(False, idx,
                                     f"prefix of length {k} diverges")
    return ReplayVerdict(True)


def warmup_rerun_fn(n: int, delta: int, m: int, epsilon: float, K: int,
                    seed: int):
    """Prefix-rerun closure for replay_validate on the warm-up algorithm."""
    def rerun(prefix: list[tuple[int, int]]) -> list[int]:
        colorer = WarmupColorer(n, delta, m, epsilon, K,
                                rng=np.random.default_rng(seed))
        return [colorer.process(u, v) for u, v in prefix]
    return rerun
