"""Command-line interface.

Subcommands: ``gen`` (instances to files), ``run`` (one algorithm over
seeds), ``verify`` (events / replay / distribution checks), ``bench``
(recourse-vs-n and colors-vs-epsilon sweeps).  Exit codes: 0 success,
1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import generators, harness
from .dynamic import DynamicColorer, recourse_stats
from .graph import (read_edge_list, write_edge_list, write_stream,
                    write_update_stream, read_stream)
from .harness import ExperimentConfig, ConfigError
from .nibble import derive_params, InvalidEpsilon


def _parse_seeds(args) -> tuple[int, ...]:
    if args.seeds:
        return tuple(int(s) for s in args.seeds.split(","))
    return (args.seed,)


def cmd_gen(args) -> int:
    if args.kind == "graph":
        g = generators.gen_near_regular(args.n, args.delta, args.slack,
                                        args.seed)
        write_edge_list(g, args.output)
    elif args.kind == "stream":
        if args.input:
            g = read_edge_list(args.input)
        else:
            g = generators.gen_near_regular(args.n, args.delta, args.slack,
                                            args.seed)
        stream = generators.gen_random_order_stream(g, args.seed)
        write_stream(g.node_count, g.max_degree_bound, stream, args.output)
    elif args.kind == "updates":
        ups = generators.gen_update_sequence(args.n, args.delta, args.length,
                                             args.churn, args.seed)
        write_update_stream(args.n, args.delta, ups, args.output)
    elif args.kind == "lowerbound":
        params = generators.LowerBoundParams(
            delta=args.delta, copies=args.copies, seed=args.seed,
            node_budget=args.node_budget)
        g, stream = generators.gen_lower_bound_instance(params)
        write_stream(g.node_count, g.max_degree_bound, stream, args.output)
    else:
        raise ConfigError(f"unknown kind {args.kind}")
    print(f"wrote {args.output}")
    return 0


def cmd_run(args) -> int:
    kind = "file" if args.input else "near_regular"
    config = ExperimentConfig(
        algorithm=args.algorithm, n=args.n, delta=args.delta,
        epsilon=args.eps, K=args.K, seeds=_parse_seeds(args),
        instance_kind=kind, instance_seed=args.instance_seed,
        regularity_slack=args.slack, input_path=args.input,
        updates=args.updates, churn=args.churn,
        gadget=args.gadget == "on",
        strict_regularity=args.strict_regularity)
    if kind == "file" and args.algorithm != "dynamic":
        g = read_edge_list(args.input)
        config.n = g.node_count
        config.delta = g.max_degree_bound
    if args.algorithm == "dynamic" and args.per_update_log:
        records = []
        runtimes = []
        with open(args.per_update_log, "w") as f:
            for seed in config.seeds:
                rec, _ = harness.run_trial(
                    config, seed,
                    update_sink=lambda d: f.write(json.dumps(d) + "\n"))
                records.append(rec)
                runtimes.append(0.0)
    else:
        records, runtimes, _ = harness.run_experiment(config)
    csv_text = harness.write_outputs(config, records, runtimes, args.output,
                                     args.format)
    if not args.output:
        sys.stdout.write(csv_text)
    bad = [r for r in records if not r.get("proper", False)]
    if bad:
        print(f"IMPROPER coloring in {len(bad)} trial(s)", file=sys.stderr)
        return 1
    return 0


def cmd_verify(args) -> int:
    if args.what == "events":
        config = ExperimentConfig(
            algorithm="basic", n=args.n, delta=args.delta, epsilon=args.eps,
            K=args.K, seeds=_parse_seeds(args), instance_seed=args.instance_seed,
            regularity_slack=args.slack, rounds_override=args.rounds,
            trace=True, tolerance_slack=args.event_slack)
        g = harness.build_instance(config)
        params = derive_params(config.n, config.delta, config.epsilon,
                               config.K, rounds=config.rounds_override)
        ok = True
        for seed in config.seeds:
            rec, trace = harness.run_trial(config, seed, g)
            report = harness.verify_events(trace, params, config.tolerance_slack)
            line = (f"seed {seed}: palette {report.palette_pass:.4f} "
                    f"cdeg {report.cdeg_pass:.4f} "
                    f"sampled {report.sampled_pass:.4f} "
                    f"failed_degree_ok {report.failed_degree_ok}")
            print(line)
            ok = ok and report.passed(args.threshold)
        print("PASS" if ok else "FAIL")
        return 0 if ok else 1

    if args.what == "replay":
        if args.input:
            n, delta, stream = read_stream(args.input)
        else:
            g = generators.gen_near_regular(args.n, args.delta, args.slack,
                                            args.instance_seed)
            stream = generators.gen_random_order_stream(g, args.seed)
            n, delta = g.node_count, g.max_degree_bound
        if args.algorithm == "greedy":
            colors = generators.greedy_online(stream)
            verdict = harness.replay_validate(colors, stream,
                                              generators.greedy_online)
        else:
            from .random_order import run_warmup
            rng = np.random.default_rng(args.seed)
            coloring, _, _ = run_warmup(stream, n, delta, len(stream),
                                        args.eps, args.K, rng=rng)
            colors = [coloring.get(i) for i in range(len(stream))]
            rerun = harness.warmup_rerun_fn(n, delta, len(stream), args.eps,
                                            args.K, args.seed)
            verdict = harness.replay_validate(colors, stream, rerun)
        print(f"replay valid: {verdict.valid}"
              + ("" if verdict.valid else f" ({verdict.reason})"))
        return 0 if verdict.valid else 1

    if args.what == "distribution":
        # toy check: a fresh round-1 edge's tentative color is uniform on [C]
        trials = args.trials
        override = {(0, 1): 1}
        samples = []
        for seed in range(trials):
            eng = DynamicColorer(4, 2, args.eps, args.K, seed=seed,
                                 gadget=False, round_override=override)
            eng.apply_update("+", 0, 1)
            samples.append(eng.real_edge_state()[(0, 1)])
        eng0 = DynamicColorer(4, 2, args.eps, args.K, seed=0, gadget=False,
                              round_override=override)
        uniform = []
        reps = max(1, trials // eng0.C)
        for c in range(1, eng0.C + 1):
            uniform.extend([(c, False)] * reps)
        res = harness.tv_distance_test(samples, uniform)
        print(f"tv = {res.tv:.4f} over {res.n_a}/{res.n_b} samples")
        ok = res.tv < args.tv_threshold
        print("PASS" if ok else "FAIL")
        return 0 if ok else 1

    raise ConfigError(f"unknown verify target {args.what}")


def cmd_bench(args) -> int:
    rows = []
    if args.what == "recourse-vs-n":
        sizes = [int(x) for x in args.sizes.split(",")]
        for n in sizes:
            ups = generators.gen_update_sequence(n, args.delta, args.updates,
                                                 args.churn, args.instance_seed)
            means = []
            for seed in _parse_seeds(args):
                eng = DynamicColorer(n, args.delta, args.eps, args.K,
                                     seed=seed, gadget=args.gadget == "on")
                for op, u, v in ups:
                    eng.apply_update(op, u, v)
                means.append(recourse_stats(eng.log)["mean"])
            rows.append({"n": n, "delta": args.delta, "eps": args.eps,
                         "mean_recourse": f"{float(np.mean(means)):.6f}"})
    elif args.what == "colors-vs-eps":
        eps_list = [float(x) for x in args.eps_list.split(",")]
        g = generators.gen_near_regular(args.n, args.delta, args.slack,
                                        args.instance_seed)
        for eps in eps_list:
            try:
                params = derive_params(g.node_count, args.delta, eps, args.K)
            except InvalidEpsilon:
                continue
            from .nibble import run_basic
            totals = []
            for seed in _parse_seeds(args):
                rng = np.random.default_rng(seed)
                _, metrics, _ = run_basic(g, params, rng)
                totals.append(metrics.colors_used)
            rows.append({"n": g.node_count, "delta": args.delta, "eps": eps,
                         "mean_colors": f"{float(np.mean(totals)):.3f}"})
    else:
        raise ConfigError(f"unknown bench target {args.what}")
    header = list(rows[0].keys()) if rows else []
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(row[h]) for h in header))
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nibblecolor")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, updates=False):
        sp.add_argument("--n", type=int, default=100)
        sp.add_argument("--delta", type=int, default=10)
        sp.add_argument("--eps", type=float, default=0.1)
        sp.add_argument("--K", type=int, default=1)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--seeds", type=str, default="")
        sp.add_argument("--instance-seed", type=int, default=0)
        sp.add_argument("--slack", type=float, default=0.02)
        sp.add_argument("--input", type=str, default=None)
        sp.add_argument("--output", type=str, default=None)
        if updates:
            sp.add_argument("--updates", type=int, default=1000)
            sp.add_argument("--churn", type=float, default=0.3)
            sp.add_argument("--gadget", choices=("on", "off"), default="on")

    sp = sub.add_parser("gen", help="generate instances")
    sp.add_argument("kind", choices=("graph", "stream", "updates", "lowerbound"))
    common(sp)
    sp.add_argument("--length", type=int, default=1000)
    sp.add_argument("--churn", type=float, default=0.3)
    sp.add_argument("--copies", type=int, default=1)
    sp.add_argument("--node-budget", type=int, default=10_000)
    sp.set_defaults(fn=cmd_gen)

    sp = sub.add_parser("run", help="run an algorithm over seeds")
    sp.add_argument("algorithm", choices=harness.ALGORITHMS)
    common(sp, updates=True)
    sp.add_argument("--format", choices=("csv", "json", "both"), default="csv")
    sp.add_argument("--strict-regularity", action="store_true")
    sp.add_argument("--per-update-log", type=str, default=None,
                    help="dynamic only: write one JSON report line per update")
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("verify", help="statistical / replay verification")
    sp.add_argument("what", choices=("events", "replay", "distribution"))
    common(sp)
    sp.add_argument("--algorithm", choices=("greedy", "warmup"),
                    default="warmup")
    sp.add_argument("--rounds", type=int, default=None)
    sp.add_argument("--event-slack", type=float, default=0.1)
    sp.add_argument("--threshold", type=float, default=0.99,
                    help="events: required pass fraction")
    sp.add_argument("--tv-threshold", type=float, default=0.05,
                    help="distribution: max tolerated TV distance")
    sp.add_argument("--trials", type=int, default=2000)
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("bench", help="parameter sweeps")
    sp.add_argument("what", choices=("recourse-vs-n", "colors-vs-eps"))
    common(sp, updates=True)
    sp.add_argument("--sizes", type=str, default="250,500,1000")
    sp.add_argument("--eps-list", type=str, default="0.05,0.1,0.2")
    sp.set_defaults(fn=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, InvalidEpsilon, generators.InfeasibleParams,
            FileNotFoundError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
