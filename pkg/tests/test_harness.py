import dataclasses
import json
import subprocess
import sys

import numpy as np
import pytest

from nibblecolor.generators import (gen_near_regular, gen_random_order_stream,
                                    greedy_online)
from nibblecolor.harness import (ExperimentConfig, ConfigError, run_experiment,
                                 records_to_csv, write_outputs, verify_events,
                                 tv_distance_test, EmptySamples,
                                 replay_validate, warmup_rerun_fn)
from nibblecolor.nibble import derive_params, run_basic


# -- config -------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(algorithm="nope")
    with pytest.raises(ConfigError):
        ExperimentConfig(algorithm="basic", instance_kind="file")
    cfg = ExperimentConfig(algorithm="basic", n=10, delta=3)
    assert len(cfg.config_hash()) == 16


def test_config_hash_sensitivity():
    a = ExperimentConfig(algorithm="basic", n=10, delta=3, seeds=(1,))
    b = ExperimentConfig(algorithm="basic", n=10, delta=3, seeds=(2,))
    assert a.config_hash() != b.config_hash()


# -- run_experiment ------------------------------------------------------------

def test_greedy_record_on_path():
    # 3-edge path: first-fit uses 2 colors
    from nibblecolor.graph import Graph, write_edge_list
    g = Graph(4, 2)
    g.insert_edge(0, 1)
    g.insert_edge(1, 2)
    g.insert_edge(2, 3)
    import tempfile, os
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "p.edges")
        write_edge_list(g, path)
        cfg = ExperimentConfig(algorithm="greedy", n=4, delta=2, seeds=(0,),
                               instance_kind="file", input_path=path)
        records, _, _ = run_experiment(cfg)
    assert records[0]["colors_used"] == 2
    assert records[0]["proper"]


def test_basic_eps0_override_pure_greedy_band():
    cfg = ExperimentConfig(algorithm="basic", n=30, delta=4, epsilon=0.0,
                           K=1, seeds=(1,), regularity_slack=0.2,
                           rounds_override=2)
    records, _, _ = run_experiment(cfg)
    rec = records[0]
    assert rec["proper"]
    assert rec["tentative_band_max"] == 0          # phase one colored nothing
    assert rec["greedy_band_min"] > rec["band_floor"]


def test_rerun_is_byte_identical():
    cfg = ExperimentConfig(algorithm="warmup", n=60, delta=8, epsilon=0.2,
                           K=1, seeds=(0, 1, 2), regularity_slack=0.1)
    rec1, _, _ = run_experiment(cfg)
    rec2, _, _ = run_experiment(cfg)
    assert records_to_csv(rec1) == records_to_csv(rec2)


def test_csv_stable_columns(tmp_path):
    cfg = ExperimentConfig(algorithm="greedy", n=20, delta=4, seeds=(0,),
                           regularity_slack=0.2)
    records, runtimes, _ = run_experiment(cfg)
    out = str(tmp_path / "out")
    csv_text = write_outputs(cfg, records, runtimes, out, fmt="both")
    header = csv_text.splitlines()[0].split(",")
    assert header[:3] == ["config_hash", "algorithm", "seed"]
    with open(out + ".json") as f:
        payload = json.load(f)
    assert payload["config_hash"] == cfg.config_hash()
    assert len(payload["records"]) == 1
    assert "timing" in payload
    with open(out + ".csv") as f:
        assert f.read() == csv_text


def test_dynamic_trial_records_recourse():
    cfg = ExperimentConfig(algorithm="dynamic", n=20, delta=4, epsilon=0.2,
                           K=1, seeds=(0,), updates=120, churn=0.3)
    records, _, _ = run_experiment(cfg)
    rec = records[0]
    assert rec["proper"]
    assert rec["recourse_mean"] >= 0
    extra = json.loads(rec["extra"])
    assert extra["updates"] == 120


# -- verify_events ----------------------------------------------------------------

def _traced_run(n, delta, eps, K, rounds, seed, instance_seed=0, slack=0.005):
    g = gen_near_regular(n, delta, slack, instance_seed)
    params = derive_params(n, delta, eps, K, rounds=rounds)
    _, _, p1 = run_basic(g, params, np.random.default_rng(seed), trace=True)
    return params, p1.trace


def test_verify_events_round1_exact():
    # round-1 palettes equal C: inside the envelope when degrees are near delta
    params, trace = _traced_run(300, 60, 0.1, 48, rounds=2, seed=0)
    report = verify_events(trace, params, tolerance_slack=0.1)
    assert report.rounds[0].palette_pass == 1.0
    assert report.rounds[0].cdeg_pass == 1.0


def test_verify_events_passes_at_moderate_scale():
    params, trace = _traced_run(500, 120, 0.1, 48, rounds=3, seed=1)
    report = verify_events(trace, params, tolerance_slack=0.1)
    assert report.passed(0.99)


def test_verify_events_negative_control():
    # halving the envelopes and dropping the slack must break the check
    params, trace = _traced_run(500, 120, 0.1, 48, rounds=3, seed=1)
    halved = dataclasses.replace(
        params, gamma=tuple(x / 2 for x in params.gamma))
    report = verify_events(trace, halved, tolerance_slack=0.0)
    assert not report.passed(0.99)
    assert report.sampled_pass < 0.99


# -- tv distance --------------------------------------------------------------------

def test_tv_identical():
    assert tv_distance_test([1, 2, 2], [2, 1, 2]).tv == 0.0


def test_tv_disjoint():
    assert tv_distance_test([1, 1], [2, 3]).tv == 1.0


def test_tv_same_distribution_small():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 4, size=100_000).tolist()
    b = rng.integers(0, 4, size=100_000).tolist()
    assert tv_distance_test(a, b).tv < 0.02


def test_tv_empty_samples():
    with pytest.raises(EmptySamples):
        tv_distance_test([], [1])


# -- replay ----------------------------------------------------------------------------

def test_replay_greedy_valid():
    g = gen_near_regular(40, 6, 0.1, seed=2)
    stream = gen_random_order_stream(g, 3)
    colors = greedy_online(stream)
    assert replay_validate(colors, stream, greedy_online).valid


def test_replay_detects_injected_recolor():
    g = gen_near_regular(40, 6, 0.1, seed=2)
    stream = gen_random_order_stream(g, 3)
    colors = greedy_online(stream)
    colors[len(colors) // 3] += 1          # retroactive recolor
    verdict = replay_validate(colors, stream, greedy_online)
    assert not verdict.valid
    assert verdict.first_bad_index == len(colors) // 3


def test_replay_warmup_valid():
    from nibblecolor.random_order import run_warmup
    n, delta, eps, seed = 50, 6, 0.2, 4
    g = gen_near_regular(n, delta, 0.1, seed=1)
    stream = gen_random_order_stream(g, seed)
    coloring, _, _ = run_warmup(stream, n, delta, len(stream), eps, 1,
                                rng=np.random.default_rng(seed))
    colors = [coloring.get(i) for i in range(len(stream))]
    rerun = warmup_rerun_fn(n, delta, len(stream), eps, 1, seed)
    assert replay_validate(colors, stream, rerun).valid


def test_replay_length_mismatch():
    verdict = replay_validate([1], [(0, 1), (1, 2)], greedy_online)
    assert not verdict.valid


# -- CLI ---------------------------------------------------------------------------------

def _cli(*args):
    return subprocess.run([sys.executable, "-m", "nibblecolor.cli", *args],
                          capture_output=True, text=True)


def test_cli_run_exit_codes(tmp_path):
    out = str(tmp_path / "r.csv")
    res = _cli("run", "greedy", "--n", "24", "--delta", "4", "--slack", "0.2",
               "--seed", "1", "--output", out)
    assert res.returncode == 0, res.stderr
    with open(out) as f:
        assert f.readline().startswith("config_hash,")


def test_cli_config_error_exit_2():
    res = _cli("run", "basic", "--n", "30", "--delta", "5", "--eps", "0.9",
               "--K", "48")
    assert res.returncode == 2
    assert "config error" in res.stderr


def test_cli_gen_and_run_file(tmp_path):
    graph_path = str(tmp_path / "g.edges")
    res = _cli("gen", "graph", "--n", "30", "--delta", "4", "--slack", "0.1",
               "--seed", "2", "--output", graph_path)
    assert res.returncode == 0, res.stderr
    res = _cli("run", "warmup", "--input", graph_path, "--eps", "0.2",
               "--K", "1", "--seeds", "0,1")
    assert res.returncode == 0, res.stderr
    assert res.stdout.count("\n") == 3      # header + 2 records


def test_cli_verify_events(tmp_path):
    res = _cli("verify", "events", "--n", "200", "--delta", "40", "--eps",
               "0.1", "--K", "48", "--rounds", "2", "--seed", "0")
    assert res.returncode == 0, res.stderr + res.stdout
    assert "PASS" in res.stdout


def test_cli_verify_replay():
    res = _cli("verify", "replay", "--algorithm", "warmup", "--n", "40",
               "--delta", "6", "--eps", "0.2", "--K", "1", "--seed", "3",
               "--slack", "0.15")
    assert res.returncode == 0, res.stderr + res.stdout


def test_cli_verify_distribution():
    res = _cli("verify", "distribution", "--eps", "0.2", "--K", "1",
               "--trials", "1500")
    assert res.returncode == 0, res.stderr + res.stdout
    assert "PASS" in res.stdout


def test_cli_dynamic_from_update_file(tmp_path):
    ups_path = str(tmp_path / "u.updates")
    res = _cli("gen", "updates", "--n", "24", "--delta", "5", "--length",
               "150", "--churn", "0.4", "--seed", "2", "--output", ups_path)
    assert res.returncode == 0, res.stderr
    out1 = _cli("run", "dynamic", "--input", ups_path, "--eps", "0.2",
                "--K", "1", "--seeds", "0,1")
    out2 = _cli("run", "dynamic", "--input", ups_path, "--eps", "0.2",
                "--K", "1", "--seeds", "0,1")
    assert out1.returncode == 0, out1.stderr
    assert out1.stdout == out2.stdout
    assert ",dynamic,0,24,5," in out1.stdout


def test_cli_bench_recourse(tmp_path):
    out = str(tmp_path / "bench.csv")
    res = _cli("bench", "recourse-vs-n", "--sizes", "12,16", "--delta", "4",
               "--eps", "0.2", "--K", "1", "--updates", "60", "--seeds", "0",
               "--output", out)
    assert res.returncode == 0, res.stderr
    with open(out) as f:
        lines = f.read().splitlines()
    assert lines[0] == "n,delta,eps,mean_recourse"
    assert len(lines) == 3
