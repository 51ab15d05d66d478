import math
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from nibblecolor.generators import (greedy_online, gen_near_regular,
                                    gen_random_order_stream,
                                    gen_update_sequence,
                                    gen_lower_bound_instance,
                                    LowerBoundParams, InfeasibleParams,
                                    ResourceLimit)
from nibblecolor.graph import Graph


def test_greedy_path():
    assert greedy_online([(0, 1), (1, 2), (2, 3)]) == [1, 2, 1]


def test_greedy_star():
    stream = [(0, leaf) for leaf in range(1, 6)]
    assert greedy_online(stream) == [1, 2, 3, 4, 5]


def test_greedy_triangle():
    assert greedy_online([(0, 1), (1, 2), (2, 0)]) == [1, 2, 3]


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=25, deadline=None)
def test_greedy_never_exceeds_2delta_minus_1(seed):
    g = gen_near_regular(24, 5, 0.3, seed=seed % 1000)
    stream = gen_random_order_stream(g, seed)
    colors = greedy_online(stream)
    deg = Counter()
    for (u, v), c in zip(stream, colors):
        deg[u] += 1
        deg[v] += 1
        dmax = max(deg[u], deg[v])
        assert c <= 2 * dmax - 1


def test_near_regular_k4():
    g = gen_near_regular(4, 3, 0.0, seed=0)
    assert g.edge_count == 6
    assert all(d == 3 for d in g.degree)


def test_near_regular_edgeless():
    g = gen_near_regular(10, 0, 0.0, seed=0)
    assert g.edge_count == 0


def test_near_regular_degree_window():
    g = gen_near_regular(2000, 500, 0.01, seed=3)
    assert all(495 <= d <= 500 for d in g.degree)
    assert g.max_degree() <= 500


def test_near_regular_infeasible():
    with pytest.raises(InfeasibleParams):
        gen_near_regular(5, 5, 0.0, seed=0)
    with pytest.raises(InfeasibleParams):
        gen_near_regular(5, 2, 0.0, seed=0)   # odd n, exact regularity


def test_near_regular_simplicity():
    g = gen_near_regular(50, 7, 0.05, seed=9)
    seen = set()
    for _, u, v in g.edges():
        assert u != v
        assert (u, v) not in seen
        seen.add((u, v))


def test_stream_singleton():
    g = Graph(2, 1)
    g.insert_edge(0, 1)
    assert gen_random_order_stream(g, 5) == [(0, 1)]


def test_stream_deterministic():
    g = gen_near_regular(30, 4, 0.2, seed=1)
    assert gen_random_order_stream(g, 7) == gen_random_order_stream(g, 7)
    assert gen_random_order_stream(g, 7) != gen_random_order_stream(g, 8)


def test_stream_uniform_over_orders():
    g = Graph(4, 2)
    g.insert_edge(0, 1)
    g.insert_edge(1, 2)
    g.insert_edge(2, 3)
    counts = Counter()
    trials = 60_000
    for seed in range(trials):
        counts[tuple(gen_random_order_stream(g, seed))] += 1
    assert len(counts) == 6
    for c in counts.values():
        assert abs(c / trials - 1 / 6) < 0.01


def test_update_sequence_insertions_only():
    ups = gen_update_sequence(10, 3, 12, churn=0.0, seed=0)
    assert all(op == "+" for op, _, _ in ups)


def test_update_sequence_prefix_degrees():
    ups = gen_update_sequence(12, 3, 400, churn=0.5, seed=2)
    deg = Counter()
    present = set()
    for op, u, v in ups:
        key = (min(u, v), max(u, v))
        if op == "+":
            assert key not in present
            present.add(key)
            deg[u] += 1
            deg[v] += 1
        else:
            assert key in present
            present.remove(key)
            deg[u] -= 1
            deg[v] -= 1
        assert deg[u] <= 3 and deg[v] <= 3


def test_update_sequence_deletion_share():
    n, delta, length, churn = 40, 8, 10_000, 0.5
    ups = gen_update_sequence(n, delta, length, churn, seed=11)
    warmup = min(length, (n * delta) // 4)
    deletions = sum(1 for op, _, _ in ups[warmup:] if op == "-")
    tail = length - warmup
    sigma = math.sqrt(tail * churn * (1 - churn))
    assert abs(deletions - churn * tail) <= 3 * sigma


def test_lower_bound_beta_delta2():
    params = LowerBoundParams(delta=2, copies=1)
    assert params.beta == 24
    assert params.nodes_per_copy == 49


def test_lower_bound_structure():
    params = LowerBoundParams(delta=2, copies=1, seed=4)
    g, stream = gen_lower_bound_instance(params)
    assert g.node_count == 49
    assert g.max_degree() == 2
    hub = 48
    assert g.degree[hub] == 2
    centers = [v for v in range(48) if v % 2 == 0]
    for c in centers:
        assert g.degree[c] in (1, 2)
    assert sorted(stream) == sorted(g.edge_list())


def test_lower_bound_resource_limit():
    with pytest.raises(ResourceLimit):
        gen_lower_bound_instance(LowerBoundParams(delta=2, copies=10 ** 6))


def test_lower_bound_max_copies():
    copies = LowerBoundParams.max_copies_for_budget(2, 10_000)
    assert copies == 10_000 // 49
