import itertools

import pytest
from hypothesis import given, settings, strategies as st

from nibblecolor.graph import (Graph, EdgeColoring, verify_proper_coloring,
                               max_degree, NULL_COLOR, SelfLoop,
                               DuplicateEdge, MissingEdge,
                               DegreeBoundExceeded, write_edge_list,
                               read_edge_list, write_update_stream,
                               read_update_stream)


def test_first_insertion():
    g = Graph(4, 3)
    eid = g.insert_edge(0, 1)
    assert eid == 0
    assert g.degree[0] == 1 and g.degree[1] == 1
    assert g.edge_count == 1


def test_duplicate_edge_rejected():
    g = Graph(4, 3)
    g.insert_edge(0, 1)
    with pytest.raises(DuplicateEdge):
        g.insert_edge(0, 1)
    with pytest.raises(DuplicateEdge):
        g.insert_edge(1, 0)


def test_self_loop_rejected():
    g = Graph(4, 3)
    with pytest.raises(SelfLoop):
        g.insert_edge(3, 3)


def test_degree_bound_enforced():
    g = Graph(4, 1)
    g.insert_edge(0, 1)
    with pytest.raises(DegreeBoundExceeded):
        g.insert_edge(0, 2)
    g2 = Graph(4, 1, enforce_degree_bound=False)
    g2.insert_edge(0, 1)
    g2.insert_edge(0, 2)   # allowed when the caller opts out
    assert g2.degree[0] == 2


def test_insert_delete_roundtrip():
    g = Graph(4, 3)
    g.insert_edge(0, 1)
    g.delete_edge(0, 1)
    assert g.edge_count == 0
    assert g.degree[0] == 0 and g.degree[1] == 0


def test_delete_missing():
    g = Graph(4, 3)
    with pytest.raises(MissingEdge):
        g.delete_edge(0, 1)


def test_degree_bookkeeping():
    g = Graph(4, 3)
    g.insert_edge(0, 1)
    g.insert_edge(1, 2)
    g.delete_edge(0, 1)
    assert g.degree[1] == 1


def test_edge_id_stable_and_fresh():
    g = Graph(4, 3)
    e0 = g.insert_edge(0, 1)
    g.delete_edge(0, 1)
    e1 = g.insert_edge(0, 1)
    assert e1 != e0   # ids are never reused by a different lifetime


def test_max_degree():
    assert max_degree(Graph(0, 0)) == 0
    assert max_degree(Graph(5, 3)) == 0
    star = Graph(6, 5)
    for leaf in range(1, 6):
        star.insert_edge(0, leaf)
    assert max_degree(star) == 5
    tri = Graph(3, 2)
    tri.insert_edge(0, 1)
    tri.insert_edge(1, 2)
    tri.insert_edge(2, 0)
    assert max_degree(tri) == 2


def _triangle_with_colors(c0, c1, c2):
    g = Graph(3, 2)
    ids = [g.insert_edge(0, 1), g.insert_edge(1, 2), g.insert_edge(2, 0)]
    col = EdgeColoring()
    for eid, c in zip(ids, (c0, c1, c2)):
        col.set(eid, c)
    return g, col


def test_verify_triangle_valid():
    g, col = _triangle_with_colors(1, 2, 3)
    assert verify_proper_coloring(g, col).valid


def test_verify_triangle_conflict():
    g, col = _triangle_with_colors(1, 1, 2)
    rep = verify_proper_coloring(g, col)
    assert not rep.valid
    assert rep.first_conflict is not None
    e1, e2 = rep.first_conflict
    assert {e1, e2} == {(0, 1), (1, 2)}


def test_verify_incomplete():
    g = Graph(3, 2)
    a = g.insert_edge(0, 1)
    g.insert_edge(1, 2)
    col = EdgeColoring({a: 1})
    rep = verify_proper_coloring(g, col, require_complete=True)
    assert not rep.valid
    assert rep.uncolored_count == 1
    assert verify_proper_coloring(g, col, require_complete=False).valid


def _brute_force_conflict(g: Graph, col: EdgeColoring) -> bool:
    """Quadratic scan over all edge pairs."""
    edges = list(g.edges())
    for (e1, u1, v1), (e2, u2, v2) in itertools.combinations(edges, 2):
        if {u1, v1} & {u2, v2}:
            c1, c2 = col.get(e1), col.get(e2)
            if c1 != NULL_COLOR and c1 == c2:
                return True
    return False


def test_verifier_matches_brute_force_exhaustively():
    # every graph with <= 8 edges on a 5-node universe, several colorings each
    pairs = list(itertools.combinations(range(5), 2))
    for mask in range(1 << len(pairs)):
        if bin(mask).count("1") > 8:
            continue
        g = Graph(5, 4, enforce_degree_bound=False)
        ids = []
        for i, (u, v) in enumerate(pairs):
            if mask >> i & 1:
                ids.append(g.insert_edge(u, v))
        for palette in ((1,), (1, 2), (1, 2, 3)):
            col = EdgeColoring()
            for k, eid in enumerate(ids):
                col.set(eid, palette[k % len(palette)])
            fast = verify_proper_coloring(g, col).valid
            assert fast == (not _brute_force_conflict(g, col))


@given(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)), max_size=60))
@settings(max_examples=120, deadline=None)
def test_degrees_match_recount_under_churn(ops):
    g = Graph(10, 9, enforce_degree_bound=False)
    for u, v in ops:
        if u == v:
            continue
        if g.has_edge(u, v):
            g.delete_edge(u, v)
        else:
            g.insert_edge(u, v)
    recount = [len(g.adjacency[v]) for v in range(10)]
    assert recount == g.degree
    assert sum(recount) == 2 * g.edge_count
    for v in range(10):
        for u, eid in g.neighbors(v):
            assert g.adjacency[u][v] == eid


def test_edge_list_roundtrip(tmp_path):
    g = Graph(5, 3)
    g.insert_edge(0, 1)
    g.insert_edge(1, 2)
    g.insert_edge(3, 4)
    path = str(tmp_path / "g.edges")
    write_edge_list(g, path)
    g2 = read_edge_list(path)
    assert g2.node_count == 5 and g2.max_degree_bound == 3
    assert g2.edge_list() == g.edge_list()


def test_update_stream_roundtrip(tmp_path):
    ups = [("+", 0, 1), ("+", 1, 2), ("-", 0, 1)]
    path = str(tmp_path / "u.stream")
    write_update_stream(6, 4, ups, path)
    n, delta, got = read_update_stream(path)
    assert (n, delta) == (6, 4)
    assert got == ups
