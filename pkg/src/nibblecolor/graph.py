"""Simple undirected graph with dynamic edge updates and a proper-coloring verifier.

All algorithms in this package share this representation: nodes are integers
0..n-1, edges are unordered pairs identified externally by (u, v) and
internally by a stable integer edge id.  Colors are positive integers; 0 is
the NULL sentinel for "uncolored".
"""

from __future__ import annotations

from dataclasses import dataclass, field


NULL_COLOR = 0


class GraphError(Exception):
    pass


class SelfLoop(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class MissingEdge(GraphError):
    pass


class DegreeBoundExceeded(GraphError):
    pass


class Graph:
    """Mutable simple graph with per-node adjacency and declared degree bound.

    Edge ids are allocated from a monotone counter, so an id is never reused
    by a different pair and stays stable for one edge's lifetime.  The
    declared ``max_degree_bound`` is an upper bound the caller promises (and,
    with ``enforce_degree_bound=True``, that insert_edge enforces); it is not
    recomputed from the adjacency.
    """

    def __init__(self, node_count: int, max_degree_bound: int,
                 enforce_degree_bound: bool = True):
        if node_count < 0 or max_degree_bound < 0:
            raise ValueError("node_count and max_degree_bound must be >= 0")
        self.node_count = node_count
        self.max_degree_bound = max_degree_bound
        self.enforce_degree_bound = enforce_degree_bound
        self.adjacency: list[dict[int, int]] = [dict() for _ in range(node_count)]
        self.degree: list[int] = [0] * node_count
        self.edge_count = 0
        self._edge_pairs: dict[int, tuple[int, int]] = {}
        self._next_edge_id = 0

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]

    def edge_id(self, u: int, v: int) -> int:
        try:
            return self.adjacency[u][v]
        except KeyError:
            raise MissingEdge(f"edge ({u}, {v}) not present") from None

    def endpoints(self, eid: int) -> tuple[int, int]:
        return self._edge_pairs[eid]

    def insert_edge(self, u: int, v: int) -> int:
        if u == v:
            raise SelfLoop(f"self-loop ({u}, {v})")
        if v in self.adjacency[u]:
            raise DuplicateEdge(f"edge ({u}, {v}) already present")
        if self.enforce_degree_bound:
            if self.degree[u] >= self.max_degree_bound:
                raise DegreeBoundExceeded(f"node {u} at degree bound")
            if self.degree[v] >= self.max_degree_bound:
                raise DegreeBoundExceeded(f"node {v} at degree bound")
        eid = self._next_edge_id
        self._next_edge_id += 1
        self.adjacency[u][v] = eid
        self.adjacency[v][u] = eid
        self.degree[u] += 1
        self.degree[v] += 1
        self.edge_count += 1
        self._edge_pairs[eid] = (u, v) if u < v else (v, u)
        return eid

    def delete_edge(self, u: int, v: int) -> None:
        if v not in self.adjacency[u]:
            raise MissingEdge(f"edge ({u}, {v}) not present")
        eid = self.adjacency[u].pop(v)
        del self.adjacency[v][u]
        self.degree[u] -= 1
        self.degree[v] -= 1
        self.edge_count -= 1
        del self._edge_pairs[eid]

    def edges(self):
        """Iterate (edge_id, u, v) with u < v, in ascending edge-id order."""
        for eid in sorted(self._edge_pairs):
            u, v = self._edge_pairs[eid]
            yield eid, u, v

    def edge_list(self) -> list[tuple[int, int]]:
        return [(u, v) for _, u, v in self.edges()]

    def neighbors(self, v: int):
        return self.adjacency[v].items()

    def max_degree(self) -> int:
        if self.node_count == 0:
            return 0
        return max(self.degree)


class EdgeColoring:
    """Partial edge coloring: edge id -> positive color, NULL_COLOR when unset."""

    def __init__(self, colors: dict[int, int] | None = None):
        self.color_of: dict[int, int] = dict(colors) if colors else {}

    def get(self, eid: int) -> int:
        return self.color_of.get(eid, NULL_COLOR)

    def set(self, eid: int, color: int) -> None:
        if color < 0:
            raise ValueError("colors are positive integers (0 = NULL)")
        self.color_of[eid] = color

    def unset(self, eid: int) -> None:
        self.color_of.pop(eid, None)

    def distinct_colors(self) -> int:
        return len({c for c in self.color_of.values() if c != NULL_COLOR})

    def max_color(self) -> int:
        return max((c for c in self.color_of.values()), default=NULL_COLOR)


@dataclass
class VerifyReport:
    valid: bool
    first_conflict: tuple[tuple[int, int], tuple[int, int]] | None = None
    uncolored_count: int = 0


def verify_proper_coloring(g: Graph, col: EdgeColoring,
                           require_complete: bool = False) -> VerifyReport:
    """Check that no two incident edges share a non-NULL color.

    Report-style: never raises.  ``first_conflict`` names the two offending
    edges (as endpoint pairs) when the coloring is improper.
    """
    uncolored = 0
    for eid, _, _ in g.edges():
        if col.get(eid) == NULL_COLOR:
            uncolored += 1
    conflict = None
    for v in range(g.node_count):
        seen: dict[int, int] = {}
        for u, eid in g.adjacency[v].items():
            c = col.get(eid)
            if c == NULL_COLOR:
                continue
            if c in seen:
                other = seen[c]
                conflict = (g.endpoints(other), g.endpoints(eid))
                break
            seen[c] = eid
        if conflict is not None:
            break
    valid = conflict is None and (not require_complete or uncolored == 0)
    return VerifyReport(valid=valid, first_conflict=conflict,
                        uncolored_count=uncolored)


def max_degree(g: Graph) -> int:
    return g.max_degree()


# ---------------------------------------------------------------------------
# File formats.
#
# Edge list: header "# n=<n> delta=<delta>", then one "u v" line per edge.
# Update stream: same header, then "+ u v" / "- u v" lines in arrival order.
# ---------------------------------------------------------------------------

def _parse_header(line: str) -> tuple[int, int]:
    parts = line.strip().lstrip("#").split()
    fields = dict(p.split("=", 1) for p in parts)
    return int(fields["n"]), int(fields["delta"])


def write_edge_list(g: Graph, path: str) -> None:
    with open(path, "w") as f:
        f.write(f"# n={g.node_count} delta={g.max_degree_bound}\n")
        for _, u, v in g.edges():
            f.write(f"{u} {v}\n")


def read_edge_list(path: str, enforce_degree_bound: bool = True) -> Graph:
    with open(path) as f:
        header = f.readline()
        n, delta = _parse_header(header)
        g = Graph(n, delta, enforce_degree_bound=enforce_degree_bound)
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            u, v = map(int, line.split())
            g.insert_edge(u, v)
    return g


def write_update_stream(n: int, delta: int,
                        updates: list[tuple[str, int, int]], path: str) -> None:
    with open(path, "w") as f:
        f.write(f"# n={n} delta={delta}\n")
        for op, u, v in updates:
            if op not in ("+", "-"):
                raise ValueError(f"bad update op {op!r}")
            f.write(f"{op} {u} {v}\n")


def read_update_stream(path: str) -> tuple[int, int, list[tuple[str, int, int]]]:
    with open(path) as f:
        n, delta = _parse_header(f.readline())
        updates = []
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            op, u, v = line.split()
            if op not in ("+", "-"):
                raise ValueError(f"bad update op {op!r}")
            updates.append((op, int(u), int(v)))
    return n, delta, updates


def read_stream(path: str) -> tuple[int, int, list[tuple[int, int]]]:
    """Read an edge list as an arrival-ordered stream (header + 'u v' lines)."""
    with open(path) as f:
        n, delta = _parse_header(f.readline())
        stream = []
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            u, v = map(int, line.split())
            stream.append((u, v))
    return n, delta, stream


def write_stream(n: int, delta: int, stream: list[tuple[int, int]], path: str) -> None:
    with open(path, "w") as f:
        f.write(f"# n={n} delta={delta}\n")
        for u, v in stream:
            f.write(f"{u} {v}\n")
