"""Simple undirected edge-weighted graphs with exact integer weights.

Vertex ids are dense naturals issued in creation order.  Adjacency rows are
flat ``array('q')`` buffers ``[nbr0, w0, nbr1, w1, ...]`` so that graphs with
millions of vertices stay affordable in CPython.
"""

from __future__ import annotations

import heapq
from array import array
from typing import Iterable, Iterator, NamedTuple


class GraphError(Exception):
    pass


class SelfLoop(GraphError):
    pass


class UnknownVertex(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class Unreachable(GraphError):
    pass


class Edge(NamedTuple):
    """Undirected edge reported from the perspective of endpoint ``u``."""

    u: int
    v: int
    w: int

    def key(self) -> tuple[int, int]:
        return (self.u, self.v) if self.u <= self.v else (self.v, self.u)


class WeightedGraph:
    """Mutable while under construction; treat as frozen once finalized."""

    __slots__ = ("_rows",)

    def __init__(self) -> None:
        self._rows: list[array] = []

    # -- construction ------------------------------------------------------

    def add_vertex(self) -> int:
        self._rows.append(array("q"))
        return len(self._rows) - 1

    def add_vertices(self, count: int) -> None:
        for _ in range(count):
            self._rows.append(array("q"))

    def add_edge(self, u: int, v: int, w: int) -> Edge:
        if u == v:
            raise SelfLoop(f"self-loop at vertex {u}")
        n = len(self._rows)
        if not (0 <= u < n) or not (0 <= v < n):
            raise UnknownVertex(f"edge ({u},{v}) references an unknown vertex")
        if w < 0:
            raise GraphError(f"negative weight {w}")
        row = self._rows[u]
        for i in range(0, len(row), 2):
            if row[i] == v:
                raise DuplicateEdge(f"edge ({u},{v}) already present")
        row.extend((v, w))
        self._rows[v].extend((u, w))
        return Edge(u, v, w)

    # -- queries -----------------------------------------------------------

    def __contains__(self, v: int) -> bool:
        return 0 <= v < len(self._rows)

    @property
    def vertex_count(self) -> int:
        return len(self._rows)

    @property
    def edge_count(self) -> int:
        return sum(len(r) for r in self._rows) // 4  # 2 entries per direction

    def degree(self, v: int) -> int:
        return len(self._rows[v]) // 2

    def neighbors(self, v: int) -> list[tuple[int, int]]:
        row = self._rows[v]
        return [(row[i], row[i + 1]) for i in range(0, len(row), 2)]

    def row(self, v: int) -> array:
        """Raw flat adjacency buffer of ``v`` (do not mutate)."""
        return self._rows[v]

    def edges(self) -> Iterator[Edge]:
        for u, row in enumerate(self._rows):
            for i in range(0, len(row), 2):
                v = row[i]
                if u < v:
                    yield Edge(u, v, row[i + 1])

    def edge_weight(self, u: int, v: int) -> int:
        row = self._rows[u]
        for i in range(0, len(row), 2):
            if row[i] == v:
                return row[i + 1]
        raise UnknownVertex(f"no edge ({u},{v})")

    def has_edge(self, u: int, v: int) -> bool:
        row = self._rows[u]
        return any(row[i] == v for i in range(0, len(row), 2))

    def total_weight(self) -> int:
        return sum(e.w for e in self.edges())

    def is_connected(self) -> bool:
        n = len(self._rows)
        if n == 0:
            return True
        seen = bytearray(n)
        seen[0] = 1
        stack = [0]
        reached = 1
        while stack:
            u = stack.pop()
            row = self._rows[u]
            for i in range(0, len(row), 2):
                v = row[i]
                if not seen[v]:
                    seen[v] = 1
                    reached += 1
                    stack.append(v)
        return reached == n

    def distinct_weight_count(self) -> int:
        return len(self.distinct_weights())

    def distinct_weights(self) -> set[int]:
        weights: set[int] = set()
        for row in self._rows:
            for i in range(1, len(row), 2):
                weights.add(row[i])
        return weights

    def copy(self) -> "WeightedGraph":
        g = WeightedGraph()
        g._rows = [array("q", r) for r in self._rows]
        return g


def distinct_weight_count(graph: WeightedGraph) -> int:
    return graph.distinct_weight_count()


def weight_lift(graph: WeightedGraph) -> WeightedGraph:
    """Copy of ``graph`` with every zero-weight edge raised to weight 1."""
    lifted = graph.copy()
    for row in lifted._rows:
        for i in range(1, len(row), 2):
            if row[i] == 0:
                row[i] = 1
    return lifted


# -- shortest paths ---------------------------------------------------------


def _dijkstra_from(
    rows: list, src: int, allowed: set[int] | None
) -> dict[int, tuple[int, int]]:
    """(cost, hop) distance field; hops break cost ties.

    Tracking hops keeps the lexicographic walk well-founded even across
    zero-weight cycles, which the gadget graphs contain everywhere.
    """
    dist: dict[int, tuple[int, int]] = {src: (0, 0)}
    heap = [(0, 0, src)]
    while heap:
        d, h, u = heapq.heappop(heap)
        if (d, h) > dist[u]:
            continue
        row = rows[u]
        for i in range(0, len(row), 2):
            v = row[i]
            if allowed is not None and v not in allowed:
                continue
            nd = (d + row[i + 1], h + 1)
            old = dist.get(v)
            if old is None or nd < old:
                dist[v] = nd
                heapq.heappush(heap, (nd[0], nd[1], v))
    return dist


def lex_shortest_path(
    rows: list, src: int, dst: int, allowed: set[int] | None = None
) -> tuple[int, list[int]]:
    """Minimum-cost path, tie-broken by fewest hops then smallest id sequence.

    The winner is extracted by walking greedily from ``src`` over a distance
    field computed from ``dst``: among neighbors that stay on some minimal
    (cost, hops) path, always take the smallest id.
    """
    if allowed is not None and (src not in allowed or dst not in allowed):
        raise Unreachable(f"{src} or {dst} outside the restriction set")
    if src == dst:
        return 0, [src]
    dist_to = _dijkstra_from(rows, dst, allowed)
    if src not in dist_to:
        raise Unreachable(f"no path from {src} to {dst}")
    total, hops = dist_to[src]
    path = [src]
    cur, cur_h = total, hops
    u = src
    while u != dst:
        row = rows[u]
        best = None
        best_d = (0, 0)
        for i in range(0, len(row), 2):
            v = row[i]
            if allowed is not None and v not in allowed:
                continue
            dv = dist_to.get(v)
            if (
                dv is not None
                and dv[0] + row[i + 1] == cur
                and dv[1] + 1 == cur_h
                and (best is None or v < best)
            ):
                best, best_d = v, dv
        if best is None:  # pragma: no cover - dist field guarantees progress
            raise Unreachable(f"no path from {src} to {dst}")
        cur, cur_h = best_d
        u = best
        path.append(u)
    return total, path


def shortest_path(
    graph: WeightedGraph,
    src: int,
    dst: int,
    restrict_to: Iterable[int] | str = "all",
) -> tuple[int, list[int]]:
    """Minimal-cost walk between two vertices.

    ``restrict_to`` limits the walk to a vertex subset ("all" lifts the
    restriction).  Equal-cost ties resolve to the lexicographically smallest
    vertex-id sequence, so results are bit-reproducible.
    """
    n = graph.vertex_count
    if not (0 <= src < n) or not (0 <= dst < n):
        raise UnknownVertex(f"shortest_path endpoints ({src},{dst}) unknown")
    allowed = None if restrict_to == "all" else set(restrict_to)
    return lex_shortest_path(graph._rows, src, dst, allowed)


# -- DOT export -------------------------------------------------------------


def export_dot(graph: WeightedGraph, annotations: dict[int, str] | None = None) -> str:
    """Render the graph as DOT text (UTF-8, LF).

    ``annotations`` maps vertex ids to role labels; unknown ids are ignored.
    Output is deterministic: vertices ascending, edges by (min, max) id.
    """
    notes = annotations or {}
    lines = ["graph exploration {"]
    for v in range(graph.vertex_count):
        note = notes.get(v)
        label = f"{v}\\n{note}" if note else str(v)
        lines.append(f'  {v} [label="{label}"];')
    for e in sorted(graph.edges(), key=lambda e: e.key()):
        a, b = e.key()
        lines.append(f'  {a} -- {b} [label="{e.w}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
