"""Reference deterministic exploration algorithms and their registry."""

from __future__ import annotations

import heapq
from typing import Callable

from .engine import KnowledgeView
from .graphs import Edge

# Beyond this many settled vertices the planner hands the distance fields to
# scipy's C implementation over a cached CSR snapshot of the known graph.
_SMALL_BALL_LIMIT = 20000


def _tight_lex_walk(view: KnowledgeView, src: int, dst: int, dist_to) -> list[int]:
    """Lexicographically-first simple path from src to dst through edges that
    stay on some minimum-cost path (``dist_to`` maps/array from dst).

    Smallest-id-first depth-first search with backtracking; zero-weight ties
    cannot trap it because the walk never revisits a vertex.
    """
    rows = view.rows
    d = dist_to.get
    path = [src]
    on_path = {src}
    iters: list[list[int]] = [sorted_tight_neighbors(rows, src, d)]
    while path:
        cur = path[-1]
        if cur == dst:
            return path
        choices = iters[-1]
        advanced = False
        while choices:
            nxt = choices.pop(0)
            if nxt in on_path:
                continue
            path.append(nxt)
            on_path.add(nxt)
            iters.append(sorted_tight_neighbors(rows, nxt, d))
            advanced = True
            break
        if not advanced:
            if cur == dst:
                return path
            path.pop()
            on_path.discard(cur)
            iters.pop()
    raise RuntimeError(f"no tight path from {src} to {dst}")  # pragma: no cover


def sorted_tight_neighbors(rows, u: int, d: Callable[[int], int | None]) -> list[int]:
    du = d(u)
    out = []
    row = rows[u]
    if row is None or du is None:
        return out
    for i in range(0, len(row), 2):
        v = row[i]
        dv = d(v)
        if dv is not None and dv + row[i + 1] == du:
            out.append(v)
    out.sort()
    return out


class NearestNeighborExplorer:
    """Always walks to the cheapest-to-reach unvisited known vertex.

    Ties on distance resolve to the smallest vertex id; the route itself is
    the lexicographically-first minimum-cost simple path.  Once every known
    vertex is visited it heads back to the origin the same way.
    """

    name = "nearest_neighbor"

    def __init__(self) -> None:
        self._plan: list[Edge] = []
        self._csr = None
        self._csr_edges = -1
        self._csr_n = -1

    def decide(self, view: KnowledgeView) -> Edge:
        if self._plan and self._plan[0].u == view.position:
            return self._plan.pop(0)
        self._plan = self._replan(view)
        return self._plan.pop(0)

    # -- planning ----------------------------------------------------------

    def _replan(self, view: KnowledgeView) -> list[Edge]:
        src = view.position
        target, dist_field = self._pick_target(view, src)
        path = _tight_lex_walk(view, src, target, dist_field)
        plan = []
        rows = view.rows
        for a, b in zip(path, path[1:]):
            row = rows[a]
            for i in range(0, len(row), 2):
                if row[i] == b:
                    plan.append(Edge(a, b, row[i + 1]))
                    break
        return plan

    def _pick_target(self, view: KnowledgeView, src: int):
        """Nearest unvisited vertex (origin if none) plus a distance field
        from that target usable for tight-path extraction."""
        goal_set = view.frontier if view.frontier else {view.origin}
        found = self._small_search(view, src, goal_set)
        if found is not None:
            target, radius = found
            field = self._small_field(view, target, radius)
            if field is not None:
                return target, field
        return self._scipy_target(view, src, goal_set)

    def _small_search(self, view, src, goal_set):
        """Early-stopped Dijkstra; returns (target, its distance) or None if
        the ball outgrew the small-search limit."""
        rows = view.rows
        dist = {src: 0}
        done = set()
        heap = [(0, src)]
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            if u in goal_set:
                return u, d
            if len(done) > _SMALL_BALL_LIMIT:
                return None
            row = rows[u]
            if row is None:
                continue
            for i in range(0, len(row), 2):
                v = row[i]
                nd = d + row[i + 1]
                old = dist.get(v)
                if old is None or nd < old:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        raise RuntimeError("no reachable goal in known graph")  # pragma: no cover

    def _small_field(self, view, target: int, radius: int):
        """Distance field from ``target`` out to ``radius`` (inclusive)."""
        rows = view.rows
        dist = {target: 0}
        done = set()
        heap = [(0, target)]
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            if len(done) > 4 * _SMALL_BALL_LIMIT:
                return None
            row = rows[u]
            if row is None:
                continue
            for i in range(0, len(row), 2):
                v = row[i]
                nd = d + row[i + 1]
                if nd > radius:
                    continue
                old = dist.get(v)
                if old is None or nd < old:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return dist

    # -- scipy escalation ----------------------------------------------------

    def _known_edge_total(self, view) -> int:
        return sum(len(r) for r in view.rows if r is not None)

    def _refresh_csr(self, view) -> None:
        import numpy as np
        from scipy.sparse import csr_matrix

        n = len(view.rows)
        total = self._known_edge_total(view)
        if self._csr is not None and self._csr_n == n and total <= self._csr_edges:
            return
        us, vs, ws = [], [], []
        for u, row in enumerate(view.rows):
            if row is None:
                continue
            for i in range(0, len(row), 2):
                us.append(u)
                vs.append(row[i])
                ws.append(row[i + 1])
        data = np.asarray(ws, dtype=np.float64)
        mat = csr_matrix(
            (data, (np.asarray(us), np.asarray(vs))), shape=(n, n)
        )
        self._csr = mat
        self._csr_edges = total
        self._csr_n = n

    def _scipy_target(self, view, src: int, goal_set):
        import numpy as np
        from scipy.sparse.csgraph import dijkstra

        self._refresh_csr(view)
        d_src = dijkstra(self._csr, directed=False, indices=src)
        target = None
        best = None
        for g in sorted(goal_set):
            dg = d_src[g]
            if np.isinf(dg):
                continue
            if best is None or dg < best:
                best, target = dg, g
        if target is None:  # pragma: no cover
            raise RuntimeError("no reachable goal in known graph")
        d_t = dijkstra(self._csr, directed=False, indices=target)
        return target, _FieldDict(d_t)


class _FieldDict(dict):
    """Adapter presenting a numpy distance vector as a sparse mapping."""

    def __init__(self, arr):
        super().__init__()
        self._arr = arr

    def get(self, v, default=None):
        import numpy as np

        if v >= len(self._arr):
            return default
        val = self._arr[v]
        if np.isinf(val):
            return default
        return int(val)


class DepthFirstExplorer:
    """Depth-first in discovery order: cheapest (then smallest-id) known edge
    to an unvisited vertex, backtracking one tree edge when none remains."""

    name = "dfs"

    def __init__(self) -> None:
        self._stack: list[Edge] = []

    def decide(self, view: KnowledgeView) -> Edge:
        pos = view.position
        row = view.rows[pos]
        best_v = -1
        best_w = -1
        if row is not None:
            for i in range(0, len(row), 2):
                v = row[i]
                if view.visited_flags[v]:
                    continue
                w = row[i + 1]
                if best_v < 0 or w < best_w or (w == best_w and v < best_v):
                    best_v, best_w = v, w
        if best_v >= 0:
            edge = Edge(pos, best_v, best_w)
            self._stack.append(edge)
            return edge
        if not self._stack:  # pragma: no cover - engine stops at the origin
            raise RuntimeError("depth-first stack empty away from completion")
        down = self._stack.pop()
        return Edge(down.v, down.u, down.w)


_REGISTRY: dict[str, Callable[[], object]] = {
    "nearest_neighbor": NearestNeighborExplorer,
    "dfs": DepthFirstExplorer,
}


def register(name: str, factory: Callable[[], object]) -> None:
    if name in _REGISTRY:
        raise ValueError(f"algorithm {name!r} already registered")
    _REGISTRY[name] = factory


def algorithm_names() -> list[str]:
    return list(_REGISTRY)


def make_algorithm(name: str):
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown algorithm {name!r}") from None


def registry() -> list:
    """Fresh instances of every registered algorithm, in registration order."""
    return [factory() for factory in _REGISTRY.values()]
