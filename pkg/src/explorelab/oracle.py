"""Exact minimum-cost exploration walks for small graphs.

Subset dynamic programming over the all-pairs shortest-path closure: walks
may reuse edges, so the optimum visiting walk on the graph equals the optimum
visiting path on the metric closure.  Intended for cross-validating single
gadget blocks, hence the hard size cap.
"""

from __future__ import annotations

import numpy as np

from .graphs import Unreachable, WeightedGraph, _dijkstra_from

MAX_VERTICES = 18
_INF = np.iinfo(np.int64).max // 4


class TooLarge(ValueError):
    pass


def _metric_closure(graph: WeightedGraph) -> np.ndarray:
    n = graph.vertex_count
    dist = np.full((n, n), _INF, dtype=np.int64)
    for s in range(n):
        field = _dijkstra_from(graph._rows, s, None)
        for v, (d, _hops) in field.items():
            dist[s, v] = d
    return dist


def exact_exploration_opt(
    graph: WeightedGraph,
    start: int,
    end_at_start: bool = False,
    end: int | None = None,
) -> int:
    """Minimum cost to visit every vertex starting at ``start``.

    ``end_at_start`` asks for a closed tour; ``end`` pins the final vertex of
    an open walk (default: cheapest endpoint wins).
    """
    n = graph.vertex_count
    if n > MAX_VERTICES:
        raise TooLarge(f"{n} vertices exceeds the oracle cap of {MAX_VERTICES}")
    if n == 0:
        raise Unreachable("empty graph")
    if not (0 <= start < n):
        raise Unreachable(f"unknown start {start}")
    if n == 1:
        return 0
    dist = _metric_closure(graph)
    if dist.max() >= _INF:
        raise Unreachable("graph is not connected")
    if dist.max() > 2**50:
        raise TooLarge("weights too large for int64 subset DP")

    full = (1 << n) - 1
    dp = np.full((full + 1, n), _INF, dtype=np.int64)
    dp[1 << start, start] = 0
    for mask in range(full + 1):
        row = dp[mask]
        if not (row < _INF).any():
            continue
        arrive = (row[:, None] + dist).min(axis=0)
        for k in range(n):
            if mask & (1 << k):
                continue
            nxt = mask | (1 << k)
            if arrive[k] < dp[nxt, k]:
                dp[nxt, k] = arrive[k]
    final = dp[full]
    if end_at_start:
        return int((final + dist[:, start]).min())
    if end is not None:
        return int(final[end])
    return int(final.min())
