"""Runs a deterministic exploration algorithm against a world.

The engine owns termination (all known vertices visited and the agent back at
the origin), charges exact traversal costs, and merges newly revealed edges
into the agent's knowledge after every first visit.
"""

from __future__ import annotations

import json
from array import array
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Protocol

from .analysis import FormulaTable
from .graphs import Edge, WeightedGraph
from .params import Params


class EngineError(Exception):
    pass


class IllegalMove(EngineError):
    pass


class BudgetExceeded(EngineError):
    pass


class WorldInconsistency(EngineError):
    """An adversary world contradicted something it revealed earlier."""


class ZeroOpt(EngineError):
    pass


class WorldContract(Protocol):
    def origin(self) -> int: ...

    def observe(self, v: int) -> list[Edge]: ...

    def frontier_empty(self, visited) -> bool: ...

    def finalize(self) -> WeightedGraph: ...


class StaticWorld:
    """A finalized graph served through the world interface."""

    def __init__(self, graph: WeightedGraph, origin: int = 0):
        if origin not in graph:
            raise WorldInconsistency(f"origin {origin} not in graph")
        self._graph = graph
        self._origin = origin

    def origin(self) -> int:
        return self._origin

    def observe(self, v: int) -> list[Edge]:
        if v not in self._graph:
            raise WorldInconsistency(f"observe of unknown vertex {v}")
        return [Edge(v, u, w) for u, w in self._graph.neighbors(v)]

    def frontier_empty(self, visited) -> bool:
        return len(visited) >= self._graph.vertex_count

    def finalize(self) -> WeightedGraph:
        return self._graph


class Trace:
    """Sequence of edge traversals; columnar storage to stay compact."""

    __slots__ = ("us", "vs", "ws", "total_cost")

    def __init__(self) -> None:
        self.us = array("q")
        self.vs = array("q")
        self.ws = array("q")
        self.total_cost = 0

    def append(self, u: int, v: int, w: int) -> None:
        self.us.append(u)
        self.vs.append(v)
        self.ws.append(w)
        self.total_cost += w

    def __len__(self) -> int:
        return len(self.us)

    def moves(self) -> Iterator[Edge]:
        for i in range(len(self.us)):
            yield Edge(self.us[i], self.vs[i], self.ws[i])

    def to_json(self) -> str:
        moves = [
            {"from": self.us[i], "to": self.vs[i], "weight": self.ws[i]}
            for i in range(len(self.us))
        ]
        return json.dumps({"moves": moves, "total_cost": self.total_cost})

    def fingerprint(self) -> tuple:
        return (
            self.total_cost,
            len(self.us),
            self.us.tobytes(),
            self.vs.tobytes(),
            self.ws.tobytes(),
        )


class KnowledgeView:
    """Everything the agent knows: visited set, incident edges, position.

    ``rows`` holds the known adjacency as flat lists ``[n0, w0, n1, w1, ...]``
    indexed by vertex id; rows of unvisited vertices are partial (only edges
    revealed from the other side).
    """

    __slots__ = (
        "origin",
        "position",
        "cost_so_far",
        "rows",
        "visited_flags",
        "known_flags",
        "visited_count",
        "known_count",
        "frontier",
    )

    def __init__(self, origin: int):
        self.origin = origin
        self.position = origin
        self.cost_so_far = 0
        self.rows: list[list[int] | None] = []
        self.visited_flags = bytearray()
        self.known_flags = bytearray()
        self.visited_count = 0
        self.known_count = 0
        self.frontier: set[int] = set()
        self._note_known(origin)
        self._mark_visited(origin)

    # -- growth ------------------------------------------------------------

    def _ensure(self, v: int) -> None:
        if v >= len(self.rows):
            extra = v + 1 - len(self.rows)
            self.rows.extend(None for _ in range(extra))
            self.visited_flags.extend(b"\0" * extra)
            self.known_flags.extend(b"\0" * extra)

    def _note_known(self, v: int) -> None:
        self._ensure(v)
        if not self.known_flags[v]:
            self.known_flags[v] = 1
            self.known_count += 1
            if not self.visited_flags[v]:
                self.frontier.add(v)

    def _mark_visited(self, v: int) -> None:
        self._ensure(v)
        if not self.visited_flags[v]:
            self.visited_flags[v] = 1
            self.visited_count += 1
            self.frontier.discard(v)

    def ingest(self, v: int, edges: list[Edge]) -> None:
        """Install the full incident edge list revealed at ``v``."""
        self._ensure(v)
        full: list[int] = []
        for a, b, w in edges:
            if a != v:
                raise WorldInconsistency(f"observe({v}) returned edge at {a}")
            full.extend((b, w))
            self._note_known(b)
            if not self.visited_flags[b]:
                row = self.rows[b]
                if row is None:
                    row = []
                    self.rows[b] = row
                row.extend((v, w))
        old = self.rows[v]
        if old is not None:
            # the complete list must extend what was already revealed
            pairs = {(full[i], full[i + 1]) for i in range(0, len(full), 2)}
            for i in range(0, len(old), 2):
                if (old[i], old[i + 1]) not in pairs:
                    raise WorldInconsistency(
                        f"edge ({v},{old[i]}) vanished on first visit of {v}"
                    )
        self.rows[v] = full

    # -- agent-facing queries ------------------------------------------------

    def is_visited(self, v: int) -> bool:
        return v < len(self.visited_flags) and bool(self.visited_flags[v])

    def incident(self, v: int) -> list[Edge]:
        row = self.rows[v] if v < len(self.rows) else None
        if row is None:
            return []
        return [Edge(v, row[i], row[i + 1]) for i in range(0, len(row), 2)]

    def known_edges(self) -> set[tuple[int, int, int]]:
        seen: set[tuple[int, int, int]] = set()
        for v, row in enumerate(self.rows):
            if row is None:
                continue
            for i in range(0, len(row), 2):
                u = row[i]
                a, b = (v, u) if v <= u else (u, v)
                seen.add((a, b, row[i + 1]))
        return seen

    def visited_vertices(self) -> set[int]:
        return {v for v in range(len(self.visited_flags)) if self.visited_flags[v]}

    def frontier_empty(self) -> bool:
        return not self.frontier


class ExplorationAlgorithm(Protocol):
    name: str

    def decide(self, view: KnowledgeView) -> Edge: ...


DEFAULT_BUDGET_FACTOR = 64


def run(
    algorithm: ExplorationAlgorithm,
    world: WorldContract,
    step_budget: int | None = None,
) -> tuple[Trace, KnowledgeView]:
    """Drive ``algorithm`` over ``world`` until everything known is visited
    and the agent is back at the origin.

    The default budget scales with the revealed world (64 traversals per
    known vertex) so lazily growing worlds cannot starve legitimate
    backtracking while non-terminating strategies are still cut off.
    """
    if step_budget is not None and step_budget <= 0:
        raise BudgetExceeded("step budget must be positive")
    origin = world.origin()
    view = KnowledgeView(origin)
    view.ingest(origin, world.observe(origin))
    trace = Trace()
    steps = 0
    while True:
        if view.position == origin and not view.frontier:
            break
        limit = (
            step_budget
            if step_budget is not None
            else DEFAULT_BUDGET_FACTOR * (view.known_count + 1)
        )
        if steps >= limit:
            raise BudgetExceeded(
                f"{algorithm.name} exceeded {limit} traversals "
                f"({view.known_count} vertices revealed)"
            )
        u, v, w = algorithm.decide(view)
        if u != view.position:
            raise IllegalMove(f"move starts at {u}, agent is at {view.position}")
        row = view.rows[u]
        ok = False
        if row is not None:
            for i in range(0, len(row), 2):
                if row[i] == v and row[i + 1] == w:
                    ok = True
                    break
        if not ok:
            raise IllegalMove(f"edge ({u},{v},{w}) is not known")
        steps += 1
        trace.append(u, v, w)
        view.cost_so_far += w
        view.position = v
        if not view.visited_flags[v]:
            view._mark_visited(v)
            view.ingest(v, world.observe(v))
    return trace, view


# -- replay validation --------------------------------------------------------


def replay_diagnose(trace: Trace, graph: WeightedGraph, origin: int) -> str | None:
    """First violation of the trace against a finalized graph, or None."""
    if origin not in graph:
        return f"origin {origin} not in graph"
    n = len(trace)
    if n == 0:
        if graph.vertex_count > 1:
            return "empty trace on a multi-vertex graph"
        return None
    if trace.us[0] != origin:
        return f"trace starts at {trace.us[0]}, not the origin {origin}"
    if trace.vs[n - 1] != origin:
        return f"trace ends at {trace.vs[n - 1]}, not the origin {origin}"
    seen = bytearray(graph.vertex_count)
    seen[origin] = 1
    pos = origin
    total = 0
    for i in range(n):
        u, v, w = trace.us[i], trace.vs[i], trace.ws[i]
        if u != pos:
            return f"move {i} starts at {u}, walk is at {pos}"
        if v not in graph:
            return f"move {i} reaches unknown vertex {v}"
        row = graph.row(u)
        weight = None
        for j in range(0, len(row), 2):
            if row[j] == v:
                weight = row[j + 1]
                break
        if weight is None:
            return f"move {i}: no edge ({u},{v}) in graph"
        if weight != w:
            return f"move {i}: edge ({u},{v}) has weight {weight}, trace says {w}"
        total += w
        pos = v
        seen[v] = 1
    if total != trace.total_cost:
        return f"total_cost {trace.total_cost} != sum of moves {total}"
    missing = sum(1 for b in seen if not b)
    if missing:
        return f"{missing} vertices never visited"
    return None


def replay_validate(trace: Trace, graph: WeightedGraph, origin: int) -> bool:
    return replay_diagnose(trace, graph, origin) is None


# -- reports ------------------------------------------------------------------


@dataclass(frozen=True)
class RunReport:
    algorithm_name: str
    params: Params
    alg_cost: int
    opt_surrogate_cost: int
    analytic_alg_lower_bound: int
    analytic_opt_formula: int
    measured_ratio: Fraction = field(compare=False)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm_name,
            "topology": self.params.topology,
            "x": self.params.x,
            "y": self.params.y,
            "N": self.params.levels,
            "alg_cost": self.alg_cost,
            "opt_surrogate": self.opt_surrogate_cost,
            "analytic_lb": self.analytic_alg_lower_bound,
            "opt_formula": self.analytic_opt_formula,
            "ratio": [
                str(self.measured_ratio.numerator),
                str(self.measured_ratio.denominator),
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def build_report(
    trace: Trace,
    params: Params,
    opt_surrogate: int,
    formulas: FormulaTable,
    algorithm_name: str = "",
) -> RunReport:
    if opt_surrogate <= 0:
        raise ZeroOpt("optimum surrogate must be positive")
    return RunReport(
        algorithm_name=algorithm_name,
        params=params,
        alg_cost=trace.total_cost,
        opt_surrogate_cost=opt_surrogate,
        analytic_alg_lower_bound=formulas.alg_lb,
        analytic_opt_formula=formulas.opt_formula,
        measured_ratio=Fraction(trace.total_cost, opt_surrogate),
    )
