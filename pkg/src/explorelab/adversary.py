"""Adaptive adversarial worlds.

A world materializes its gadget graph lazily while the agent explores:
every revealed-but-unvisited vertex id is bound to a structural slot, and
visiting it runs the slot's materializer, which may commit fresh structure
(new path vertices, block orientations, edge roles).  Committed edges never
change afterwards, so repeated observation is consistent by construction.

Block anatomy (any level, tail side drawn left):

  vt -0- hub -0- [tail unit | ... | start unit | ... | head unit] -0- head
          \\_________________ return edge, level weight _______________/

At level 0 the units are single path vertices joined by unit-weight edges;
at level i >= 1 they are child blocks joined by level-(i-1) weight edges.
A head vertex carries three level-weight edges whose roles (return, skip,
backbone) are fixed in the order the agent first uses them; origin-block
heads carry two (skip, backbone) and origin blocks have no tail apparatus.
Final blocks replace the head vertex by an exit vertex wired onward through
a zero-weight exit edge; closing blocks carry tail apparatus on both sides
and stitch the structure shut.
"""

from __future__ import annotations

import heapq
import json
from array import array
from typing import Callable

from .analysis import edge_weight
from .engine import WorldInconsistency
from .graphs import Edge, WeightedGraph
from .params import InvalidParams, Params


class RoleAlreadyResolved(WorldInconsistency):
    pass


class OrientationAlreadyResolved(WorldInconsistency):
    pass


class ResolutionLog:
    """Append-only audit trail of every adaptive decision."""

    __slots__ = ("entries",)

    def __init__(self) -> None:
        self.entries: list[tuple] = []

    def add(self, kind: str, *payload) -> None:
        self.entries.append((len(self.entries), kind) + payload)

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(list(e)) for e in self.entries)

    def fingerprint(self) -> tuple:
        return tuple(self.entries)


ROLE_ORDER = ("return", "skip", "backbone")


# ---------------------------------------------------------------------------
# world core
# ---------------------------------------------------------------------------


class AdversaryWorld:
    """Vertex table, committed edges, and pending-slot bindings."""

    def __init__(self, params: Params):
        p = params.normalized()
        self.params = p
        self.x = p.x
        self.y = p.y
        self.n = p.levels
        self.rows: list[array] = []
        self.final = bytearray()
        self.pend: dict[int, Callable[[int], None]] = {}
        self.log = ResolutionLog()
        self.port_by_owner: dict[int, object] = {}
        self.defer_ids: set[int] = set()
        self.role_of: dict[int, tuple] = {}
        self.macro = None
        self._origin: int | None = None
        self._finalized: WeightedGraph | None = None

    # -- vertices & edges ------------------------------------------------------

    def new_vertex(self) -> int:
        self.rows.append(array("q"))
        self.final.append(0)
        return len(self.rows) - 1

    def is_final(self, v: int) -> bool:
        return bool(self.final[v])

    def ensure_edge(self, u: int, v: int, w: int) -> None:
        if u == v:
            raise WorldInconsistency(f"self loop at {u}")
        row = self.rows[u]
        for i in range(0, len(row), 2):
            if row[i] == v:
                if row[i + 1] != w:
                    raise WorldInconsistency(
                        f"edge ({u},{v}) weight conflict {row[i + 1]} vs {w}"
                    )
                return
        if self.final[u] or self.final[v]:
            raise WorldInconsistency(
                f"edge ({u},{v},{w}) added after an endpoint was sealed"
            )
        row.extend((v, w))
        self.rows[v].extend((u, w))

    def finish_vertex(self, v: int) -> None:
        self.final[v] = 1

    # -- slot bindings -----------------------------------------------------------

    def bind(self, v: int, fn: Callable[[int], None]) -> None:
        if self.final[v] or v in self.pend:
            raise WorldInconsistency(f"vertex {v} already bound")
        self.pend[v] = fn

    def assign(self, v: int, fn: Callable[[int], None]) -> None:
        """Bind a materializer, replacing an existing binding; if the vertex
        is being visited right now (already popped), run it immediately."""
        if self.final[v]:
            raise WorldInconsistency(f"vertex {v} already sealed")
        if v in self.pend:
            self.pend[v] = fn
        else:
            fn(v)

    def rebind(self, v: int, fn: Callable[[int], None]) -> None:
        if self.final[v] or v not in self.pend:
            raise WorldInconsistency(f"vertex {v} not rebindable")
        self.pend[v] = fn

    def materialize_now(self, v: int) -> None:
        fn = self.pend.pop(v, None)
        if fn is not None:
            fn(v)
        if not self.final[v]:
            raise WorldInconsistency(f"materializer left {v} unsealed")

    # -- world contract ------------------------------------------------------------

    def origin(self) -> int:
        return self._origin

    def observe(self, v: int) -> list[Edge]:
        if not (0 <= v < len(self.rows)):
            raise WorldInconsistency(f"observe of unknown vertex {v}")
        if not self.final[v]:
            if self._finalized is not None:
                raise WorldInconsistency("world already finalized")
            self.materialize_now(v)
        row = self.rows[v]
        return [Edge(v, row[i], row[i + 1]) for i in range(0, len(row), 2)]

    def frontier_empty(self, visited) -> bool:
        return len(visited) >= len(self.rows)

    def finalize(self) -> tuple[WeightedGraph, ResolutionLog]:
        """Complete all pending structure canonically and freeze the graph.

        Pending slots materialize smallest id first, which reproduces the
        straight-walk layout for regions the agent never reached.
        """
        if self._finalized is None:
            main = [v for v in self.pend if v not in self.defer_ids]
            defer = [v for v in self.pend if v in self.defer_ids]
            heapq.heapify(main)
            heapq.heapify(defer)
            while main or defer:
                # connector edges resolve last so half-built cycles complete
                # canonically before new paths are opened
                if main:
                    v = heapq.heappop(main)
                else:
                    v = heapq.heappop(defer)
                if v not in self.pend:
                    continue
                before = len(self.rows)
                self.materialize_now(v)
                for nv in range(before, len(self.rows)):
                    if nv in self.pend:
                        if nv in self.defer_ids:
                            heapq.heappush(defer, nv)
                        else:
                            heapq.heappush(main, nv)
            if self.pend:  # pragma: no cover
                raise WorldInconsistency("pending slots survived finalization")
            g = WeightedGraph()
            g._rows = self.rows
            if not g.is_connected():  # pragma: no cover
                raise WorldInconsistency("finalized graph is disconnected")
            self._finalized = g
            self.log.add("finalized", g.vertex_count)
        return self._finalized, self.log

    @property
    def graph(self) -> WeightedGraph:
        if self._finalized is None:
            raise WorldInconsistency("world not finalized yet")
        return self._finalized

    # -- spec-level operations -------------------------------------------------------

    def classify_head_tail(self, block) -> str:
        """Orientation of a block whose exploration quota was just reached;
        normally driven internally, callable for inspection in tests."""
        if not block.unbound_ends():
            raise OrientationAlreadyResolved("block orientation already fixed")
        raise WorldInconsistency("orientation resolves only at the quota visit")

    def resolve_weightx_role(self, head_vertex: int, chosen: Edge) -> str:
        """Fix the role of one unresolved level-weight edge at a head vertex
        exactly as a traversal by the agent would."""
        port = self.port_by_owner.get(head_vertex)
        if port is None:
            raise WorldInconsistency(f"{head_vertex} is not a head vertex")
        far = chosen.v if chosen.u == head_vertex else chosen.u
        if far not in port.pendings:
            raise RoleAlreadyResolved(f"edge to {far} already has a role")
        role = port.roles[0]
        self.observe(far)
        return role

    def chain_connection_step(self, v_con: int, chosen: Edge) -> str:
        """Resolve one of the six level-weight edges at a connection vertex."""
        return self.resolve_weightx_role(v_con, chosen)


# ---------------------------------------------------------------------------
# ports
# ---------------------------------------------------------------------------


class Port:
    """Unresolved level-weight edges at a revealed head vertex.

    Roles fix in first-use order; structural demands may fix a role early,
    always taking the smallest unresolved pending.
    """

    __slots__ = ("world", "owner", "weight", "block", "roles", "pendings",
                 "next_block")

    def __init__(self, world, owner, weight, block, roles, pre):
        self.world = world
        self.owner = owner
        self.weight = weight
        self.block = block
        self.next_block = None
        self.roles = [r for r in roles if r not in pre]
        self.pendings: list[int] = []
        world.port_by_owner[owner] = self
        for vid in pre.values():
            world.ensure_edge(owner, vid, weight)
        for _ in self.roles:
            pid = world.new_vertex()
            world.ensure_edge(owner, pid, weight)
            world.bind(pid, self._on_pending_visit)
            self.pendings.append(pid)

    def _consume(self, role: str, pid: int) -> None:
        self.roles.remove(role)
        self.pendings.remove(pid)
        self.world.log.add("role", self.owner, role, pid)

    def _on_pending_visit(self, pid: int) -> None:
        self.block.on_port_used()
        role = self.roles[0]
        self._consume(role, pid)
        if role == "return":
            self.block.adopt_hub(pid)
        elif role == "skip":
            self.block.outward_provider().skip_target(self.block, self, pid)
        else:
            nxt = self.next_block
            if nxt is None:
                raise WorldInconsistency(
                    f"backbone pending used at {self.owner} with no successor"
                )
            nxt.adopt_tail_vertex(pid)

    def take_role(self, role: str) -> int:
        if role not in self.roles:
            raise RoleAlreadyResolved(f"{role} already fixed at {self.owner}")
        pid = min(self.pendings)
        self._consume(role, pid)
        return pid

    def can_take(self, role: str) -> bool:
        return role in self.roles and bool(self.pendings)


class PortRef:
    """Handle on a block end's (possibly not yet revealed) head port."""

    __slots__ = ("block", "end_name")

    def __init__(self, block, end_name: str):
        self.block = block
        self.end_name = end_name

    def resolve_role(self, role: str) -> int:
        block, name = self.block, self.end_name
        if name not in ("head", "headA", "headB"):
            raise WorldInconsistency(f"{name} is not a port-bearing end")
        port = block.ports.get(name)
        if port is not None:
            return port.take_role(role)
        owner = block.get_end_vertex(name)
        port = block.ports.get(name)
        if port is not None:
            return port.take_role(role)
        pre = block.pre_roles.setdefault(name, {})
        if role in pre:
            raise RoleAlreadyResolved(f"{role} already pre-bound at {name}")
        vid = block.world.new_vertex()
        pre[role] = vid
        block.world.ensure_edge(owner, vid, block.port_w)
        return vid

    def can_resolve(self, role: str) -> bool:
        port = self.block.ports.get(self.end_name)
        if port is not None:
            return port.can_take(role)
        return role not in self.block.pre_roles.get(self.end_name, ())


class VconPort:
    """The six level-weight edges at a connection vertex, usable as three
    skip/backbone pairs toward up to three onward paths."""

    __slots__ = ("world", "owner", "weight", "chain", "cycle", "pendings")

    def __init__(self, world, owner, weight, chain, cycle):
        self.world = world
        self.owner = owner
        self.weight = weight
        self.chain = chain
        self.cycle = cycle
        self.pendings: list[int] = []
        world.port_by_owner[owner] = self
        for _ in range(6):
            pid = world.new_vertex()
            world.ensure_edge(owner, pid, weight)
            world.bind(pid, self._on_pending_visit)
            self.pendings.append(pid)

    @property
    def roles(self):  # compatibility with resolve_weightx_role
        return ["skip"]

    def _on_pending_visit(self, pid: int) -> None:
        self.pendings.remove(pid)
        self.world.log.add("role", self.owner, "connector-skip", pid)
        self.chain.vcon_take(self, pid)

    def take_role(self, role: str) -> int:
        if not self.pendings:
            raise RoleAlreadyResolved(f"connector {self.owner} exhausted")
        pid = min(self.pendings)
        self.pendings.remove(pid)
        self.world.log.add("role", self.owner, f"connector-{role}", pid)
        return pid

    def can_take(self, role: str) -> bool:
        return bool(self.pendings)

    def resolve_role(self, role: str) -> int:
        return self.take_role(role)

    def can_resolve(self, role: str) -> bool:
        return bool(self.pendings)

    def finalize_stubs(self) -> None:
        while self.pendings:
            pid = self.pendings.pop()
            self.world.log.add("connector_stub", self.owner, pid)
            self.world.assign(pid, self.world.finish_vertex)


# ---------------------------------------------------------------------------
# level-0 blocks
# ---------------------------------------------------------------------------


class Comp:
    """A run of committed path slots with locked internal adjacency.

    ``ends[k]``: ("pend", id) while growable, ("term", name) at a committed
    structural end, ("link",) once merged into neighboring structure.
    ``entry_counts`` (entry comp only) counts explored slots per side of the
    entry slot, feeding the orientation rule.
    """

    __slots__ = ("ends", "entry_counts")

    def __init__(self, end0, end1, entry_counts=None):
        self.ends = [end0, end1]
        self.entry_counts = entry_counts

    def open_pends(self):
        return [e[1] for e in self.ends if e[0] == "pend"]


class PathBlock:
    """A level-0 gadget: a would-be path of ``slots`` vertices whose two
    extreme slots become the kind's terminal vertices, plus apparatus."""

    END_NAMES = {
        "normal": ("tail_final", "head"),
        "origin": ("headA", "headB"),
        "final": ("tail_final", "exit"),
        "closing_simple": ("afirst", "ph"),
        "closing_path": ("endA", "endB"),
    }

    level = 0

    def __init__(self, world, kind, rule, parent, inward_port=None,
                 exit_target=None, simple=False):
        self.world = world
        self.kind = kind
        self.x = world.x
        self.y = world.y
        self.rule = rule           # 'y' | 'head' | 'fixed' | None (origin)
        self.parent = parent
        self.inward_port = inward_port
        self.exit_target = exit_target
        self.simple = simple
        self.slots = (self.x + 1) if simple else (self.x + 3)
        shape = kind if kind != "closing" else (
            "closing_simple" if simple else "closing_path")
        self.shape = shape
        self.end_names = self.END_NAMES[shape]
        self.ends: dict[str, int | None] = {n: None for n in self.end_names}
        self.apparatus: dict[str, int | None] = {
            n: None for n in self._apparatus_names(shape)}
        self.ports: dict[str, Port] = {}
        self.pre_roles: dict[str, dict[str, int]] = {}
        self.entry: int | None = None
        self.comps: list[Comp] = []
        self.placed = 0
        self.explored = 0
        self.examined_fired = False
        self.side_caps = None
        if kind == "origin":
            c = (self.slots + 1) // 2
            self.side_caps = [c - 1, self.slots - c]
        world.log.add("block", kind, 0)

    @staticmethod
    def _apparatus_names(shape: str):
        if shape in ("normal", "final"):
            return ("hub", "vt")
        if shape == "closing_simple":
            return ("hub", "vt", "vps", "vt2")
        if shape == "closing_path":
            return ("hub", "vt", "vps", "vt2")
        return ()

    # -- basics ---------------------------------------------------------------

    @property
    def port_w(self) -> int:
        return edge_weight(self.x, self.y, self.level)

    @property
    def unit_w(self) -> int:
        return edge_weight(self.x, self.y, self.level - 1)

    def outward_provider(self):
        return self.parent

    def on_port_used(self) -> None:
        if self.kind == "origin":
            self.fire_examined()

    def fire_examined(self) -> None:
        if not self.examined_fired:
            self.examined_fired = True
            self.parent.on_examined(self)

    def unbound_ends(self) -> list[str]:
        return [n for n in self.end_names if self.ends[n] is None]

    def _bind_end(self, name: str, vid: int) -> None:
        if self.ends[name] is not None:
            raise OrientationAlreadyResolved(f"end {name} already bound")
        self.ends[name] = vid

    # -- entry -------------------------------------------------------------------

    def ensure_entry(self) -> int:
        if self.entry is not None:
            return self.entry
        if self.kind != "origin":
            opens = sorted(p for c in self.comps for p in c.open_pends())
            if opens:
                self.entry = opens[0]
                return self.entry
        if self.placed < self.slots:
            vid = self.world.new_vertex()
            self.placed += 1
            self.entry = vid
            self.world.bind(vid, self._reveal_entry)
            return vid
        unvisited = sorted(
            v for v in list(self.ends.values()) + list(self.apparatus.values())
            if v is not None and not self.world.is_final(v)
        )
        if unvisited:
            return unvisited[0]
        vid = self.world.new_vertex()
        self.world.bind(vid, self.world.finish_vertex)
        self.world.log.add("start_stub", vid)
        return vid

    def adopt_entry(self, pid: int) -> None:
        if self.entry is None and self.placed < self.slots:
            self.entry = pid
            self.placed += 1
            self.world.assign(pid, self._reveal_entry)
            return
        raise WorldInconsistency("skip pending clashed with a live entry")

    def _reveal_entry(self, v: int) -> None:
        comp = Comp(("link",), ("link",), entry_counts=[0, 0])
        self.comps.append(comp)
        self.explored += 1
        row = self.world.rows[v]
        w = self.unit_w
        linked = sum(1 for i in range(0, len(row), 2) if row[i + 1] == w)
        for endix in range(2 - linked):
            self._grow(comp, endix, v)
        self.world.finish_vertex(v)

    # -- growth --------------------------------------------------------------------

    def _grow(self, comp: Comp, endix: int, from_v: int,
              must_link: bool = False) -> None:
        if self.placed < self.slots and not must_link:
            pid = self.world.new_vertex()
            self.placed += 1
            self.world.ensure_edge(from_v, pid, self.unit_w)
            comp.ends[endix] = ("pend", pid)
            self.world.bind(
                pid, lambda v, c=comp, e=endix: self._reveal_path_next(v, c, e)
            )
            return
        target = self._facing_id(comp, from_v)
        self.world.ensure_edge(from_v, target, self.unit_w)
        comp.ends[endix] = ("link",)
        self._absorb(comp, target)

    def _facing_id(self, comp: Comp, exclude: int) -> int:
        cands = []
        for other in self.comps:
            if other is comp:
                continue
            cands.extend(p for p in other.open_pends() if p != exclude)
        extra = list(self.ends.values())
        if self.entry is not None:
            extra.append(self.entry)
        for vid in extra:
            if vid is not None and vid != exclude \
                    and not self.world.is_final(vid) \
                    and not self._has_unit_edge(vid):
                cands.append(vid)
        if not cands:
            raise WorldInconsistency("path slots exhausted with nothing to join")
        return min(cands)

    def _has_unit_edge(self, vid: int) -> bool:
        row = self.world.rows[vid]
        w = self.unit_w
        return any(row[i + 1] == w for i in range(0, len(row), 2))

    def _absorb(self, comp: Comp, target: int) -> None:
        for other in self.comps:
            if other is comp:
                continue
            for k, e in enumerate(other.ends):
                if e[0] == "pend" and e[1] == target:
                    other.ends[k] = ("link",)
                    self.world.assign(target, self._reveal_interior)
                    self._merge(comp, other)
                    return
        # else: linked into a committed terminal that reveals on its own

    def _merge(self, a: Comp, b: Comp) -> None:
        keep = [e for e in a.ends if e[0] != "link"] + \
               [e for e in b.ends if e[0] != "link"]
        while len(keep) < 2:
            keep.append(("link",))
        a.ends = keep[:2]
        if a.entry_counts is None:
            a.entry_counts = b.entry_counts
        self.comps.remove(b)

    def _reveal_interior(self, v: int) -> None:
        self.explored += 1
        self.world.finish_vertex(v)

    # -- path pending visits -----------------------------------------------------------

    def _reveal_path_next(self, v: int, comp: Comp, endix: int) -> None:
        if self._has_unit_edge_twice(v):
            # merged into from the other side before being visited
            self._reveal_interior(v)
            return
        will = self.explored + 1
        unbound = self.unbound_ends()
        if unbound and self.placed == self.slots and (
            will == self.slots or (will == self.slots - 1 and self.rule)
        ):
            self._commit_terminals(v, comp, endix, unbound)
            return
        if self.kind == "origin" and comp.entry_counts is not None:
            if comp.entry_counts[endix] + 1 == self.side_caps[endix]:
                free = [n for n in self.end_names if self.ends[n] is None]
                if free:
                    self.world.log.add("orient", self.kind, free[0], v)
                    self._become_terminal(v, comp, endix, free[0])
                    return
                self.explored += 1
                comp.entry_counts[endix] += 1
                self._grow(comp, endix, v, must_link=True)
                self.world.finish_vertex(v)
                return
        self.explored += 1
        if comp.entry_counts is not None:
            comp.entry_counts[endix] += 1
        self._grow(comp, endix, v)
        self.world.finish_vertex(v)

    def _has_unit_edge_twice(self, v: int) -> bool:
        row = self.world.rows[v]
        w = self.unit_w
        return sum(1 for i in range(0, len(row), 2) if row[i + 1] == w) >= 2

    def _commit_terminals(self, v, comp, endix, unbound) -> None:
        """Orientation: the vertex being visited becomes one structural end,
        the opposite open slot the other."""
        if len(unbound) == 2:
            if self.rule == "y":
                between = comp.entry_counts[endix] \
                    if comp.entry_counts is not None else self.y
                name = self.end_names[1] if between >= self.y else self.end_names[0]
            else:
                name = self.end_names[1]
        else:
            name = unbound[0]
        self.world.log.add("orient", self.kind, name, v)
        self._become_terminal(v, comp, endix, name)

    def _become_terminal(self, v, comp, endix, name) -> None:
        if comp.entry_counts is not None:
            comp.entry_counts[endix] += 1
        comp.ends[endix] = ("term", name)
        self._bind_end(name, v)
        remaining = self.unbound_ends()
        if remaining and self.placed == self.slots:
            opens = [(c, k) for c in self.comps for k in (0, 1)
                     if c.ends[k][0] == "pend"]
            if len(opens) == 1 and len(remaining) == 1:
                oc, ok = opens[0]
                pid = oc.ends[ok][1]
                oc.ends[ok] = ("term", remaining[0])
                self._bind_end(remaining[0], pid)
                self.world.assign(
                    pid, lambda vv, n=remaining[0]: self._reveal_terminal(vv, n)
                )
        self._reveal_terminal(v, name)

    # -- terminal reveals -----------------------------------------------------------

    def _ensure_inward(self, v: int) -> None:
        if self._has_unit_edge(v):
            return
        comp = Comp(("link",), ("link",))
        self.comps.append(comp)
        self._grow(comp, 1, v)

    def _reveal_terminal(self, v: int, name: str) -> None:
        w = self.world
        self.explored += 1
        self._ensure_inward(v)
        if name in ("head", "headA", "headB"):
            self._make_port(name, v)
        elif name == "tail_final":
            w.ensure_edge(v, self.get_hub(), 0)
        elif name == "exit":
            w.ensure_edge(v, self.get_hub(), self.port_w)
            w.ensure_edge(v, self.exit_target(), 0)
        elif name == "ph":
            w.ensure_edge(v, self.get_vps(), 0)
            w.ensure_edge(v, self.get_hub(), self.port_w)
        elif name == "afirst":
            w.ensure_edge(v, self.get_hub(), 0)
        elif name == "endA":
            w.ensure_edge(v, self.get_hub(), 0)
        elif name == "endB":
            w.ensure_edge(v, self.get_vps(), 0)
        else:  # pragma: no cover
            raise WorldInconsistency(f"unknown terminal {name}")
        w.finish_vertex(v)
        if self.kind == "normal" and name == "head":
            self.fire_examined()

    def _make_port(self, name: str, v: int) -> None:
        self.parent.prepare_port(self, name)
        pre = dict(self.pre_roles.get(name, ()))
        roles = ROLE_ORDER[1:] if self.kind == "origin" else ROLE_ORDER
        if "return" in roles and "return" not in pre:
            hub = self.apparatus.get("hub")
            if hub is not None:
                pre["return"] = hub
        self.ports[name] = Port(self.world, v, self.port_w, self, roles, pre)

    def head_port_name(self) -> str:
        return self.end_names[1]

    def exit_id(self) -> int:
        if self.kind != "final":
            raise WorldInconsistency("exit apparatus on a non-final block")
        return self.get_end_vertex("exit")

    # -- apparatus --------------------------------------------------------------------

    def _head_name(self) -> str:
        return self.end_names[1]

    def get_hub(self) -> int:
        vid = self.apparatus["hub"]
        if vid is not None:
            return vid
        if self.kind in ("normal", "final"):
            port = self.ports.get(self._head_name())
            if port is not None and port.can_take("return"):
                vid = port.take_role("return")
                self.apparatus["hub"] = vid
                self.world.assign(vid, lambda v: self._reveal_app(v, "hub"))
                return vid
        vid = self.world.new_vertex()
        self.apparatus["hub"] = vid
        self.world.bind(vid, lambda v: self._reveal_app(v, "hub"))
        return vid

    def adopt_hub(self, pid: int) -> None:
        if self.apparatus["hub"] is not None:
            raise RoleAlreadyResolved("return hub already materialized")
        self.apparatus["hub"] = pid
        self.world.assign(pid, lambda v: self._reveal_app(v, "hub"))

    def _acquire_app(self, name: str, vid: int) -> None:
        self.apparatus[name] = vid
        fn = lambda v, n=name: self._reveal_app(v, n)  # noqa: E731
        if vid in self.world.pend:
            self.world.rebind(vid, fn)
        else:
            self.world.bind(vid, fn)

    def get_vps(self) -> int:
        vid = self.apparatus["vps"]
        if vid is None:
            vid = self.parent.closing_far_id(self, "skip")
            self._acquire_app("vps", vid)
        return vid

    def get_vt2(self) -> int:
        vid = self.apparatus["vt2"]
        if vid is None:
            vid = self.parent.closing_far_id(self, "backbone")
            self._acquire_app("vt2", vid)
        return vid

    def get_tail_vertex(self) -> int:
        vid = self.apparatus["vt"]
        if vid is not None:
            return vid
        port = self.inward_port
        if port is not None and port.can_take("backbone"):
            vid = port.take_role("backbone")
        else:
            vid = self.parent.provide_tail_id(self)
        self._acquire_app("vt", vid)
        return vid

    def adopt_tail_vertex(self, pid: int) -> None:
        if self.apparatus["vt"] is not None:
            raise RoleAlreadyResolved("tail vertex already materialized")
        self.apparatus["vt"] = pid
        self.world.assign(pid, lambda v: self._reveal_app(v, "vt"))

    def get_end_vertex(self, name: str) -> int:
        vid = self.ends[name]
        if vid is not None:
            return vid
        opens = [(c, k) for c in self.comps for k in (0, 1)
                 if c.ends[k][0] == "pend"]
        reuse = None
        if opens and name == self.end_names[0] and self.entry is not None:
            # premature tail demand: one open end of the explored path is
            # wired into the tail apparatus (the adaptive re-entry rule)
            reuse = min(opens, key=lambda t: t[0].ends[t[1]][1])
        elif opens and self.placed >= self.slots:
            reuse = min(opens, key=lambda t: t[0].ends[t[1]][1])
        if reuse is not None:
            oc, ok = reuse
            pid = oc.ends[ok][1]
            oc.ends[ok] = ("term", name)
            self._bind_end(name, pid)
            self.world.assign(pid, lambda vv, n=name: self._reveal_terminal(vv, n))
            return pid
        if self.placed >= self.slots:
            raise WorldInconsistency("terminal demanded with no slot left")
        vid = self.world.new_vertex()
        self.placed += 1
        self._bind_end(name, vid)
        self.world.bind(vid, lambda vv, n=name: self._reveal_terminal(vv, n))
        return vid

    def _reveal_app(self, v: int, name: str) -> None:
        w = self.world
        if name == "hub":
            if self.kind == "closing":
                w.ensure_edge(v, self.get_tail_vertex(), 0)
                if self.shape == "closing_simple":
                    w.ensure_edge(v, self.get_end_vertex("afirst"), 0)
                    w.ensure_edge(v, self.get_end_vertex("ph"), self.port_w)
                else:
                    w.ensure_edge(v, self.get_end_vertex("endA"), 0)
                    w.ensure_edge(v, self.get_vps(), self.port_w)
            else:
                w.ensure_edge(v, self.get_tail_vertex(), 0)
                w.ensure_edge(v, self.get_end_vertex("tail_final"), 0)
                w.ensure_edge(v, self.get_end_vertex(self._head_name()),
                              self.port_w)
        elif name == "vps":
            if self.shape == "closing_simple":
                w.ensure_edge(v, self.get_end_vertex("ph"), 0)
            else:
                w.ensure_edge(v, self.get_hub(), self.port_w)
                w.ensure_edge(v, self.get_end_vertex("endB"), 0)
            w.ensure_edge(v, self.get_vt2(), 0)
        elif name == "vt2":
            w.ensure_edge(v, self.get_vps(), 0)
        elif name == "vt":
            w.ensure_edge(v, self.get_hub(), 0)
        else:  # pragma: no cover
            raise WorldInconsistency(f"unknown apparatus {name}")
        w.finish_vertex(v)

    # walking support for the optimum tour --------------------------------------

    def boundary(self, side: str) -> list[int]:
        """Apparatus vertex chain outside the path on the given side
        ('tail' or 'head'), innermost last."""
        if self.kind == "origin":
            return []
        if side == "tail":
            if self.kind == "closing":
                return [self.get_tail_vertex(), self.get_hub()]
            return [self.get_tail_vertex(), self.get_hub()]
        if self.kind == "closing":
            return [self.get_vt2(), self.get_vps()]
        return []


# ---------------------------------------------------------------------------
# level >= 1 blocks: paths of child blocks
# ---------------------------------------------------------------------------


class SlotBlock:
    """A level-``i`` gadget (i >= 1): a would-be chain of ``slots`` child
    blocks whose two extreme slots hold final-kind children, plus the same
    vertex apparatus as a level-0 block."""

    END_NAMES = {
        "normal": ("head",),
        "origin": ("headA", "headB"),
        "final": ("exit",),
        "closing": (),
    }

    def __init__(self, world, kind, level, rule, parent, inward_port=None,
                 exit_target=None):
        self.world = world
        self.kind = kind
        self.level = level
        self.x = world.x
        self.y = world.y
        self.rule = rule
        self.parent = parent
        self.inward_port = inward_port
        self.exit_target = exit_target
        self.slots = self.x + 3
        self.end_names = self.END_NAMES[kind]
        self.ends: dict[str, int | None] = {n: None for n in self.end_names}
        app = {"vps", "vt2", "hub", "vt"} if kind == "closing" else \
            ({"hub", "vt"} if kind in ("normal", "final") else set())
        self.apparatus: dict[str, int | None] = {n: None for n in app}
        self.ports: dict[str, Port] = {}
        self.pre_roles: dict[str, dict[str, int]] = {}
        self.entry_child = None
        self.entry_port_side: dict[int, int] = {}
        # comp ends: ("child", blk) outward frontier | ("tailward", blk)
        # inward frontier | ("term", role) | ("link",)
        self.comps: list[Comp] = []
        self.placed = 0                    # all children incl. extremes
        self.placed_interior = 0
        self.examined = 0
        self.examined_fired = False
        self.extremes: dict[str, object] = {}
        self.planned_roles: dict[int, str] = {}   # comp-end side plans
        self.side_caps = None
        if kind == "origin":
            c = (self.slots + 1) // 2
            self.side_caps = [c - 2, self.slots - c - 1]  # interior per side
        world.log.add("block", kind, level)

    # -- basics -----------------------------------------------------------------

    @property
    def port_w(self) -> int:
        return edge_weight(self.x, self.y, self.level)

    @property
    def unit_w(self) -> int:
        return edge_weight(self.x, self.y, self.level - 1)

    def outward_provider(self):
        return self.parent

    def on_port_used(self) -> None:
        if self.kind == "origin":
            self.fire_examined()

    def fire_examined(self) -> None:
        if not self.examined_fired:
            self.examined_fired = True
            self.parent.on_examined(self)

    def unbound_ends(self):
        return [n for n in self.end_names if self.ends[n] is None]

    # -- entry ---------------------------------------------------------------------

    def _child_rule(self) -> str:
        return "y"

    def _make_child(self, kind, rule, inward_port=None, exit_target=None):
        cls = PathBlock if self.level - 1 == 0 else SlotBlock
        if cls is PathBlock:
            return PathBlock(self.world, kind, rule, self,
                             inward_port=inward_port, exit_target=exit_target)
        return SlotBlock(self.world, kind, self.level - 1, rule, self,
                         inward_port=inward_port, exit_target=exit_target)

    def ensure_entry(self) -> int:
        if self.entry_child is not None:
            return self.entry_child.ensure_entry()
        if self.placed_interior < self.x + 1:
            child = self._make_child("origin", None)
            self.entry_child = child
            self.placed += 1
            self.placed_interior += 1
            comp = Comp(("child", child), ("child", child), entry_counts=[0, 0])
            self.comps.append(comp)
            return child.ensure_entry()
        # interior exhausted without a start child: recurse into a facing one
        for comp in self.comps:
            for e in comp.ends:
                if e[0] == "child":
                    return e[1].ensure_entry()
        raise WorldInconsistency("no entry point left in block")

    def adopt_entry(self, pid: int) -> None:
        if self.entry_child is None and not self.comps:
            child = self._make_child("origin", None)
            self.entry_child = child
            self.placed += 1
            self.placed_interior += 1
            comp = Comp(("child", child), ("child", child), entry_counts=[0, 0])
            self.comps.append(comp)
            child.adopt_entry(pid)
            return
        target = self.ensure_entry()
        if target != pid:
            raise WorldInconsistency("skip pending clashed with a live entry")

    # -- sibling wiring ----------------------------------------------------------------

    def _find_comp_end(self, block, port=None):
        if block is self.entry_child and port is not None:
            comp = self.comps[0] if self.comps else None
            if comp is not None:
                side = self.entry_port_side.get(id(port))
                if side is None:
                    side = 0 if 0 not in self.entry_port_side.values() else 1
                    self.entry_port_side[id(port)] = side
                if comp.ends[side][0] == "child" and comp.ends[side][1] is block:
                    return comp, side
        for comp in self.comps:
            for k, e in enumerate(comp.ends):
                if e[0] == "child" and e[1] is block:
                    return comp, k
        return None, None

    def _plan_role_for(self, comp, endix) -> str:
        planned = self.planned_roles.get(id(comp) * 2 + endix)
        if planned:
            return planned
        taken = set(self.planned_roles.values()) | set(self.extremes)
        if "tail" in taken and "head" not in taken:
            role = "head"
        elif "head" in taken and "tail" not in taken:
            role = "tail"
        elif self.rule == "y" and comp.entry_counts is not None:
            between = comp.entry_counts[endix] - 1
            role = "head" if between >= self.y else "tail"
        else:
            role = "head"
        self.planned_roles[id(comp) * 2 + endix] = role
        other = "tail" if role == "head" else "head"
        for c in self.comps:
            for k in (0, 1):
                key = id(c) * 2 + k
                if (c is not comp or k != endix) and key not in self.planned_roles \
                        and c.entry_counts is not None:
                    self.planned_roles[key] = other
        self.world.log.add("orient", self.kind, role)
        return role

    def skip_target(self, block, port, pid) -> None:
        comp, endix = self._find_comp_end(block, port)
        if comp is None:
            raise WorldInconsistency("skip from a block off the growth frontier")
        joined = self._tailward_facing(comp)
        if joined is not None and self.placed_interior >= self.x + 1:
            jcomp, jk, jblk = joined
            jcomp.ends[jk] = ("link",)
            comp.ends[endix] = ("link",)
            self._merge_comps(comp, jcomp)
            occupant = jblk
        elif self.kind == "origin":
            occupant = self._origin_occupant(comp, endix, port)
        elif self.placed_interior < self.x + 1:
            occupant = self._make_child("normal", self._child_rule(),
                                        inward_port=port)
            self.placed += 1
            self.placed_interior += 1
            if comp.entry_counts is not None:
                comp.entry_counts[endix] += 1
            comp.ends[endix] = ("child", occupant)
        else:
            occupant = self._extreme_for(comp, endix, port)
        port.next_block = occupant
        occupant.adopt_entry(pid)

    def _tailward_facing(self, comp):
        for other in self.comps:
            if other is comp:
                continue
            for k, e in enumerate(other.ends):
                if e[0] == "tailward":
                    return other, k, e[1]
        return None

    def _merge_comps(self, a: Comp, b: Comp) -> None:
        keep = [e for e in a.ends if e[0] != "link"] + \
               [e for e in b.ends if e[0] != "link"]
        while len(keep) < 2:
            keep.append(("link",))
        a.ends = keep[:2]
        if a.entry_counts is None:
            a.entry_counts = b.entry_counts
        self.comps.remove(b)

    def _origin_occupant(self, comp, endix, port):
        if comp.entry_counts[endix] < self.side_caps[endix]:
            child = self._make_child("normal", self._child_rule(), inward_port=port)
            self.placed += 1
            self.placed_interior += 1
            comp.entry_counts[endix] += 1
            comp.ends[endix] = ("child", child)
            return child
        name = "headA" if "headA" not in self.extremes else "headB"
        return self._place_extreme(name, comp, endix, port)

    def _extreme_for(self, comp, endix, port):
        role = self._plan_role_for(comp, endix)
        if role in self.extremes:
            ext = self.extremes[role]
            comp.ends[endix] = ("link",)
            return ext
        return self._place_extreme(role, comp, endix, port)

    def _exit_target_for(self, role: str):
        if self.kind == "origin":
            return lambda r=role: self.get_end_vertex(r)
        if role == "tail":
            return self.get_hub
        if self.kind == "normal":
            return lambda: self.get_end_vertex("head")
        if self.kind == "final":
            return lambda: self.get_end_vertex("exit")
        return self.get_vps  # closing: head-side extreme exits into vps

    def _place_extreme(self, role, comp, endix, inward_port):
        ext = self._make_child("final", "fixed", inward_port=inward_port,
                               exit_target=self._exit_target_for(role))
        self.extremes[role] = ext
        self.placed += 1
        if comp is not None:
            comp.ends[endix] = ("term", role)
        else:
            self._wire_detached_extreme(ext, role)
        self.world.log.add("extreme", self.kind, role)
        return ext

    def _wire_detached_extreme(self, ext, role) -> None:
        """An extreme created by an apparatus demand must still absorb the
        skip/backbone edges of the frontier facing its side."""
        target = self._facing_frontier_for(role)
        if target is None:
            return
        comp, endix, blk = target
        name = self._free_head_name(blk)
        if name is None:
            return
        ref = PortRef(blk, name)
        if ref.can_resolve("skip"):
            pid = ref.resolve_role("skip")
            ext.adopt_entry(pid)
        if ref.can_resolve("backbone"):
            vid = ref.resolve_role("backbone")
            if ext.apparatus.get("vt") is None:
                ext._acquire_app("vt", vid)
        comp.ends[endix] = ("term", role)

    def _facing_frontier_for(self, role):
        planned = self.planned_roles
        for comp in self.comps:
            for k, e in enumerate(comp.ends):
                if e[0] != "child":
                    continue
                key = id(comp) * 2 + k
                if planned.get(key) == role:
                    return comp, k, e[1]
        # fall back to any frontier when only one side exists
        open_ends = [(c, k, e[1]) for c in self.comps
                     for k, e in enumerate(c.ends) if e[0] == "child"]
        if len(open_ends) == 1 and not planned:
            return open_ends[0]
        for c, k, blk in open_ends:
            if planned.get(id(c) * 2 + k) is None:
                return c, k, blk
        return None

    def _free_head_name(self, blk):
        for name in blk.end_names:
            if name not in ("head", "headA", "headB"):
                continue
            port = blk.ports.get(name)
            pre = blk.pre_roles.get(name, {})
            if port is None:
                if "skip" not in pre:
                    return name
            elif port.can_take("skip"):
                return name
        return None

    def extreme_exit_id(self, role: str) -> int:
        ext = self.extremes.get(role)
        if ext is None:
            ext = self._place_extreme(role, None, None, None)
        return ext.exit_id()

    def exit_id(self) -> int:
        # only meaningful for final-kind blocks
        return self.get_end_vertex("exit")

    # -- examined bookkeeping ------------------------------------------------------------

    def on_examined(self, child) -> None:
        if child.kind not in ("normal", "origin"):
            return
        self.examined += 1
        if self.rule == "y" and self.examined == self.x + 1:
            comp, endix = self._find_comp_end(child)
            if comp is not None and comp.entry_counts is not None \
                    and not self.planned_roles and not self.extremes:
                self._plan_role_for(comp, endix)

    # -- tail/hub plumbing ----------------------------------------------------------------

    def provide_tail_id(self, child) -> int:
        """Hand ``child`` (an extreme or head-first interior) the id of its
        tail vertex, creating the inward neighbor head-first if needed."""
        comp = None
        for c in self.comps:
            for k, e in enumerate(c.ends):
                if e[0] == "tailward" and e[1] is child:
                    comp, endix = c, k
                    break
        if comp is None and child.kind == "final":
            comp = Comp(("link",), ("tailward", child))
            endix = 1
            self.comps.append(comp)
        if comp is not None and self.placed_interior < self.x + 1:
            nb = self._make_child("normal", self._child_rule())
            self.placed += 1
            self.placed_interior += 1
            comp.ends[endix] = ("tailward", nb)
            self._outer_of = getattr(self, "_outer_of", {})
            self._outer_of[id(nb)] = child
            nb.ensure_entry()
            ref = PortRef(nb, nb.head_port_name())
            return ref.resolve_role("backbone")
        ref = self._facing_port_ref(child, comp)
        if comp is not None:
            comp.ends[endix] = ("link",)
            tgt = ref.block if isinstance(ref, PortRef) else None
            if tgt is not None:
                oc, ok = self._find_comp_end(tgt)
                if oc is not None:
                    oc.ends[ok] = ("link",)
                    self._merge_comps(comp, oc)
        return ref.resolve_role("backbone")

    def _facing_port_ref(self, child, skip_comp=None):
        for comp in self.comps:
            if comp is skip_comp:
                continue
            for e in comp.ends:
                if e[0] == "child" and e[1] is not child:
                    blk = e[1]
                    return PortRef(blk, blk.head_port_name())
        if self.entry_child is not None and self.entry_child is not child:
            for name in self.entry_child.end_names:
                port = self.entry_child.ports.get(name)
                pre = self.entry_child.pre_roles.get(name, {})
                if (port is None and "backbone" not in pre) or \
                        (port is not None and port.can_take("backbone")):
                    return PortRef(self.entry_child, name)
        raise WorldInconsistency("no inward structure for a tail vertex")

    def head_port_name(self) -> str:
        return "head"

    # -- vertex apparatus --------------------------------------------------------------------

    def get_end_vertex(self, name: str) -> int:
        vid = self.ends[name]
        if vid is None:
            vid = self.world.new_vertex()
            self.ends[name] = vid
            self.world.bind(vid, lambda v, n=name: self._reveal_end(v, n))
        return vid

    def _reveal_end(self, v: int, name: str) -> None:
        w = self.world
        if name == "head":
            w.ensure_edge(v, self.extreme_exit_id("head"), 0)
            self._make_port(name, v)
        elif name in ("headA", "headB"):
            w.ensure_edge(v, self.extreme_exit_id_for_head(name), 0)
            self._make_port(name, v)
        elif name == "exit":
            w.ensure_edge(v, self.extreme_exit_id("head"), 0)
            w.ensure_edge(v, self.get_hub(), self.port_w)
            w.ensure_edge(v, self.exit_target(), 0)
        else:  # pragma: no cover
            raise WorldInconsistency(f"unknown end {name}")
        w.finish_vertex(v)
        if self.kind == "normal" and name == "head":
            self.fire_examined()

    def extreme_exit_id_for_head(self, name: str) -> int:
        ext = self.extremes.get(name)
        if ext is None:
            ext = self._place_extreme(name, None, None, None)
        return ext.exit_id()

    def _make_port(self, name: str, v: int) -> None:
        self.parent.prepare_port(self, name)
        pre = dict(self.pre_roles.get(name, ()))
        roles = ROLE_ORDER[1:] if self.kind == "origin" else ROLE_ORDER
        if "return" in roles and "return" not in pre:
            hub = self.apparatus.get("hub")
            if hub is not None:
                pre["return"] = hub
        self.ports[name] = Port(self.world, v, self.port_w, self, roles, pre)

    def get_hub(self) -> int:
        vid = self.apparatus["hub"]
        if vid is not None:
            return vid
        if self.kind == "normal":
            port = self.ports.get("head")
            if port is not None and port.can_take("return"):
                vid = port.take_role("return")
                self.apparatus["hub"] = vid
                self.world.assign(vid, lambda v: self._reveal_app(v, "hub"))
                return vid
        vid = self.world.new_vertex()
        self.apparatus["hub"] = vid
        self.world.bind(vid, lambda v: self._reveal_app(v, "hub"))
        return vid

    def adopt_hub(self, pid: int) -> None:
        if self.apparatus["hub"] is not None:
            raise RoleAlreadyResolved("return hub already materialized")
        self.apparatus["hub"] = pid
        self.world.assign(pid, lambda v: self._reveal_app(v, "hub"))

    def _acquire_app(self, name, vid) -> None:
        self.apparatus[name] = vid
        fn = lambda v, n=name: self._reveal_app(v, n)  # noqa: E731
        if vid in self.world.pend:
            self.world.rebind(vid, fn)
        else:
            self.world.bind(vid, fn)

    def get_vps(self) -> int:
        vid = self.apparatus["vps"]
        if vid is None:
            vid = self.parent.closing_far_id(self, "skip")
            self._acquire_app("vps", vid)
        return vid

    def get_vt2(self) -> int:
        vid = self.apparatus["vt2"]
        if vid is None:
            vid = self.parent.closing_far_id(self, "backbone")
            self._acquire_app("vt2", vid)
        return vid

    def get_tail_vertex(self) -> int:
        vid = self.apparatus["vt"]
        if vid is not None:
            return vid
        port = self.inward_port
        if port is not None and port.can_take("backbone"):
            vid = port.take_role("backbone")
        else:
            vid = self.parent.provide_tail_id(self)
        self._acquire_app("vt", vid)
        return vid

    def adopt_tail_vertex(self, pid: int) -> None:
        if self.apparatus["vt"] is not None:
            raise RoleAlreadyResolved("tail vertex already materialized")
        self.apparatus["vt"] = pid
        self.world.assign(pid, lambda v: self._reveal_app(v, "vt"))

    def _reveal_app(self, v: int, name: str) -> None:
        w = self.world
        if name == "hub":
            w.ensure_edge(v, self.get_tail_vertex(), 0)
            w.ensure_edge(v, self.extreme_exit_id("tail"), 0)
            if self.kind == "closing":
                w.ensure_edge(v, self.get_vps(), self.port_w)
            elif self.kind == "final":
                w.ensure_edge(v, self.get_end_vertex("exit"), self.port_w)
            else:
                w.ensure_edge(v, self.get_end_vertex("head"), self.port_w)
        elif name == "vps":
            w.ensure_edge(v, self.get_hub(), self.port_w)
            w.ensure_edge(v, self.extreme_exit_id("head"), 0)
            w.ensure_edge(v, self.get_vt2(), 0)
        elif name == "vt2":
            w.ensure_edge(v, self.get_vps(), 0)
        elif name == "vt":
            w.ensure_edge(v, self.get_hub(), 0)
        else:  # pragma: no cover
            raise WorldInconsistency(f"unknown apparatus {name}")
        w.finish_vertex(v)

    # -- child-level services -----------------------------------------------------------------

    def prepare_port(self, child, name) -> None:
        outer = getattr(self, "_outer_of", {}).get(id(child))
        if outer is not None:
            pre = child.pre_roles.setdefault(name, {})
            if "skip" not in pre:
                pre["skip"] = outer.ensure_entry()

    def closing_far_id(self, child, role):  # pragma: no cover
        raise WorldInconsistency("closing apparatus outside a closing block")

    def on_child_needs_extreme(self, *a):  # pragma: no cover
        raise WorldInconsistency("unexpected extreme demand")


# ---------------------------------------------------------------------------
# macroscopic structure: a closed ring of blocks (flat and recursive builds)
# ---------------------------------------------------------------------------


class DequeMacro:
    """Grows a two-ended path of top-level blocks from the origin outward and
    stitches it into a ring with a closing block as the (x+3)-rd block."""

    def __init__(self, world):
        self.world = world
        self.x = world.x
        self.created = 0
        self.closing = None
        self.closing_far = None
        self.closing_side = None
        self.origin_block = None
        self.side_of: dict[int, int] = {}
        self.chains: list[list] = [[], []]
        self.end_blocks = [None, None]
        self.origin_port_side: dict[int, int] = {}

    def bootstrap(self) -> None:
        blk = self._make_top("origin", None, None)
        self.origin_block = blk
        self.created = 1
        self.end_blocks = [blk, blk]
        self.world._origin = blk.ensure_entry()

    def _make_top(self, kind, rule, inward_port):
        w = self.world
        if w.params.topology == "simple":
            return PathBlock(w, kind, rule, self, inward_port=inward_port,
                             simple=True)
        if w.n == 0:
            return PathBlock(w, kind, rule, self, inward_port=inward_port)
        return SlotBlock(w, kind, w.n, rule, self, inward_port=inward_port)

    # -- growth ------------------------------------------------------------------

    def skip_target(self, block, port, pid) -> None:
        if self.closing is not None:
            self.world.log.add("ring_stub", pid)
            self.world.assign(pid, self.world.finish_vertex)
            return
        if block is self.origin_block:
            side = self.origin_port_side.get(id(port))
            if side is None:
                side = 1 if 1 not in self.origin_port_side.values() else 0
                self.origin_port_side[id(port)] = side
        else:
            side = self.side_of[id(block)]
        self.created += 1
        if self.created <= self.x + 2:
            b = self._make_top("normal", "head", port)
        else:
            other = 1 - side
            fb = self.end_blocks[other]
            self.closing_far = PortRef(fb, self._far_head_name(fb))
            b = self._make_top("closing", "fixed", port)
            self.closing = b
            self.closing_side = side
        self.side_of[id(b)] = side
        self.chains[side].append(b)
        self.end_blocks[side] = b
        port.next_block = b
        b.adopt_entry(pid)
        if b is self.closing:
            b.get_vps()
            b.get_vt2()

    def _far_head_name(self, fb) -> str:
        if fb.kind != "origin":
            return fb.head_port_name()
        for name in fb.end_names:
            port = fb.ports.get(name)
            if port is None:
                if "skip" not in fb.pre_roles.get(name, {}):
                    return name
            elif port.can_take("skip"):
                return name
        raise WorldInconsistency("no free head side to close the ring")

    # -- block services ------------------------------------------------------------

    def closing_far_id(self, closing, role) -> int:
        return self.closing_far.resolve_role(role)

    def on_examined(self, block) -> None:
        self.world.log.add("examined", block.kind)

    def prepare_port(self, block, name) -> None:
        pass

    def provide_tail_id(self, block) -> int:  # pragma: no cover
        raise WorldInconsistency("top-level blocks always hang off a port")


# ---------------------------------------------------------------------------
# macroscopic structure: a chain of ringed cycles joined at connection vertices
# ---------------------------------------------------------------------------


class SidePath:
    __slots__ = ("cycle", "kind", "blocks")

    def __init__(self, cycle, kind):
        self.cycle = cycle
        self.kind = kind          # 'half' | 'push'
        self.blocks: list = []


class CycleState:
    __slots__ = ("index", "anchor_origin", "anchor_vcon", "sides", "f_side",
                 "vcon", "z", "push", "closing", "closing_path")

    def __init__(self, index, anchor_origin=None, anchor_vcon=None):
        self.index = index
        self.anchor_origin = anchor_origin
        self.anchor_vcon = anchor_vcon
        self.sides: list[SidePath] = []
        self.f_side: SidePath | None = None
        self.vcon: VconPort | None = None
        self.z: int | None = None
        self.push: list[SidePath] = []
        self.closing = None
        self.closing_path: SidePath | None = None


class ChainMacro:
    """A series of cycles: each grows two halves off its entry anchor, exports
    a connection vertex through a final block, and is closed by a closing
    block; connection vertices join consecutive cycles."""

    def __init__(self, world):
        self.world = world
        self.x = world.x
        self.last_index = world.x   # cycles 0..x
        self.cycles: list[CycleState] = []
        self.path_of: dict[int, SidePath] = {}
        self.origin_port_side: dict[int, SidePath] = {}
        self.origin_block = None

    def bootstrap(self) -> None:
        blk = self._make_top("origin", None, None)
        self.origin_block = blk
        self.cycles.append(CycleState(0, anchor_origin=blk))
        self.world._origin = blk.ensure_entry()

    def _make_top(self, kind, rule, inward_port, exit_target=None):
        w = self.world
        if w.n == 0:
            return PathBlock(w, kind, rule, self, inward_port=inward_port,
                             exit_target=exit_target)
        return SlotBlock(w, kind, w.n, rule, self, inward_port=inward_port,
                         exit_target=exit_target)

    # -- connection vertices --------------------------------------------------------

    def ensure_vcon(self, cyc: CycleState) -> VconPort:
        if cyc.vcon is None:
            vid = self.world.new_vertex()
            port = VconPort(self.world, vid, edge_weight(self.x, self.world.y,
                                                         self.world.n),
                            self, cyc)
            cyc.vcon = port
            self.world.defer_ids.update(port.pendings)
            self.world.bind(vid, lambda v, c=cyc: self._reveal_vcon(v, c))
            self.world.log.add("vcon", cyc.index, vid)
        return cyc.vcon

    def _reveal_vcon(self, v: int, cyc: CycleState) -> None:
        if cyc.z is None:
            lower = [s for s in cyc.sides if s is not cyc.f_side]
            cyc.z = len(lower[0].blocks) if lower else 0
            self.world.log.add("z", cyc.index, cyc.z)
        self.world.finish_vertex(v)

    def vcon_take(self, vport: VconPort, pid: int) -> None:
        cyc = vport.cycle
        if cyc.closing is None:
            path = SidePath(cyc, "push")
            cyc.push.append(path)
        else:
            nxt = self._cycle_after(vport)
            if nxt is None or len(nxt.sides) >= 2:
                self.world.log.add("connector_stub", vport.owner, pid)
                self.world.assign(pid, self.world.finish_vertex)
                return
            path = SidePath(nxt, "half")
            nxt.sides.append(path)
        b = self._make_top("normal", "head", vport)
        path.blocks.append(b)
        self.path_of[id(b)] = path
        b.adopt_entry(pid)

    def _cycle_after(self, vport: VconPort) -> CycleState | None:
        want = vport.cycle.index + 1
        if want > self.last_index:
            return None
        for cyc in self.cycles:
            if cyc.anchor_vcon is vport:
                return cyc
        cyc = CycleState(want, anchor_vcon=vport)
        self.cycles.append(cyc)
        return cyc

    # -- growth along a path -----------------------------------------------------------

    def skip_target(self, block, port, pid) -> None:
        if block is self.origin_block:
            path = self.origin_port_side.get(id(port))
            if path is None:
                cyc0 = self.cycles[0]
                if len(cyc0.sides) >= 2:  # pragma: no cover
                    raise WorldInconsistency("origin block has only two sides")
                path = SidePath(cyc0, "half")
                cyc0.sides.append(path)
                self.origin_port_side[id(port)] = path
        else:
            path = self.path_of[id(block)]
        occupant = self._next_on_path(path, port)
        if occupant is None:
            self.world.log.add("path_stub", pid)
            self.world.assign(pid, self.world.finish_vertex)
            return
        path.blocks.append(occupant)
        self.path_of[id(occupant)] = path
        port.next_block = occupant
        occupant.adopt_entry(pid)
        if occupant is path.cycle.closing:
            occupant.get_vps()
            occupant.get_vt2()

    def _next_on_path(self, path: SidePath, port):
        cyc = path.cycle
        x = self.x
        if path.kind == "push":
            quota = max(1, x // 2 - (cyc.z or 0) + 1)
            if len(path.blocks) >= quota:
                if cyc.closing is None:
                    return self._make_closing(cyc, port, path)
                return None
            return self._make_top("normal", "head", port)
        if cyc.index == self.last_index:
            total = sum(len(s.blocks) for s in cyc.sides)
            if total >= x:
                if cyc.closing is None:
                    return self._make_closing(cyc, port, path)
                return None
            return self._make_top("normal", "head", port)
        if cyc.f_side is None and len(path.blocks) == x // 2 + 1:
            cyc.f_side = path
            return self._make_top("final", "fixed", port,
                                  exit_target=lambda c=cyc:
                                  self.ensure_vcon(c).owner)
        if cyc.f_side is not None and path is not cyc.f_side \
                and len(path.blocks) >= x // 2 + 1:
            if cyc.closing is None:
                return self._make_closing(cyc, port, path)
            return None
        return self._make_top("normal", "head", port)

    def _make_closing(self, cyc: CycleState, port, path: SidePath):
        far = self._closing_far_ref(cyc, path)
        b = self._make_top("closing", "fixed", port)
        cyc.closing = b
        cyc.closing_path = path
        self._closing_fars = getattr(self, "_closing_fars", {})
        self._closing_fars[id(b)] = far
        self.world.log.add("cycle_closed", cyc.index, path.kind)
        return b

    def _closing_far_ref(self, cyc: CycleState, path: SidePath):
        if path.kind == "push" or cyc.index == self.last_index:
            lower = [s for s in cyc.sides
                     if s is not cyc.f_side and s is not path and s.blocks]
            if lower:
                last = lower[0].blocks[-1]
                return PortRef(last, last.head_port_name())
            return self._anchor_ref(cyc)
        # closing grown from the lower half itself: attach to the cycle's
        # own connection vertex
        return self.ensure_vcon(cyc)

    def _anchor_ref(self, cyc: CycleState):
        if cyc.anchor_vcon is not None:
            return cyc.anchor_vcon
        fb = self.origin_block
        for name in fb.end_names:
            p = fb.ports.get(name)
            if p is None:
                if "skip" not in fb.pre_roles.get(name, {}):
                    return PortRef(fb, name)
            elif p.can_take("skip"):
                return PortRef(fb, name)
        raise WorldInconsistency("no anchor left for a closing block")

    # -- block services ---------------------------------------------------------------

    def closing_far_id(self, closing, role) -> int:
        return self._closing_fars[id(closing)].resolve_role(role)

    def on_examined(self, block) -> None:
        self.world.log.add("examined", block.kind)

    def prepare_port(self, block, name) -> None:
        pass

    def provide_tail_id(self, block) -> int:  # pragma: no cover
        raise WorldInconsistency("top-level blocks always hang off a port")


# ---------------------------------------------------------------------------
# factory
# ---------------------------------------------------------------------------


def new_world(params: Params) -> AdversaryWorld:
    """Fresh adaptive world with only the origin vertex committed."""
    p = params.normalized()
    world = AdversaryWorld(p)
    if p.topology in ("simple", "rec"):
        world.macro = DequeMacro(world)
    else:
        world.macro = ChainMacro(world)
    world.macro.bootstrap()
    return world
