"""Exact evaluation of the construction's cost recursions and closed forms.

Every quantity is an exact integer (ratios are ``Fraction``).  Level -1 seeds:
a unit edge costs 1 to walk (``edge_weight(-1) == 1``), traversing an already
explored single vertex is free (``traversal_cost(-1) == 0``), and both the
explorer's and the optimum's per-unit seeds are 1.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .params import InvalidParams, Params


def _check(x: int, y: int, i: int) -> None:
    if x < 2 or not (0 <= y <= x // 2) or i < -1:
        raise InvalidParams(f"bad formula arguments x={x} y={y} i={i}")


def edge_weight(x: int, y: int, i: int) -> int:
    """Weight of a level-``i`` connector edge; multiplies by (x+y) per level."""
    _check(x, y, i)
    if i == -1:
        return 1
    return (x + y) ** i * x


def traversal_cost(x: int, y: int, i: int) -> int:
    """Cost charged for crossing an explored level-``i`` block start-to-head."""
    _check(x, y, i)
    if i == -1:
        return 0
    # equals (y/x) * edge_weight exactly; edge_weight is divisible by x
    return y * (x + y) ** i


def u_bound(x: int, y: int, i: int) -> int:
    """Explorer's per-block lower bound, level ``i`` (seed 1 at level -1)."""
    _check(x, y, i)
    u = 1
    for j in range(0, i + 1):
        u = x * u + 3 * edge_weight(x, y, j) - traversal_cost(x, y, j)
    return u


def u_bound_closed(x: int, y: int, i: int) -> int:
    """Power-series form of ``u_bound``; must agree with the recursion."""
    _check(x, y, i)
    if i == -1:
        return 1
    total = x ** (i + 1)
    for j in range(0, i + 1):
        total += x**j * (3 * edge_weight(x, y, i - j) - traversal_cost(x, y, i - j))
    return total


def ucirc_bound(x: int, y: int, n: int) -> int:
    """Per-block bound used in the chained-cycle accounting: x*u(n-1) + 3e(n)."""
    _check(x, y, n)
    if n < 0:
        raise InvalidParams("ucirc_bound needs n >= 0")
    return x * u_bound(x, y, n - 1) + 3 * edge_weight(x, y, n)


def ucirc_closed(x: int, n: int) -> int:
    """Closed form of ``ucirc_bound(x, x//2, n) + 2*e(n)`` for y = x/2, x even."""
    if x % 2 != 0:
        raise InvalidParams("closed chain form requires even x")
    y = x // 2
    _check(x, y, n)
    total = x ** (n + 1) + 5 * edge_weight(x, y, n)
    for j in range(1, n + 1):
        term = 5 * x**j * edge_weight(x, y, n - j)
        assert term % 2 == 0
        total += term // 2
    return total


def v_cost(x: int, y: int, i: int) -> int:
    """Optimum's cost to explore a level-``i`` block and enter the next one."""
    _check(x, y, i)
    v = 1
    for j in range(0, i + 1):
        v = (x + 3) * v - edge_weight(x, y, j - 1) + edge_weight(x, y, j)
    return v


def alg_lower_bound(params: Params) -> int:
    p = params.normalized()
    if p.topology == "simple":
        return 4 * p.x * p.x - p.x
    if p.topology == "rec":
        return p.x * u_bound(p.x, p.y, p.n)
    return p.x * p.x * (ucirc_bound(p.x, p.y, p.n) + 2 * edge_weight(p.x, p.y, p.n))


def opt_formula(params: Params) -> int:
    p = params.normalized()
    if p.topology == "simple":
        return 2 * p.x * p.x + 6 * p.x
    if p.topology == "rec":
        return (p.x + 3) * v_cost(p.x, p.y, p.n)
    blocks = (p.x + 1) * (p.x + 2) + 1
    return blocks * v_cost(p.x, p.y, p.n) + (2 * p.x - 1) * edge_weight(p.x, p.y, p.n)


def analytic_ratio(params: Params) -> Fraction:
    opt = opt_formula(params)
    if opt == 0:
        raise ZeroDivisionError("zero optimum in analytic ratio")
    return Fraction(alg_lower_bound(params), opt)


def limit_value(topology: str, n: int = 0) -> Fraction:
    """Asymptotic ratio bound as x grows, for ``n`` recursion levels."""
    if topology == "simple":
        return Fraction(2)
    if topology == "rec":
        return 3 - Fraction(2, n + 2)
    if topology == "chain":
        return Fraction(10, 3) - Fraction(2, 3 * n + 6)
    raise InvalidParams(f"unknown topology {topology!r}")


def limit_for_weight_classes(k: int) -> Fraction:
    """Bound for graphs with ``k`` distinct weights (lifted chain, k = n+2)."""
    if k <= 1:
        raise InvalidParams("needs k > 1 distinct weights")
    return Fraction(10, 3) - Fraction(2, 3 * k)


@dataclass(frozen=True)
class FormulaTable:
    """All exact quantities for one parameter point."""

    x: int
    y: int
    n: int
    topology: str
    e: tuple[int, ...]  # levels -1..n
    t: tuple[int, ...]
    u: tuple[int, ...]
    u_circ: int
    v: tuple[int, ...]
    alg_lb: int
    opt_formula: int
    ratio: Fraction
    limit: Fraction

    @classmethod
    def build(cls, params: Params) -> "FormulaTable":
        p = params.normalized()
        x, y, n = p.x, p.y, p.n
        rng = range(-1, n + 1)
        return cls(
            x=x,
            y=y,
            n=n,
            topology=p.topology,
            e=tuple(edge_weight(x, y, i) for i in rng),
            t=tuple(traversal_cost(x, y, i) for i in rng),
            u=tuple(u_bound(x, y, i) for i in rng),
            u_circ=ucirc_bound(x, y, n),
            v=tuple(v_cost(x, y, i) for i in rng),
            alg_lb=alg_lower_bound(p),
            opt_formula=opt_formula(p),
            ratio=analytic_ratio(p),
            limit=limit_value(p.topology, n),
        )

    def to_dict(self) -> dict:
        return {
            "topology": self.topology,
            "x": self.x,
            "y": self.y,
            "n": self.n,
            "e": list(self.e),
            "t": list(self.t),
            "u": list(self.u),
            "u_circ": self.u_circ,
            "v": list(self.v),
            "alg_lower_bound": self.alg_lb,
            "opt_formula": self.opt_formula,
            "ratio": [str(self.ratio.numerator), str(self.ratio.denominator)],
            "limit": [str(self.limit.numerator), str(self.limit.denominator)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @staticmethod
    def csv_header() -> list[str]:
        return ["topology", "x", "y", "N", "alg_lb", "opt_formula",
                "ratio_num", "ratio_den", "limit_num", "limit_den"]

    def csv_row(self) -> list[str]:
        return [self.topology, str(self.x), str(self.y), str(self.n),
                str(self.alg_lb), str(self.opt_formula),
                str(self.ratio.numerator), str(self.ratio.denominator),
                str(self.limit.numerator), str(self.limit.denominator)]


def write_formula_csv(tables: Iterable[FormulaTable], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FormulaTable.csv_header())
        for t in tables:
            writer.writerow(t.csv_row())
