"""Construction parameters shared by the adversary and the analysis layer."""

from __future__ import annotations

from dataclasses import dataclass

TOPOLOGIES = ("simple", "rec", "chain")


class InvalidParams(ValueError):
    pass


@dataclass(frozen=True)
class Params:
    """Instance parameters: block width ``x``, backtrack constant ``y``,
    recursion depth ``levels`` and the macroscopic topology.

    ``y`` defaults per topology (0 for rec, x/2 for chain); ``levels`` is
    ignored for the simple topology.
    """

    topology: str
    x: int
    y: int | None = None
    levels: int = 0

    def normalized(self) -> "Params":
        if self.topology not in TOPOLOGIES:
            raise InvalidParams(f"unknown topology {self.topology!r}")
        if self.x < 2:
            raise InvalidParams("x must be at least 2")
        if self.topology == "simple":
            return Params("simple", self.x, 0, 0)
        if self.levels < 0:
            raise InvalidParams("levels must be >= 0")
        y = self.y
        if self.topology == "chain":
            if self.x % 2 != 0:
                raise InvalidParams("chain topology requires even x")
            if y is None:
                y = self.x // 2
        elif y is None:
            y = 0
        if not (0 <= y <= self.x // 2):
            raise InvalidParams(f"y={y} outside 0..x/2")
        return Params(self.topology, self.x, y, self.levels)

    @property
    def n(self) -> int:
        return self.levels
