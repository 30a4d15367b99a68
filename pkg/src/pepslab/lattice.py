"""Square-lattice geometry.

Sites are indexed row-major (``id = row * width + col``).  Every edge is
owned by its tail site and identified by ``(tail, direction)`` with the
direction either RIGHT or DOWN, so parallel wrap edges on thin tori stay
distinct.  Directions are always listed clockwise: up, right, down, left.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np

UP, RIGHT, DOWN, LEFT = 0, 1, 2, 3
DIRECTIONS = (UP, RIGHT, DOWN, LEFT)
OPPOSITE = {UP: DOWN, RIGHT: LEFT, DOWN: UP, LEFT: RIGHT}
_STEP = {UP: (-1, 0), RIGHT: (0, 1), DOWN: (1, 0), LEFT: (0, -1)}


class Boundary(str, enum.Enum):
    OPEN = "open"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class Edge:
    id: int
    tail: int
    head: int
    direction: int  # RIGHT or DOWN, as seen from the tail


@dataclass(frozen=True)
class SquareLattice:
    width: int
    height: int
    boundary: Boundary = Boundary.OPEN

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"lattice dimensions must be positive, got {self.width}x{self.height}")
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if self.periodic and (self.width < 2 or self.height < 2):
            # a 1-wide torus would need self-edges
            raise ValueError("periodic lattices need width >= 2 and height >= 2")

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC

    @property
    def n_sites(self) -> int:
        return self.width * self.height

    def site(self, row: int, col: int) -> int:
        if not (0 <= row < self.height and 0 <= col < self.width):
            raise ValueError(f"({row}, {col}) is outside the {self.width}x{self.height} lattice")
        return row * self.width + col

    def coords(self, s: int) -> tuple[int, int]:
        self._check_site(s)
        return divmod(s, self.width)

    def _check_site(self, s) -> None:
        if not (0 <= int(s) < self.n_sites) or int(s) != s:
            raise ValueError(f"invalid site id {s!r} for {self.n_sites}-site lattice")

    def _step(self, s: int, direction: int) -> int | None:
        r, c = divmod(s, self.width)
        dr, dc = _STEP[direction]
        r, c = r + dr, c + dc
        if self.periodic:
            return self.site(r % self.height, c % self.width)
        if 0 <= r < self.height and 0 <= c < self.width:
            return self.site(r, c)
        return None

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        out = []
        for s in range(self.n_sites):
            for direction in (RIGHT, DOWN):
                t = self._step(s, direction)
                if t is not None:
                    out.append(Edge(len(out), s, t, direction))
        return tuple(out)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def _leg_table(self) -> tuple[tuple[int | None, ...], ...]:
        # _leg_table[s][direction] -> edge id attached to that leg, or None
        table = [[None] * 4 for _ in range(self.n_sites)]
        for e in self.edges:
            table[e.tail][e.direction] = e.id
            table[e.head][OPPOSITE[e.direction]] = e.id
        return tuple(tuple(row) for row in table)

    def leg_edge(self, s: int, direction: int) -> int | None:
        """Edge id carried by the leg of site ``s`` pointing in ``direction``."""
        self._check_site(s)
        return self._leg_table[s][direction]

    def incident_edges(self, s: int) -> list[tuple[int, int]]:
        """``(direction, edge id)`` pairs for every existing leg of ``s``, clockwise."""
        self._check_site(s)
        return [(d, e) for d, e in enumerate(self._leg_table[s]) if e is not None]

    def neighbors(self, s: int) -> list[int]:
        """Neighbor site ids in (up, right, down, left) order.

        Open boundaries drop missing directions.  On thin tori the same site
        may appear twice, once per distinct edge.
        """
        self._check_site(s)
        return [self._step(s, d) for d, _ in self.incident_edges(s)]

    def degree(self, s: int) -> int:
        return len(self.incident_edges(s))

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Tail and head site arrays indexed by edge id."""
        tails = np.array([e.tail for e in self.edges], dtype=np.int64)
        heads = np.array([e.head for e in self.edges], dtype=np.int64)
        return tails, heads

    def boundary_edges(self, block: "Block | Iterable[int]") -> set[int]:
        """Edges with exactly one endpoint inside ``block`` (the cut bonds)."""
        sites = block.sites if isinstance(block, Block) else frozenset(int(s) for s in block)
        for s in sites:
            self._check_site(s)
        return {e.id for e in self.edges if (e.tail in sites) != (e.head in sites)}

    def rectangle(self, row: int, col: int, height: int, width: int) -> "Block":
        if not (0 <= row and row + height <= self.height and 0 <= col and col + width <= self.width):
            raise ValueError("rectangle does not fit inside the lattice")
        return Block(frozenset(self.site(r, c) for r in range(row, row + height)
                               for c in range(col, col + width)))

    def rectangular_blocks(self, proper: bool = True) -> Iterator["Block"]:
        """All axis-aligned rectangles (no wrap-around), optionally excluding the full lattice."""
        for h in range(1, self.height + 1):
            for w in range(1, self.width + 1):
                if proper and h == self.height and w == self.width:
                    continue
                for r in range(self.height - h + 1):
                    for c in range(self.width - w + 1):
                        yield self.rectangle(r, c, h, w)

    def checkerboard(self, s: int) -> int:
        r, c = self.coords(s)
        return (r + c) % 2

    def to_dict(self) -> dict:
        return {"width": self.width, "height": self.height, "boundary": self.boundary.value}


@dataclass(frozen=True)
class Block:
    sites: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "sites", frozenset(int(s) for s in self.sites))

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self):
        return iter(sorted(self.sites))

    def complement(self, lattice: SquareLattice) -> "Block":
        return Block(frozenset(range(lattice.n_sites)) - self.sites)

    def __or__(self, other: "Block") -> "Block":
        return Block(self.sites | other.sites)
