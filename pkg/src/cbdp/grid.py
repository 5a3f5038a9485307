"""Finite box grids as graphs and cubical complexes.

The state space is E = {0..n1} x ... x {0..nm}.  All downstream matrices and
vector indexings rely on the two canonical orders fixed here:

* vertices: lexicographic with the first coordinate most significant;
* directed edges: by (axis ascending, sign + before -, source vertex lex).

Edge naming for m <= 3 follows the usual R/L (axis 1), U/D (axis 2), F/B
(axis 3) letters subscripted by the source vertex; higher dimensions fall
back to a generic "X{k}p@i,j,..." scheme.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import prod

Vertex = tuple[int, ...]

_POS_LETTER = {0: "R", 1: "U", 2: "F"}
_NEG_LETTER = {0: "L", 1: "D", 2: "B"}


@dataclass(frozen=True)
class GridShape:
    """Axis sizes (n1, ..., nm); the grid has (ni + 1) levels per axis."""

    n: tuple[int, ...]

    def __post_init__(self):
        if len(self.n) < 1:
            raise ValueError("shape needs at least one axis")
        if any(int(k) != k or k < 1 for k in self.n):
            raise ValueError(f"axis sizes must be positive integers: {self.n}")
        object.__setattr__(self, "n", tuple(int(k) for k in self.n))

    @property
    def m(self) -> int:
        return len(self.n)

    @property
    def vertex_count(self) -> int:
        return prod(k + 1 for k in self.n)

    @property
    def directed_edge_count(self) -> int:
        return 2 * sum(
            k * prod(j + 1 for i, j in enumerate(self.n) if i != a)
            for a, k in enumerate(self.n)
        )

    def __str__(self) -> str:
        return "x".join(str(k) for k in self.n)


def parse_shape(text) -> GridShape:
    """Parse a CLI shape spec such as "2x1" or "1x1x1"."""
    if isinstance(text, GridShape):
        return text
    if isinstance(text, (tuple, list)):
        return GridShape(tuple(text))
    try:
        parts = tuple(int(p) for p in str(text).split("x"))
    except ValueError as exc:
        raise ValueError(f"bad shape {text!r}; expected sizes joined by 'x'") from exc
    return GridShape(parts)


@dataclass(frozen=True)
class DirectedEdge:
    """A directed nearest-neighbor step: source + sign * e_axis (axis 0-based)."""

    source: Vertex
    axis: int
    sign: int

    @property
    def target(self) -> Vertex:
        u = list(self.source)
        u[self.axis] += self.sign
        return tuple(u)

    @property
    def reverse(self) -> "DirectedEdge":
        return DirectedEdge(self.target, self.axis, -self.sign)


@dataclass(frozen=True)
class EdgeClass:
    """Parallel class of an undirected edge: (axis, level h) with h = min coordinate."""

    axis: int
    level: int


def _coord_label(u: Vertex, compact: bool) -> str:
    if compact:
        return "".join(str(c) for c in u)
    return ",".join(str(c) for c in u)


class Grid:
    """A concrete grid with canonical vertex and directed-edge enumerations."""

    def __init__(self, shape: GridShape):
        self.shape = shape
        n = shape.n
        self.vertices: list[Vertex] = [
            v for v in itertools.product(*(range(k + 1) for k in n))
        ]
        self.vertex_index = {v: i for i, v in enumerate(self.vertices)}

        edges: list[DirectedEdge] = []
        for axis in range(shape.m):
            for sign in (+1, -1):
                for v in self.vertices:
                    if sign == +1 and v[axis] < n[axis]:
                        edges.append(DirectedEdge(v, axis, +1))
                    elif sign == -1 and v[axis] > 0:
                        edges.append(DirectedEdge(v, axis, -1))
        self.edges = edges
        self.edge_index = {e: i for i, e in enumerate(edges)}
        compact = all(k <= 8 for k in n)
        self._compact_names = compact
        self.edge_names = [self._name(e) for e in edges]
        self.name_to_edge = {s: e for s, e in zip(self.edge_names, edges)}

    def _name(self, e: DirectedEdge) -> str:
        if self.shape.m <= 3:
            letter = (_POS_LETTER if e.sign > 0 else _NEG_LETTER)[e.axis]
            return letter + _coord_label(e.source, self._compact_names)
        tag = "p" if e.sign > 0 else "m"
        return f"X{e.axis + 1}{tag}@" + _coord_label(e.source, False)

    def vertex_label(self, u: Vertex) -> str:
        return _coord_label(u, self._compact_names)

    def edge_between(self, u: Vertex, v: Vertex) -> DirectedEdge:
        diff = [b - a for a, b in zip(u, v)]
        nz = [i for i, d in enumerate(diff) if d != 0]
        if len(nz) != 1 or abs(diff[nz[0]]) != 1:
            raise ValueError(f"{u} and {v} are not nearest neighbors")
        e = DirectedEdge(tuple(u), nz[0], diff[nz[0]])
        if e not in self.edge_index:
            raise ValueError(f"edge {u}->{v} leaves the grid")
        return e

    def neighbors(self, u: Vertex) -> list[Vertex]:
        out = []
        for axis in range(self.shape.m):
            for sign in (+1, -1):
                w = u[axis] + sign
                if 0 <= w <= self.shape.n[axis]:
                    v = list(u)
                    v[axis] = w
                    out.append(tuple(v))
        return out

    def squares(self):
        """2-cells as (axis pair (i, j), base vertex), in canonical order.

        Pairs ascend lexicographically; bases follow the vertex order.
        """
        n = self.shape.n
        for i, j in itertools.combinations(range(self.shape.m), 2):
            for w in self.vertices:
                if w[i] < n[i] and w[j] < n[j]:
                    yield (i, j), w

    def square_corners(self, axes, base):
        """Corners (a, b, c, d) of a 2-cell: base, +e_i, +e_i+e_j, +e_j."""
        i, j = axes
        a = tuple(base)
        b = tuple(c + (1 if k == i else 0) for k, c in enumerate(base))
        d = tuple(c + (1 if k == j else 0) for k, c in enumerate(base))
        c_ = tuple(c + (1 if k in (i, j) else 0) for k, c in enumerate(base))
        return a, b, c_, d

    def relation_quadruples(self):
        """Edge-index quadruples ((x,y),(y,z),(x,v),(v,z)) of each commutation relation.

        Per 2-cell with corners a,b,c,d in cyclic order, the four relations
        compare the two 2-step paths from each corner to the opposite one;
        the relation value is p(x,y) p(y,z) - p(x,v) p(v,z).  Enumeration
        order: (axis pair, base vertex, corner).
        """
        out = []
        for axes, base in self.squares():
            cyc = self.square_corners(axes, base)
            for r in range(4):
                x, y = cyc[r], cyc[(r + 1) % 4]
                z, v = cyc[(r + 2) % 4], cyc[(r + 3) % 4]
                out.append(
                    (
                        self.edge_index[self.edge_between(x, y)],
                        self.edge_index[self.edge_between(y, z)],
                        self.edge_index[self.edge_between(x, v)],
                        self.edge_index[self.edge_between(v, z)],
                        (axes, base, r),
                    )
                )
        return out


@lru_cache(maxsize=None)
def build_grid(shape: GridShape) -> Grid:
    """Build (and cache) the canonical grid for a shape."""
    return Grid(shape)


def parallel_class(e: DirectedEdge) -> EdgeClass:
    """Sign-independent parallel class (axis, level) of a directed edge."""
    level = min(e.source[e.axis], e.source[e.axis] + e.sign)
    return EdgeClass(e.axis, level)


def edge_classes(shape: GridShape) -> list[EdgeClass]:
    """All parallel classes in canonical order (axis, then level)."""
    return [
        EdgeClass(axis, h) for axis in range(shape.m) for h in range(shape.n[axis])
    ]


def class_label(shape: GridShape, cls: EdgeClass) -> str:
    """Weight-parameter name: h/v/f with 1-based level for m <= 3, else generic."""
    letters = {0: "h", 1: "v", 2: "f"}
    if shape.m <= 3:
        return f"{letters[cls.axis]}{cls.level + 1}"
    return f"w{cls.axis + 1}.{cls.level + 1}"


def count_cells(shape: GridShape, ell: int) -> int:
    """Number of ell-dimensional cells of the cubical complex on the grid."""
    if ell < 0 or ell > shape.m:
        raise ValueError(f"cell dimension {ell} out of range 0..{shape.m}")
    n = shape.n
    total = 0
    for axes in itertools.combinations(range(shape.m), ell):
        inside = prod(n[k] for k in axes)
        outside = prod(n[k] + 1 for k in range(shape.m) if k not in axes)
        total += inside * outside
    return total


def cell_alternating_sum(shape: GridShape) -> int:
    """Alternating cell count sum_{l=2..m} (-1)^l (l+1) #l-cells."""
    return sum(
        (-1) ** ell * (ell + 1) * count_cells(shape, ell)
        for ell in range(2, shape.m + 1)
    )
