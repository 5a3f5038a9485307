"""Nearest-neighbor transition kernels and commutation checking.

A kernel stores one probability per directed edge (missing edges are 0); the
per-vertex slack 1 - sum_v p(u,v) is routed to an implicit absorbing state.
Kernels come in two arithmetic modes: 64-bit float and exact rational
(``fractions.Fraction`` entries).  Conversions are explicit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .grid import DirectedEdge, Grid, GridShape, Vertex, build_grid

EXACT = "exact"
FLOAT = "float"


def _parse_value(v, mode):
    if mode == EXACT:
        if isinstance(v, str):
            return Fraction(v)
        if isinstance(v, int):
            return Fraction(v)
        if isinstance(v, Fraction):
            return v
        raise ValueError(f"exact mode needs rational entries, got {v!r}")
    return float(v)


@dataclass
class TransitionKernel:
    """Transition probabilities indexed by the canonical directed-edge order."""

    shape: GridShape
    p: list
    mode: str = FLOAT
    off_support: list = field(default_factory=list)

    def __post_init__(self):
        grid = build_grid(self.shape)
        if len(self.p) != len(grid.edges):
            raise ValueError(
                f"kernel needs {len(grid.edges)} entries, got {len(self.p)}"
            )

    @classmethod
    def zero(cls, shape: GridShape, mode: str = FLOAT) -> "TransitionKernel":
        grid = build_grid(shape)
        z = Fraction(0) if mode == EXACT else 0.0
        return cls(shape, [z] * len(grid.edges), mode)

    @property
    def grid(self) -> Grid:
        return build_grid(self.shape)

    def prob(self, e: DirectedEdge):
        return self.p[self.grid.edge_index[e]]

    def prob_between(self, u: Vertex, v: Vertex):
        return self.p[self.grid.edge_index[self.grid.edge_between(u, v)]]

    def set_between(self, u: Vertex, v: Vertex, value):
        self.p[self.grid.edge_index[self.grid.edge_between(u, v)]] = value

    def row_sum(self, u: Vertex):
        grid = self.grid
        zero = Fraction(0) if self.mode == EXACT else 0.0
        total = zero
        for v in grid.neighbors(u):
            total += self.prob_between(u, v)
        return total

    def slack(self, u: Vertex):
        one = Fraction(1) if self.mode == EXACT else 1.0
        return one - self.row_sum(u)

    def to_float(self) -> "TransitionKernel":
        return TransitionKernel(self.shape, [float(x) for x in self.p], FLOAT)

    def to_exact(self) -> "TransitionKernel":
        return TransitionKernel(self.shape, [Fraction(x) for x in self.p], EXACT)

    def dense(self):
        """Vertex-by-vertex transition matrix (numpy for float, lists for exact)."""
        grid = self.grid
        n = len(grid.vertices)
        if self.mode == FLOAT:
            M = np.zeros((n, n))
            for e, val in zip(grid.edges, self.p):
                M[grid.vertex_index[e.source], grid.vertex_index[e.target]] = val
            return M
        M = [[Fraction(0)] * n for _ in range(n)]
        for e, val in zip(grid.edges, self.p):
            M[grid.vertex_index[e.source]][grid.vertex_index[e.target]] = val
        return M

    # -- JSON wire format -------------------------------------------------
    def to_json(self) -> dict:
        grid = self.grid
        entries = []
        for e, val in zip(grid.edges, self.p):
            if val == 0:
                continue
            entries.append(
                {
                    "from": list(e.source),
                    "dir": e.axis + 1,
                    "sign": e.sign,
                    "p": str(Fraction(val)) if self.mode == EXACT else float(val),
                }
            )
        return {"shape": list(self.shape.n), "entries": entries}

    @classmethod
    def from_json(cls, payload: dict, mode: str | None = None, strict: bool = True):
        shape = GridShape(tuple(payload["shape"]))
        grid = build_grid(shape)
        if mode is None:
            mode = (
                EXACT
                if any(isinstance(e.get("p"), str) for e in payload.get("entries", []))
                else FLOAT
            )
        kern = cls.zero(shape, mode)
        for entry in payload.get("entries", []):
            e = DirectedEdge(tuple(entry["from"]), int(entry["dir"]) - 1, int(entry["sign"]))
            idx = grid.edge_index.get(e)
            if idx is None:
                if strict:
                    raise ValueError(f"entry off the edge set: {entry}")
                kern.off_support.append(entry)
                continue
            kern.p[idx] = _parse_value(entry["p"], mode)
        return kern

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def loads(cls, text: str, **kw) -> "TransitionKernel":
        return cls.from_json(json.loads(text), **kw)


@dataclass
class DirectionalPart:
    """Restriction P_k of a kernel to the steps along one axis."""

    axis: int
    kernel: TransitionKernel


@dataclass
class ValidationReport:
    negative: list
    overflow: list
    off_support: list

    @property
    def ok(self) -> bool:
        return not (self.negative or self.overflow or self.off_support)


def validate(kernel: TransitionKernel, tol: float = 1e-12) -> ValidationReport:
    """Flag negative entries and row sums above 1 (beyond tol in float mode)."""
    grid = kernel.grid
    negative = [
        (grid.edge_names[i], v) for i, v in enumerate(kernel.p) if v < 0
    ]
    slack_tol = 0 if kernel.mode == EXACT else tol
    overflow = []
    for u in grid.vertices:
        s = kernel.row_sum(u)
        if s > 1 + slack_tol:
            overflow.append((grid.vertex_label(u), s))
    return ValidationReport(negative, overflow, list(kernel.off_support))


def split_directions(kernel: TransitionKernel) -> list[DirectionalPart]:
    """Decompose P = sum_k P_k by step direction; the sum is exact."""
    grid = kernel.grid
    parts = []
    for axis in range(kernel.shape.m):
        part = TransitionKernel.zero(kernel.shape, kernel.mode)
        for i, e in enumerate(grid.edges):
            if e.axis == axis:
                part.p[i] = kernel.p[i]
        parts.append(DirectionalPart(axis, part))
    return parts


@dataclass(frozen=True)
class RelationId:
    """Identifies one quadratic commutation relation.

    axes: the axis pair (i, j) of the 2-cell; base: its base vertex; corner:
    which corner (0..3) the two 2-step paths start from; label: the relation
    written with edge variable names, "p1*p2-p3*p4".
    """

    axes: tuple[int, int]
    base: Vertex
    corner: int
    label: str


def commutation_residuals(kernel: TransitionKernel):
    """Signed values of every quadratic commutation relation.

    Returns (list of (RelationId, value), max_abs).  A kernel commutes iff all
    residuals vanish; there are 4 relations per 2-cell.
    """
    grid = kernel.grid
    names = grid.edge_names
    p = kernel.p
    out = []
    zero = Fraction(0) if kernel.mode == EXACT else 0.0
    max_abs = zero
    for q0, q1, q2, q3, (axes, base, corner) in grid.relation_quadruples():
        val = p[q0] * p[q1] - p[q2] * p[q3]
        label = f"{names[q0]}*{names[q1]}-{names[q2]}*{names[q3]}"
        out.append((RelationId(axes, base, corner, label), val))
        if abs(val) > max_abs:
            max_abs = abs(val)
    return out, max_abs


def default_commutation_tol(kernel: TransitionKernel):
    """Float-mode tolerance: 1e-10 relative to the largest two-entry product."""
    if kernel.mode == EXACT:
        return 0
    mx = max((abs(float(x)) for x in kernel.p), default=0.0)
    return 1e-10 * mx * mx


def _commutator_max(kernel: TransitionKernel):
    """Independent check: largest entry of P_i P_j - P_j P_i over all pairs."""
    parts = [prt.kernel.dense() for prt in split_directions(kernel)]
    m = kernel.shape.m
    zero = Fraction(0) if kernel.mode == EXACT else 0.0
    best = zero
    for i in range(m):
        for j in range(i + 1, m):
            if kernel.mode == FLOAT:
                comm = parts[i] @ parts[j] - parts[j] @ parts[i]
                val = float(np.abs(comm).max()) if comm.size else 0.0
            else:
                A, B = parts[i], parts[j]
                n = len(A)
                val = zero
                for r in range(n):
                    Ar, Br = A[r], B[r]
                    for c in range(n):
                        s = zero
                        for k in range(n):
                            s += Ar[k] * B[k][c] - Br[k] * A[k][c]
                        if abs(s) > val:
                            val = abs(s)
            if val > best:
                best = val
    return best


def is_commuting(kernel: TransitionKernel, tol=None) -> bool:
    """True iff all commutation residuals are within tol.

    Cross-checked against the direct commutator maximum; the relation values
    enumerate exactly the nonzero commutator entries, so the two tests must
    agree.
    """
    if tol is None:
        tol = default_commutation_tol(kernel)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    _, rmax = commutation_residuals(kernel)
    by_residuals = rmax <= tol
    by_products = _commutator_max(kernel) <= tol
    if by_residuals != by_products:
        raise AssertionError(
            "residual and matrix-product commutation tests disagree"
        )
    return by_residuals
