"""Exact integer/rational linear algebra for the grid matrices.

Builds the parametrization matrix A (one column per directed edge, rows for
vertex weights then edge-class weights) and the constraint matrix S (one
+1,+1,-1,-1 row per quadratic commutation relation), exact ranks by
fraction-free elimination, the closed-form rank predictions, and integer
kernel lattice bases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, prod

import numpy as np

from .errors import DimensionMismatch
from .grid import (
    GridShape,
    build_grid,
    class_label,
    edge_classes,
    parallel_class,
)

# int64 Bareiss stays exact as long as every intermediate minor fits; guard
# well below the point where a pivot product could overflow.
_INT64_GUARD = 2**30


@dataclass
class ExactMatrix:
    """Dense matrix with exact integer/rational entries and labeled axes."""

    row_labels: list[str]
    col_labels: list[str]
    rows: list[list]  # entries are int or Fraction

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def ncols(self) -> int:
        return len(self.col_labels)

    def __post_init__(self):
        if len(self.row_labels) != len(self.rows):
            raise DimensionMismatch("row labels do not match row count")
        for r in self.rows:
            if len(r) != len(self.col_labels):
                raise DimensionMismatch("column labels do not match row length")

    def entry(self, i: int, j: int):
        return self.rows[i][j]

    def integer_rows(self) -> list[list[int]]:
        """Rows scaled to integers (per-row denominator clearing)."""
        out = []
        for row in self.rows:
            if all(isinstance(x, int) for x in row):
                out.append(list(row))
                continue
            fracs = [Fraction(x) for x in row]
            den = 1
            for f in fracs:
                den = den * f.denominator // gcd(den, f.denominator)
            out.append([int(f * den) for f in fracs])
        return out

    def to_numpy(self) -> np.ndarray:
        return np.array(self.integer_rows(), dtype=np.int64).reshape(
            self.nrows, self.ncols
        )

    def dump(self) -> str:
        """Serialize in the plain lattice-tool format: "rows cols" then rows."""
        lines = [f"{self.nrows} {self.ncols}"]
        for row in self.rows:
            lines.append(" ".join(str(x) for x in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "ExactMatrix":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        nr, nc = (int(x) for x in lines[0].split())
        rows = [[int(x) for x in ln.split()] for ln in lines[1 : nr + 1]]
        return cls(
            row_labels=[f"r{i}" for i in range(nr)],
            col_labels=[f"c{j}" for j in range(nc)],
            rows=rows,
        )


def build_A(shape: GridShape) -> ExactMatrix:
    """Parametrization matrix: column (u,v) has +1 at a_u, -1 at a_v, +1 at W."""
    grid = build_grid(shape)
    classes = edge_classes(shape)
    class_pos = {c: i for i, c in enumerate(classes)}
    nv = len(grid.vertices)
    row_labels = [f"a{grid.vertex_label(v)}" for v in grid.vertices] + [
        class_label(shape, c) for c in classes
    ]
    rows = [[0] * len(grid.edges) for _ in row_labels]
    for j, e in enumerate(grid.edges):
        rows[grid.vertex_index[e.source]][j] += 1
        rows[grid.vertex_index[e.target]][j] -= 1
        rows[nv + class_pos[parallel_class(e)]][j] += 1
    return ExactMatrix(row_labels, list(grid.edge_names), rows)


def build_S(shape: GridShape) -> ExactMatrix:
    """Constraint matrix: one +1,+1,-1,-1 row per commutation relation."""
    grid = build_grid(shape)
    names = grid.edge_names
    rows = []
    labels = []
    for q in grid.relation_quadruples():
        row = [0] * len(grid.edges)
        row[q[0]] += 1
        row[q[1]] += 1
        row[q[2]] -= 1
        row[q[3]] -= 1
        rows.append(row)
        labels.append(f"{names[q[0]]}*{names[q[1]]}-{names[q[2]]}*{names[q[3]]}")
    return ExactMatrix(labels, list(names), rows)


def _rank_bareiss_numpy(rows: list[list[int]]) -> int | None:
    """Vectorized Bareiss over int64 with an overflow guard; exact when it returns."""
    m = np.array(rows, dtype=np.int64)
    if m.size == 0:
        return 0
    nr, nc = m.shape
    prev = np.int64(1)
    r = 0
    for _ in range(min(nr, nc)):
        sub = m[r:]
        nzr, nzc = np.nonzero(sub)
        if nzr.size == 0:
            break
        vals = np.abs(sub[nzr, nzc])
        k = int(np.argmin(vals))
        pi, pj = int(nzr[k]) + r, int(nzc[k])
        if pi != r:
            m[[r, pi]] = m[[pi, r]]
        piv = m[r, pj]
        if max(abs(int(piv)), abs(int(prev)), int(np.abs(m).max())) > _INT64_GUARD:
            return None
        if r + 1 < nr:
            block = m[r + 1 :]
            updated = block * piv - np.outer(block[:, pj], m[r])
            # Bareiss division by the previous pivot is exact
            m[r + 1 :] = updated // prev
            m[r + 1 :, pj] = 0
        prev = piv
        r += 1
    return r


def _rank_bareiss_bigint(rows: list[list[int]]) -> int:
    """Reference Bareiss over Python integers (no overflow, always exact)."""
    m = [list(row) for row in rows]
    if not m or not m[0]:
        return 0
    nr, nc = len(m), len(m[0])
    prev = 1
    r = 0
    while r < min(nr, nc):
        best = None
        for i in range(r, nr):
            for j in range(nc):
                v = m[i][j]
                if v != 0 and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
        if best is None:
            break
        _, pi, pj = best
        if pi != r:
            m[r], m[pi] = m[pi], m[r]
        piv = m[r][pj]
        rowr = m[r]
        for i in range(r + 1, nr):
            rowi = m[i]
            f = rowi[pj]
            if f == 0 and piv == prev:
                continue
            for j in range(nc):
                rowi[j] = (rowi[j] * piv - f * rowr[j]) // prev
            rowi[pj] = 0
        prev = piv
        r += 1
    return r


def rank_exact(M: ExactMatrix | list[list[int]] | np.ndarray) -> int:
    """Exact rank over the rationals via fraction-free Bareiss elimination."""
    if isinstance(M, ExactMatrix):
        rows = M.integer_rows()
    elif isinstance(M, np.ndarray):
        rows = [[int(x) for x in row] for row in M]
    else:
        rows = [list(row) for row in M]
    if not rows or not rows[0]:
        return 0
    fast = _rank_bareiss_numpy(rows)
    if fast is not None:
        return fast
    return _rank_bareiss_bigint(rows)


def predicted_ranks(shape: GridShape) -> tuple[int, int]:
    """Closed-form ranks of (A, S) for a shape."""
    n = shape.n
    pv = prod(k + 1 for k in n)
    sn = sum(n)
    rank_a = pv + sn - 1
    rank_s = shape_directed_edges(shape) - pv - sn + 1
    return rank_a, rank_s


def shape_directed_edges(shape: GridShape) -> int:
    return shape.directed_edge_count


def check_orthogonality(shape: GridShape) -> bool:
    """S A^T = 0 exactly and rank A + rank S = number of directed edges."""
    A = build_A(shape)
    S = build_S(shape)
    sa = np.array(S.integer_rows(), dtype=np.int64).reshape(S.nrows, S.ncols)
    aa = np.array(A.integer_rows(), dtype=np.int64).reshape(A.nrows, A.ncols)
    if sa.size and aa.size and np.any(sa @ aa.T):
        return False
    return rank_exact(A) + rank_exact(S) == A.ncols


@dataclass
class IntegerVector:
    """Primitive integer vector indexed by the directed edges."""

    entries: tuple[int, ...] = field(default_factory=tuple)

    def __len__(self):
        return len(self.entries)


def integer_kernel_basis(M: ExactMatrix | list[list[int]] | np.ndarray) -> list[IntegerVector]:
    """Lattice basis of the integer kernel via column elimination.

    Column operations are mirrored on an identity matrix; columns that end up
    annihilating every row span ker_Z(M).  Pivots take the smallest nonzero
    magnitude, which keeps entries small on these sparse +-1 matrices.
    """
    if isinstance(M, ExactMatrix):
        rows = M.integer_rows()
    elif isinstance(M, np.ndarray):
        rows = [[int(x) for x in row] for row in M]
    else:
        rows = [list(row) for row in M]
    if not rows:
        return []
    nc = len(rows[0])
    # column-major transformed matrix and transformation
    T = [[rows[i][j] for i in range(len(rows))] for j in range(nc)]
    U = [[1 if i == j else 0 for i in range(nc)] for j in range(nc)]
    active = list(range(nc))
    for r in range(len(rows)):
        while True:
            live = [c for c in active if T[c][r] != 0]
            if len(live) <= 1:
                break
            c0 = min(live, key=lambda c: abs(T[c][r]))
            a = T[c0][r]
            for c in live:
                if c == c0:
                    continue
                q, rem = divmod(T[c][r], a)
                if 2 * abs(rem) > abs(a):
                    q += 1
                if q:
                    Tc, T0 = T[c], T[c0]
                    for i in range(len(Tc)):
                        Tc[i] -= q * T0[i]
                    Uc, U0 = U[c], U[c0]
                    for i in range(nc):
                        Uc[i] -= q * U0[i]
        live = [c for c in active if T[c][r] != 0]
        if live:
            active.remove(live[0])
    basis = []
    for c in active:
        if any(T[c][i] != 0 for i in range(len(rows))):
            raise AssertionError("kernel column does not annihilate the matrix")
        v = U[c]
        g = 0
        for x in v:
            g = gcd(g, x)
        if g > 1:
            v = [x // g for x in v]
        nz = next((x for x in v if x != 0), 0)
        if nz < 0:
            v = [-x for x in v]
        basis.append(IntegerVector(tuple(v)))
    return basis
