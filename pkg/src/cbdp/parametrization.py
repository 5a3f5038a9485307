"""Vertex/edge-weight factorization of positive commuting kernels.

A strictly positive nearest-neighbor kernel whose directional parts commute
factors as P(u,v) = a_u * W(u,v) / a_v with W constant on parallel-edge
classes.  This module extracts (a, W) via reversibility constants, rebuilds
kernels from the weights, and rescales weights so the chain (or its lazy
version cI + P) becomes stochastic.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    CbdpError,
    ClassInconsistency,
    ConvergenceError,
    PathInconsistency,
    PositivityError,
)
from .grid import EdgeClass, GridShape, Vertex, build_grid, parallel_class
from .kernels import EXACT, FLOAT, TransitionKernel

_EXHAUSTIVE_PATH_LIMIT = 16
_RANDOM_PATH_PAIRS = 100
_PATH_TOL = 1e-9
_CLASS_TOL = 1e-9


@dataclass
class Parametrization:
    """Positive vertex weights a and edge-class weights W."""

    shape: GridShape
    a: dict[Vertex, object]
    W: dict[EdgeClass, object]

    def __post_init__(self):
        if any(v <= 0 for v in self.a.values()) or any(
            w <= 0 for w in self.W.values()
        ):
            raise PositivityError("parametrization weights must be positive")

    @property
    def mode(self) -> str:
        vals = list(self.a.values()) + list(self.W.values())
        return EXACT if all(isinstance(v, (Fraction, int)) for v in vals) else FLOAT

    @property
    def origin(self) -> Vertex:
        return (0,) * self.shape.m

    def gauged(self) -> "Parametrization":
        """Rescale so the origin weight is exactly 1."""
        a0 = self.a[self.origin]
        return Parametrization(
            self.shape,
            {u: v / a0 for u, v in self.a.items()},
            dict(self.W),
        )

    # -- JSON wire format -------------------------------------------------
    def to_json(self) -> dict:
        exact = self.mode == EXACT
        enc = (lambda v: str(Fraction(v))) if exact else float
        return {
            "shape": list(self.shape.n),
            "a": {",".join(map(str, u)): enc(v) for u, v in self.a.items()},
            "W": {f"{c.axis + 1},{c.level}": enc(v) for c, v in self.W.items()},
        }

    @classmethod
    def from_json(cls, payload: dict) -> "Parametrization":
        shape = GridShape(tuple(payload["shape"]))

        def dec(v):
            return Fraction(v) if isinstance(v, str) else float(v)

        a = {
            tuple(int(x) for x in key.split(",")): dec(v)
            for key, v in payload["a"].items()
        }
        W = {}
        for key, v in payload["W"].items():
            k, h = (int(x) for x in key.split(","))
            W[EdgeClass(k - 1, h)] = dec(v)
        return cls(shape, a, W)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def loads(cls, text: str) -> "Parametrization":
        return cls.from_json(json.loads(text))


@dataclass
class ReversibilityConstants:
    """Positive constants with b_u P(u,v) = b_v P(v,u); b at the origin is 1."""

    shape: GridShape
    b: dict[Vertex, object]


def _monotone_paths(target: Vertex):
    """All monotone lattice paths (as axis sequences) from the origin."""
    steps = [axis for axis, c in enumerate(target) for _ in range(c)]
    return set(itertools.permutations(steps))


def _path_product(kernel: TransitionKernel, axes_seq) -> object:
    u = (0,) * kernel.shape.m
    one = Fraction(1) if kernel.mode == EXACT else 1.0
    val = one
    for axis in axes_seq:
        v = tuple(c + (1 if k == axis else 0) for k, c in enumerate(u))
        val = val * kernel.prob_between(u, v) / kernel.prob_between(v, u)
        u = v
    return val


def _close(x, y, exact: bool, tol: float) -> bool:
    if exact:
        return x == y
    scale = max(abs(x), abs(y), 1e-300)
    return abs(x - y) <= tol * scale


def reversibility_constants(
    kernel: TransitionKernel, tol: float = _PATH_TOL
) -> ReversibilityConstants:
    """Constants from path products P(w,w')/P(w',w) along monotone paths.

    Path independence is verified exhaustively on small grids and on random
    path pairs otherwise; disagreement (equivalently, failure of detailed
    balance on some edge) signals a non-commuting kernel.
    """
    grid = kernel.grid
    if any(v <= 0 for v in kernel.p):
        raise PositivityError("reversibility constants need positive edge probabilities")
    exact = kernel.mode == EXACT
    one = Fraction(1) if exact else 1.0
    origin = (0,) * kernel.shape.m
    b: dict[Vertex, object] = {origin: one}
    for u in sorted(grid.vertices, key=sum):
        if u == origin:
            continue
        axis = next(k for k, c in enumerate(u) if c > 0)
        w = tuple(c - (1 if k == axis else 0) for k, c in enumerate(u))
        b[u] = b[w] * kernel.prob_between(w, u) / kernel.prob_between(u, w)

    # detailed balance on every edge
    for e in grid.edges:
        lhs = b[e.source] * kernel.prob(e)
        rhs = b[e.target] * kernel.prob(e.reverse)
        if not _close(lhs, rhs, exact, tol):
            raise PathInconsistency(
                f"detailed balance fails on edge {e.source}->{e.target}"
            )

    # path-independence per the stated policy
    if grid.shape.vertex_count <= _EXHAUSTIVE_PATH_LIMIT:
        for u in grid.vertices:
            vals = [_path_product(kernel, seq) for seq in _monotone_paths(u)]
            for v in vals[1:]:
                if not _close(vals[0], v, exact, tol):
                    raise PathInconsistency(f"monotone paths to {u} disagree")
    else:
        rng = np.random.default_rng(0)
        verts = [v for v in grid.vertices if sum(v) > 1]
        for _ in range(_RANDOM_PATH_PAIRS):
            u = verts[rng.integers(len(verts))]
            steps = [axis for axis, c in enumerate(u) for _ in range(c)]
            p1 = list(steps)
            p2 = list(steps)
            rng.shuffle(p1)
            rng.shuffle(p2)
            if not _close(
                _path_product(kernel, p1), _path_product(kernel, p2), exact, tol
            ):
                raise PathInconsistency(f"random monotone paths to {u} disagree")
    return ReversibilityConstants(kernel.shape, b)


def _sqrt_value(x, exact: bool):
    if not exact:
        return math.sqrt(x)
    f = Fraction(x)
    rn = math.isqrt(f.numerator)
    rd = math.isqrt(f.denominator)
    if rn * rn != f.numerator or rd * rd != f.denominator:
        raise CbdpError(
            f"{f} has no exact rational square root; convert the kernel to float mode"
        )
    return Fraction(rn, rd)


def extract_parametrization(
    kernel: TransitionKernel, tol: float = _CLASS_TOL
) -> Parametrization:
    """Recover (a, W) from a strictly positive commuting kernel.

    a_u = b_u^{-1/2} gauge-fixed to a(origin) = 1; W(u,v) = P(u,v) a_v / a_u.
    Verifies W symmetry and constancy on each parallel class.
    """
    grid = kernel.grid
    exact = kernel.mode == EXACT
    b = reversibility_constants(kernel).b
    a = {u: 1 / _sqrt_value(bu, exact) for u, bu in b.items()}

    W: dict[EdgeClass, object] = {}
    for e in grid.edges:
        val = kernel.prob(e) * a[e.target] / a[e.source]
        rev = kernel.prob(e.reverse) * a[e.source] / a[e.target]
        if not _close(val, rev, exact, tol):
            raise ClassInconsistency(
                f"W asymmetric on edge {e.source}->{e.target}"
            )
        cls = parallel_class(e)
        if cls in W:
            if not _close(W[cls], val, exact, tol):
                raise ClassInconsistency(
                    f"W varies within class (axis {cls.axis + 1}, level {cls.level})"
                )
        else:
            W[cls] = val
    return Parametrization(kernel.shape, a, W)


def build_kernel(params: Parametrization) -> TransitionKernel:
    """Kernel with P(u,v) = a_u W(class(u,v)) / a_v on every directed edge."""
    grid = build_grid(params.shape)
    mode = params.mode
    kern = TransitionKernel.zero(params.shape, mode)
    for i, e in enumerate(grid.edges):
        w = params.W[parallel_class(e)]
        val = params.a[e.source] * w / params.a[e.target]
        kern.p[i] = val if mode == EXACT else float(val)
    return kern


def _weight_matrix(params: Parametrization) -> np.ndarray:
    """Symmetric vertex-by-vertex matrix with W(class(u,v)) on grid edges."""
    grid = build_grid(params.shape)
    n = len(grid.vertices)
    Q = np.zeros((n, n))
    for e in grid.edges:
        Q[grid.vertex_index[e.source], grid.vertex_index[e.target]] = float(
            params.W[parallel_class(e)]
        )
    return Q


def perron_eigenpair(
    Q: np.ndarray, rel_residual: float = 1e-13, max_iter: int = 200_000
):
    """Largest eigenpair of a symmetric nonnegative irreducible matrix.

    Power iteration on the diagonally shifted matrix Q + sI (the shift makes
    the dominant eigenvalue strictly largest in magnitude on these bipartite
    grids); seeded with the all-ones vector, which stays in the positive cone.
    """
    n = Q.shape[0]
    if n == 1:
        return float(Q[0, 0]), np.ones(1)
    s = float(np.abs(Q).sum(axis=1).max()) or 1.0
    x = np.ones(n) / math.sqrt(n)
    lam = 0.0
    for _ in range(max_iter):
        y = Q @ x + s * x
        ny = np.linalg.norm(y)
        if ny == 0:
            raise ConvergenceError("power iteration collapsed to zero")
        x = y / ny
        qx = Q @ x
        lam = float(x @ qx)
        res = np.linalg.norm(qx - lam * x)
        if res <= rel_residual * max(abs(lam), s * 1e-3):
            return lam, x
    raise ConvergenceError(
        f"Perron eigenpair not resolved to {rel_residual} in {max_iter} iterations"
    )


def normalize_stochastic(params: Parametrization, c: float = 0.0) -> Parametrization:
    """Rescale weights so every row of the rebuilt kernel sums to 1 - c.

    All W values are multiplied by (1-c)/lambda_max of the weight matrix and
    the vertex weights become the reciprocal Perron eigenvector (gauged to 1
    at the origin), making cI + P stochastic.
    """
    if not 0 <= c < 1:
        raise ValueError("lazy constant c must lie in [0, 1)")
    Q = _weight_matrix(params)
    lam, w = perron_eigenpair(Q)
    if lam <= 0 or np.any(w <= 0):
        raise ConvergenceError("Perron eigenpair is not positive")
    grid = build_grid(params.shape)
    origin_idx = grid.vertex_index[params.origin]
    a = {
        u: float(w[origin_idx] / w[grid.vertex_index[u]]) for u in grid.vertices
    }
    scale = (1.0 - c) / lam
    W = {cls: float(v) * scale for cls, v in params.W.items()}
    return Parametrization(params.shape, a, W)
