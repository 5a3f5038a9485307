"""Spectral t-step transition probabilities and Monte Carlo validation.

The weight matrix of a commuting kernel splits per axis into identical
symmetric tridiagonal blocks with zero diagonal.  Diagonalizing each block
once gives closed-form t-step probabilities for the chain and its lazy
variant cI + P; a seeded trajectory sampler cross-validates them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._accel import USE_NUMBA, jit
from .errors import ConvergenceError, NotStochastic
from .grid import EdgeClass, GridShape, Vertex, build_grid
from .parametrization import Parametrization, build_kernel

_QL_ITER_CAP = 50
_QL_TOL = 1e-14


@dataclass
class TridiagonalBlock:
    """Zero-diagonal symmetric tridiagonal block for one axis."""

    axis: int
    off_diagonals: np.ndarray  # length n_k, strictly positive

    @property
    def size(self) -> int:
        return len(self.off_diagonals) + 1

    def dense(self) -> np.ndarray:
        n = self.size
        M = np.zeros((n, n))
        for h, w in enumerate(self.off_diagonals):
            M[h, h + 1] = M[h + 1, h] = w
        return M


@dataclass
class Eigensystem:
    """Eigenvalues ascending with orthonormal eigenvectors as columns."""

    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class TStepQuery:
    """Step count t and lazy holding constant c for (cI + P)^t."""

    t: int
    c: float = 0.0

    def __post_init__(self):
        if self.t < 0 or int(self.t) != self.t:
            raise ValueError("t must be a nonnegative integer")
        if not 0 <= self.c < 1:
            raise ValueError("c must lie in [0, 1)")


def tridiagonal_blocks(params: Parametrization) -> list[TridiagonalBlock]:
    """One block per axis; off-diagonal h is the weight of class (axis, h)."""
    blocks = []
    for axis in range(params.shape.m):
        offd = np.array(
            [
                float(params.W[EdgeClass(axis, h)])
                for h in range(params.shape.n[axis])
            ]
        )
        blocks.append(TridiagonalBlock(axis, offd))
    return blocks


def _tqli(d: np.ndarray, e: np.ndarray, z: np.ndarray, threshold: float):
    """Implicit-shift QL sweep, diagonalizing in place (classic tqli scheme)."""
    n = d.size
    for l in range(n):
        iters = 0
        while True:
            m = l
            while m < n - 1:
                if abs(e[m]) <= threshold:
                    break
                m += 1
            if m == l:
                break
            iters += 1
            if iters > _QL_ITER_CAP:
                raise ConvergenceError(
                    f"QL iteration cap {_QL_ITER_CAP} hit for eigenvalue {l}"
                )
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                zi = z[:, i].copy()
                z[:, i] = c * zi - s * z[:, i + 1]
                z[:, i + 1] = s * zi + c * z[:, i + 1]
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0


def eig_sym_tridiag(block: TridiagonalBlock) -> Eigensystem:
    """Full eigensystem of a symmetric tridiagonal block."""
    n = block.size
    d = np.zeros(n)
    e = np.zeros(n)
    e[: n - 1] = block.off_diagonals
    z = np.eye(n)
    norm = float(np.abs(d).max() + (np.abs(block.off_diagonals).max() if n > 1 else 0.0))
    threshold = _QL_TOL * max(norm, 1e-300)
    _tqli(d, e, z, threshold)
    order = np.argsort(d, kind="stable")
    return Eigensystem(d[order], z[:, order])


def tstep_matrix(params: Parametrization, q: TStepQuery) -> np.ndarray:
    """Dense (cI + P)^t over vertices, assembled from per-axis eigensystems.

    Entry (u, v) is a_u * [sum over multi-indices of (c + sum_j lambda)^t *
    prod_j u_j(u_j) u_j(v_j)] / a_v; only per-axis eigenbases are stored.
    """
    grid = build_grid(params.shape)
    systems = [eig_sym_tridiag(b) for b in tridiagonal_blocks(params)]
    sizes = [s.values.size for s in systems]
    N = len(grid.vertices)
    K = np.zeros((N, N))
    for multi in itertools.product(*(range(sz) for sz in sizes)):
        lam = q.c + sum(systems[j].values[multi[j]] for j in range(len(sizes)))
        weight = lam**q.t
        vec = systems[0].vectors[:, multi[0]]
        for j in range(1, len(sizes)):
            vec = np.kron(vec, systems[j].vectors[:, multi[j]])
        K += weight * np.outer(vec, vec)
    avec = np.array([float(params.a[u]) for u in grid.vertices])
    return K * np.outer(avec, 1.0 / avec)


def _cumulative_rows(params: Parametrization, c: float, tol: float = 1e-9):
    """Cumulative transition rows of cI + P; raises unless rows sum to 1."""
    grid = build_grid(params.shape)
    P = build_kernel(params).dense()
    T = c * np.eye(len(grid.vertices)) + P
    sums = T.sum(axis=1)
    bad = np.abs(sums - 1.0) > tol
    if np.any(bad):
        u = grid.vertices[int(np.argmax(np.abs(sums - 1.0)))]
        raise NotStochastic(
            f"row sum {sums[bad][0]:.12f} at {u}; run normalize_stochastic first"
        )
    cum = np.cumsum(T, axis=1)
    cum[:, -1] = 1.0
    return cum


def _walk_chunk_py(cum, start, uniforms, counts):
    S, T = uniforms.shape
    N = cum.shape[1]
    for s_ in range(S):
        state = start
        for step in range(T):
            r = uniforms[s_, step]
            row = cum[state]
            lo = 0
            hi = N - 1
            while lo < hi:
                mid = (lo + hi) >> 1
                if row[mid] <= r:
                    lo = mid + 1
                else:
                    hi = mid
            state = lo
        counts[state] += 1


_walk_chunk_jit = jit(_walk_chunk_py)


def _walk_chunk_numpy(cum, start, uniforms, counts):
    S, T = uniforms.shape
    states = np.full(S, start, dtype=np.int64)
    for step in range(T):
        rows = cum[states]
        states = (rows <= uniforms[:, step, None]).sum(axis=1)
    np.add.at(counts, states, 1)


def simulate(
    params: Parametrization,
    start: Vertex,
    q: TStepQuery,
    samples: int,
    seed: int,
    chunk: int = 1 << 16,
) -> np.ndarray:
    """Empirical distribution of the chain after t steps of cI + P.

    Requires stochastic rows (normalize first).  Trajectories are sampled in
    fixed-size chunks from a PCG64 stream, so the result depends only on
    (seed, samples) and is identical on the numba and numpy paths.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    grid = build_grid(params.shape)
    cum = _cumulative_rows(params, q.c)
    start_idx = grid.vertex_index[tuple(start)]
    counts = np.zeros(len(grid.vertices), dtype=np.int64)
    rng = np.random.default_rng(seed)
    walker = _walk_chunk_jit if USE_NUMBA else _walk_chunk_numpy
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        uniforms = rng.random((size, q.t))
        walker(cum, start_idx, uniforms, counts)
        done += size
    return counts / samples
