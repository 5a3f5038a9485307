"""Conformal completion of a lattice basis into the full Graver set.

Pottier-style normal-form completion: starting from a lattice basis and its
negations, sums of sign-incompatible pairs are conformally reduced against
the current set; irreducible remainders join the set until no pair yields
anything new.  A final sweep keeps only conformally minimal vectors, which
are exactly the Graver elements.

The inner loops dominate the runtime of every basis computation, so the core
exists twice: a numba ``@njit`` version and a vectorized numpy fallback
(selected by the ``CBDP_DISABLE_NUMBA`` env flag).  Support bitmasks (one
uint64 per sign) make the reducer scans cheap; vectors are processed in
ascending 1-norm order.
"""

from __future__ import annotations

import heapq

import numpy as np

from ._accel import USE_NUMBA, jit
from .errors import BudgetExceeded

RET_OK = 0
RET_CAPACITY = -1
RET_BUDGET = -2


def _core(G, deg, posm, negm, bydeg, state, heap_key, heap_idx):
    """Completion main loop over preallocated arrays.

    state holds [nG, heap_size, unused, budget_cap] and is updated in place.
    Returns RET_OK / RET_CAPACITY / RET_BUDGET.
    """
    # This body is written in the numba-compatible subset; the numpy fallback
    # below implements the identical algorithm with vectorized scans.
    n = G.shape[1]
    cap = G.shape[0]
    nG = state[0]
    heap_size = state[1]
    budget = state[3]
    order = np.empty(cap, dtype=np.int64)
    nproc = 0
    h = np.empty(n, dtype=np.int64)

    while heap_size > 0:
        # pop min (key, idx)
        top_idx = heap_idx[0]
        heap_size -= 1
        heap_key[0] = heap_key[heap_size]
        heap_idx[0] = heap_idx[heap_size]
        pos = 0
        while True:
            left = 2 * pos + 1
            right = left + 1
            best = pos
            if left < heap_size and (
                heap_key[left] < heap_key[best]
                or (heap_key[left] == heap_key[best] and heap_idx[left] < heap_idx[best])
            ):
                best = left
            if right < heap_size and (
                heap_key[right] < heap_key[best]
                or (heap_key[right] == heap_key[best] and heap_idx[right] < heap_idx[best])
            ):
                best = right
            if best == pos:
                break
            heap_key[pos], heap_key[best] = heap_key[best], heap_key[pos]
            heap_idx[pos], heap_idx[best] = heap_idx[best], heap_idx[pos]
            pos = best
        t = top_idx

        pf = posm[t]
        nf = negm[t]
        for jj in range(nproc):
            j = order[jj]
            pg = posm[j]
            ng = negm[j]
            for variant in range(2):
                if variant == 0:
                    # h = f + g; skip when f, g conformal
                    if (pf & ng) == 0 and (nf & pg) == 0:
                        continue
                    for k in range(n):
                        h[k] = G[t, k] + G[j, k]
                else:
                    # h = f - g; skip when f, -g conformal
                    if (pf & pg) == 0 and (nf & ng) == 0:
                        continue
                    for k in range(n):
                        h[k] = G[t, k] - G[j, k]

                # normal form of h against the current set
                nh = np.int64(0)
                ph = np.uint64(0)
                mh = np.uint64(0)
                for k in range(n):
                    v = h[k]
                    if v > 0:
                        nh += v
                        ph |= np.uint64(1) << np.uint64(k)
                    elif v < 0:
                        nh -= v
                        mh |= np.uint64(1) << np.uint64(k)
                while nh > 0:
                    reduced = False
                    for bi in range(nG):
                        c = bydeg[bi]
                        if deg[c] > nh:
                            break
                        if (posm[c] & ~ph) == 0 and (negm[c] & ~mh) == 0:
                            ok = True
                            for k in range(n):
                                g_ = G[c, k]
                                if g_ > 0:
                                    if h[k] < g_:
                                        ok = False
                                        break
                                elif g_ < 0:
                                    if h[k] > g_:
                                        ok = False
                                        break
                            if ok:
                                nh = 0
                                ph = np.uint64(0)
                                mh = np.uint64(0)
                                for k in range(n):
                                    h[k] -= G[c, k]
                                    v = h[k]
                                    if v > 0:
                                        nh += v
                                        ph |= np.uint64(1) << np.uint64(k)
                                    elif v < 0:
                                        nh -= v
                                        mh |= np.uint64(1) << np.uint64(k)
                                reduced = True
                                break
                        if (posm[c] & ~mh) == 0 and (negm[c] & ~ph) == 0:
                            ok = True
                            for k in range(n):
                                g_ = G[c, k]
                                if g_ > 0:
                                    if -h[k] < g_:
                                        ok = False
                                        break
                                elif g_ < 0:
                                    if -h[k] > g_:
                                        ok = False
                                        break
                            if ok:
                                nh = 0
                                ph = np.uint64(0)
                                mh = np.uint64(0)
                                for k in range(n):
                                    h[k] += G[c, k]
                                    v = h[k]
                                    if v > 0:
                                        nh += v
                                        ph |= np.uint64(1) << np.uint64(k)
                                    elif v < 0:
                                        nh -= v
                                        mh |= np.uint64(1) << np.uint64(k)
                                reduced = True
                                break
                    if not reduced:
                        break
                if nh == 0:
                    continue

                # canonical sign: first nonzero positive
                for k in range(n):
                    if h[k] != 0:
                        if h[k] < 0:
                            for k2 in range(n):
                                h[k2] = -h[k2]
                            ph, mh = mh, ph
                        break
                if nG >= cap or heap_size >= cap:
                    state[0] = nG
                    return RET_CAPACITY
                if nG >= budget:
                    state[0] = nG
                    return RET_BUDGET
                for k in range(n):
                    G[nG, k] = h[k]
                deg[nG] = nh
                posm[nG] = ph
                negm[nG] = mh
                # insert into bydeg (keep ascending by deg, stable)
                lo = 0
                hi = nG
                while lo < hi:
                    mid = (lo + hi) >> 1
                    if deg[bydeg[mid]] <= nh:
                        lo = mid + 1
                    else:
                        hi = mid
                for k2 in range(nG, lo, -1):
                    bydeg[k2] = bydeg[k2 - 1]
                bydeg[lo] = nG
                # push on heap
                hp = heap_size
                heap_key[hp] = nh
                heap_idx[hp] = nG
                while hp > 0:
                    par = (hp - 1) >> 1
                    if heap_key[par] > heap_key[hp] or (
                        heap_key[par] == heap_key[hp] and heap_idx[par] > heap_idx[hp]
                    ):
                        heap_key[par], heap_key[hp] = heap_key[hp], heap_key[par]
                        heap_idx[par], heap_idx[hp] = heap_idx[hp], heap_idx[par]
                        hp = par
                    else:
                        break
                heap_size += 1
                nG += 1
        order[nproc] = t
        nproc += 1

    state[0] = nG
    return RET_OK


_core_jit = jit(_core)


def _minimal_sweep(G, deg, posm, negm, nG):
    """Keep only conformally minimal vectors (strict divisor elsewhere in set)."""
    keep = np.ones(nG, dtype=bool)
    order = np.argsort(deg[:nG], kind="stable")
    for oi in range(nG):
        i = order[oi]
        di = deg[i]
        pi_, ni_ = posm[i], negm[i]
        for oj in range(nG):
            j = order[oj]
            if deg[j] >= di:
                break
            if (posm[j] & ~pi_) or (negm[j] & ~ni_):
                continue
            ok = True
            for k in range(G.shape[1]):
                gj = G[j, k]
                if gj > 0:
                    if G[i, k] < gj:
                        ok = False
                        break
                elif gj < 0:
                    if G[i, k] > gj:
                        ok = False
                        break
            if ok:
                keep[i] = False
                break
    return keep


_minimal_sweep_jit = jit(_minimal_sweep)


def _row_masks(v: np.ndarray) -> tuple[np.uint64, np.uint64]:
    ph = np.uint64(0)
    mh = np.uint64(0)
    for k in np.nonzero(v > 0)[0]:
        ph |= np.uint64(1) << np.uint64(k)
    for k in np.nonzero(v < 0)[0]:
        mh |= np.uint64(1) << np.uint64(k)
    return ph, mh


def _minimal_mask_numpy(G, deg, posm, negm) -> np.ndarray:
    """Vectorized conformal-minimality filter (strict divisors have smaller norm)."""
    nG = len(G)
    keep = np.ones(nG, dtype=bool)
    order = np.argsort(deg, kind="stable")
    Gs, ds = G[order], deg[order]
    pm, nm = posm[order], negm[order]
    for i in range(nG):
        cut = int(np.searchsorted(ds, deg[i]))
        if cut == 0:
            continue
        cand = ((pm[:cut] & ~posm[i]) == 0) & ((nm[:cut] & ~negm[i]) == 0)
        if not cand.any():
            continue
        block = Gs[:cut][cand]
        gi = G[i]
        dominated = np.all(
            ((block <= 0) | (gi >= block)) & ((block >= 0) | (gi <= block)), axis=1
        )
        if dominated.any():
            keep[i] = False
    return keep


class _NumpySet:
    """Growable vector set with masks/degrees, shared by the numpy fallback."""

    def __init__(self, n: int):
        self.n = n
        self.G = np.zeros((256, n), dtype=np.int64)
        self.deg = np.zeros(256, dtype=np.int64)
        self.posm = np.zeros(256, dtype=np.uint64)
        self.negm = np.zeros(256, dtype=np.uint64)
        self.size = 0

    def push(self, v: np.ndarray) -> int:
        if self.size == len(self.G):
            for name in ("G", "deg", "posm", "negm"):
                arr = getattr(self, name)
                setattr(
                    self,
                    name,
                    np.concatenate([arr, np.zeros_like(arr)], axis=0),
                )
        i = self.size
        self.G[i] = v
        self.deg[i] = int(np.abs(v).sum())
        self.posm[i], self.negm[i] = _row_masks(v)
        self.size += 1
        return i

    def normal_form(self, h: np.ndarray) -> np.ndarray:
        """Conformal reduction of h against every stored vector (both signs)."""
        nS = self.size
        G, deg = self.G[:nS], self.deg[:nS]
        posm, negm = self.posm[:nS], self.negm[:nS]
        while True:
            nh = int(np.abs(h).sum())
            if nh == 0:
                return h
            ph, mh = _row_masks(h)
            plus_ok = ((posm & ~ph) == 0) & ((negm & ~mh) == 0) & (deg <= nh)
            minus_ok = ((posm & ~mh) == 0) & ((negm & ~ph) == 0) & (deg <= nh)
            reduced = False
            for c in np.nonzero(plus_ok | minus_ok)[0]:
                row = G[c]
                if plus_ok[c] and np.all(
                    ((row <= 0) | (h >= row)) & ((row >= 0) | (h <= row))
                ):
                    h = h - row
                    reduced = True
                    break
                if minus_ok[c] and np.all(
                    ((row <= 0) | (-h >= row)) & ((row >= 0) | (-h <= row))
                ):
                    h = h + row
                    reduced = True
                    break
            if not reduced:
                return h


def _complete_numpy(seeds: np.ndarray, budget: int) -> np.ndarray:
    """Pure-numpy completion (same algorithm as the jitted core)."""
    store = _NumpySet(seeds.shape[1])
    heap: list[tuple[int, int]] = []
    for s in seeds:
        i = store.push(s)
        heapq.heappush(heap, (int(store.deg[i]), i))
    processed: list[int] = []

    while heap:
        _, t = heapq.heappop(heap)
        f = store.G[t].copy()
        pf, nf = store.posm[t], store.negm[t]
        for j in list(processed):
            pg, ng = store.posm[j], store.negm[j]
            for variant in (0, 1):
                if variant == 0:
                    if (pf & ng) == 0 and (nf & pg) == 0:
                        continue
                    h = f + store.G[j]
                else:
                    if (pf & pg) == 0 and (nf & ng) == 0:
                        continue
                    h = f - store.G[j]
                h = store.normal_form(h)
                if not np.any(h):
                    continue
                nz = np.nonzero(h)[0][0]
                if h[nz] < 0:
                    h = -h
                if store.size >= budget:
                    raise BudgetExceeded(f"completion exceeded {budget} elements")
                i = store.push(h)
                heapq.heappush(heap, (int(store.deg[i]), i))
        processed.append(t)

    nS = store.size
    keep = _minimal_mask_numpy(
        store.G[:nS], store.deg[:nS], store.posm[:nS], store.negm[:nS]
    )
    return store.G[:nS][keep]


def _complete_numba(seeds: np.ndarray, budget: int) -> np.ndarray:
    n = seeds.shape[1]
    capacity = max(4096, 4 * len(seeds))
    while True:
        G = np.zeros((capacity, n), dtype=np.int64)
        deg = np.zeros(capacity, dtype=np.int64)
        posm = np.zeros(capacity, dtype=np.uint64)
        negm = np.zeros(capacity, dtype=np.uint64)
        bydeg = np.zeros(capacity, dtype=np.int64)
        heap_key = np.zeros(capacity, dtype=np.int64)
        heap_idx = np.zeros(capacity, dtype=np.int64)
        nseeds = len(seeds)
        G[:nseeds] = seeds
        for i in range(nseeds):
            deg[i] = int(np.abs(seeds[i]).sum())
            ph = np.uint64(0)
            mh = np.uint64(0)
            for k in np.nonzero(seeds[i] > 0)[0]:
                ph |= np.uint64(1) << np.uint64(k)
            for k in np.nonzero(seeds[i] < 0)[0]:
                mh |= np.uint64(1) << np.uint64(k)
            posm[i] = ph
            negm[i] = mh
        order = np.argsort(deg[:nseeds], kind="stable")
        bydeg[:nseeds] = order
        # heap as (deg, idx) pairs; build by pushes in index order
        heap_key[:nseeds] = deg[order]
        heap_idx[:nseeds] = order
        # heapify via sort (valid heap)
        state = np.array([nseeds, nseeds, 0, budget], dtype=np.int64)
        ret = _core_jit(G, deg, posm, negm, bydeg, state, heap_key, heap_idx)
        if ret == RET_CAPACITY:
            capacity *= 2
            continue
        if ret == RET_BUDGET:
            raise BudgetExceeded(f"completion exceeded {budget} elements")
        nG = int(state[0])
        keep = _minimal_sweep_jit(G[:nG], deg[:nG], posm[:nG], negm[:nG], nG)
        return G[:nG][keep]


def complete(seeds: np.ndarray, budget: int = 10**6) -> np.ndarray:
    """Graver set of the lattice spanned by the integer seed rows.

    Output rows are sign-canonical (first nonzero positive), sorted by
    (1-norm, lexicographic).  Raises BudgetExceeded past the element cap.
    """
    seeds = np.asarray(seeds, dtype=np.int64)
    if seeds.ndim != 2:
        raise ValueError("seeds must be a 2D integer array")
    if seeds.shape[1] > 63:
        raise BudgetExceeded(
            f"completion supports up to 63 columns, got {seeds.shape[1]}"
        )
    seeds = seeds[np.any(seeds, axis=1)]
    canon = []
    seen = set()
    for row in seeds:
        nz = np.nonzero(row)[0]
        v = -row if row[nz[0]] < 0 else row
        key = v.tobytes()
        if key not in seen:
            seen.add(key)
            canon.append(v)
    if not canon:
        return np.zeros((0, seeds.shape[1]), dtype=np.int64)
    seeds = np.array(canon, dtype=np.int64)
    if USE_NUMBA:
        out = _complete_numba(seeds, budget)
    else:
        out = _complete_numpy(seeds, budget)
    # canonical output order: by degree then lexicographic
    keys = sorted(range(len(out)), key=lambda i: (int(np.abs(out[i]).sum()), tuple(out[i])))
    return out[keys]
