"""Numba kernels for Rips persistence on the 2-skeleton.

Simplices are ordered by (filtration value, dimension, lexicographic vertex
tuple). A triangle ``a < b < c`` is keyed by ``a*N*N + b*N + c`` which is
monotone in the lexicographic order for a fixed ``N``.
"""

import numpy as np
from numba import njit
from numba import types
from numba.typed import Dict


@njit(cache=True)
def sorted_edges(dm):
    """Edges ``(i, j)``, ``i < j``, sorted by (value, i, j)."""
    n = dm.shape[0]
    n_edges = n * (n - 1) // 2
    ei = np.empty(n_edges, dtype=np.int64)
    ej = np.empty(n_edges, dtype=np.int64)
    ev = np.empty(n_edges, dtype=np.float64)
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            ei[k] = i
            ej[k] = j
            ev[k] = dm[i, j]
            k += 1
    # enumeration order is already lexicographic, so a stable sort by value
    # yields the (value, i, j) order
    order = np.argsort(ev, kind="mergesort")
    return ei[order], ej[order], ev[order]


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def zero_dim_pairs(n, ei, ej, ev):
    """Union-find over sorted edges.

    Returns the death values of the finite H0 classes and a boolean mask over
    the sorted edges marking the merging (negative) edges.
    """
    parent = np.arange(n)
    rank = np.zeros(n, dtype=np.int64)
    deaths = np.empty(max(n - 1, 0), dtype=np.float64)
    negative = np.zeros(ei.shape[0], dtype=np.bool_)
    n_deaths = 0
    for k in range(ei.shape[0]):
        ri = _find(parent, ei[k])
        rj = _find(parent, ej[k])
        if ri == rj:
            continue
        if rank[ri] < rank[rj]:
            ri, rj = rj, ri
        parent[rj] = ri
        if rank[ri] == rank[rj]:
            rank[ri] += 1
        negative[k] = True
        deaths[n_deaths] = ev[k]
        n_deaths += 1
        if n_deaths == n - 1:
            break
    return deaths[:n_deaths], negative


@njit(cache=True)
def _coboundary(dm, i, j):
    """Triangles containing edge (i, j), sorted by (value, key)."""
    n = dm.shape[0]
    vals = np.empty(n - 2, dtype=np.float64)
    keys = np.empty(n - 2, dtype=np.int64)
    wij = dm[i, j]
    nn = n * n
    m = 0
    # keys increase with k, so a stable sort on value gives (value, key)
    for k in range(n):
        if k == i or k == j:
            continue
        v = wij
        if dm[i, k] > v:
            v = dm[i, k]
        if dm[j, k] > v:
            v = dm[j, k]
        if k < i:
            key = k * nn + i * n + j
        elif k < j:
            key = i * nn + k * n + j
        else:
            key = i * nn + j * n + k
        vals[m] = v
        keys[m] = key
        m += 1
    order = np.argsort(vals, kind="mergesort")
    return vals[order], keys[order]


@njit(cache=True)
def _before(va, ka, vb, kb):
    return va < vb or (va == vb and ka < kb)


@njit(cache=True)
def _add_columns(va, ka, vb, kb):
    """Z/2 sum of two sorted columns."""
    na = va.shape[0]
    nb = vb.shape[0]
    out_v = np.empty(na + nb, dtype=np.float64)
    out_k = np.empty(na + nb, dtype=np.int64)
    a = 0
    b = 0
    m = 0
    while a < na and b < nb:
        if ka[a] == kb[b]:
            a += 1
            b += 1
        elif _before(va[a], ka[a], vb[b], kb[b]):
            out_v[m] = va[a]
            out_k[m] = ka[a]
            a += 1
            m += 1
        else:
            out_v[m] = vb[b]
            out_k[m] = kb[b]
            b += 1
            m += 1
    while a < na:
        out_v[m] = va[a]
        out_k[m] = ka[a]
        a += 1
        m += 1
    while b < nb:
        out_v[m] = vb[b]
        out_k[m] = kb[b]
        b += 1
        m += 1
    return out_v[:m].copy(), out_k[:m].copy()


@njit(cache=True)
def one_dim_pairs(dm, ei, ej, ev, negative):
    """H1 persistence pairs by reducing the coboundary matrix with clearing.

    Edge columns are processed from the last edge to the first; edges that
    merge H0 components are cleared. The pivot of a column is its earliest
    triangle. Returns, per pair, the sorted-edge index of the birth edge and
    the key and value of the death triangle. Columns that reduce to zero
    (essential classes) are reported with key -1.
    """
    n_edges = ei.shape[0]
    owner = Dict.empty(key_type=types.int64, value_type=types.int64)
    stored_v = Dict.empty(key_type=types.int64, value_type=types.float64[:])
    stored_k = Dict.empty(key_type=types.int64, value_type=types.int64[:])

    birth_edge = np.empty(n_edges, dtype=np.int64)
    death_key = np.empty(n_edges, dtype=np.int64)
    death_val = np.empty(n_edges, dtype=np.float64)
    n_pairs = 0

    for e in range(n_edges - 1, -1, -1):
        if negative[e]:
            continue
        cv, ck = _coboundary(dm, ei[e], ej[e])
        reduced = False
        while cv.shape[0] > 0:
            piv = ck[0]
            if piv not in owner:
                break
            other = owner[piv]
            if other in stored_v:
                ov = stored_v[other]
                ok = stored_k[other]
            else:
                ov, ok = _coboundary(dm, ei[other], ej[other])
            cv, ck = _add_columns(cv, ck, ov, ok)
            reduced = True
        birth_edge[n_pairs] = e
        if cv.shape[0] == 0:
            death_key[n_pairs] = -1
            death_val[n_pairs] = np.inf
        else:
            owner[ck[0]] = e
            if reduced:
                stored_v[e] = cv
                stored_k[e] = ck
            death_key[n_pairs] = ck[0]
            death_val[n_pairs] = cv[0]
        n_pairs += 1
    return birth_edge[:n_pairs], death_key[:n_pairs], death_val[:n_pairs]
