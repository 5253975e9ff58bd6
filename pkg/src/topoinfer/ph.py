"""Rips persistence of point clouds and dissimilarity matrices (H0 and H1)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

from . import _ph_kernels as _k

#: tolerance for matching (birth, death) pairs and birth weights
PAIR_TOL = 1e-9


@dataclass
class PersistenceDiagram:
    """Finite persistence pairs of one homology dimension.

    ``birth_edges`` keeps the vertex pair of the edge creating each H1 class;
    it is bookkeeping for cycle extraction and is not serialized.
    """

    dim: int
    pairs: np.ndarray
    representatives: list[list[int]] | None = None
    birth_edges: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=float).reshape(-1, 2)
        if np.any(pairs[:, 0] > pairs[:, 1]):
            raise ValueError("birth must not exceed death")
        if not np.all(np.isfinite(pairs)):
            raise ValueError("diagram pairs must be finite")
        self.pairs = pairs
        if self.representatives is not None and len(self.representatives) != len(pairs):
            raise ValueError("representatives must align with pairs")

    def __len__(self):
        return len(self.pairs)

    @property
    def births(self) -> np.ndarray:
        return self.pairs[:, 0]

    @property
    def deaths(self) -> np.ndarray:
        return self.pairs[:, 1]

    @property
    def persistence(self) -> np.ndarray:
        return self.pairs[:, 1] - self.pairs[:, 0]

    def to_dict(self) -> dict:
        reps = None
        if self.representatives is not None:
            reps = [[int(v) for v in loop] for loop in self.representatives]
        return {"dim": int(self.dim), "pairs": self.pairs.tolist(), "representatives": reps}

    @classmethod
    def from_dict(cls, data: dict) -> "PersistenceDiagram":
        return cls(dim=int(data["dim"]), pairs=np.asarray(data["pairs"], dtype=float),
                   representatives=data.get("representatives"))


def check_point_cloud(points) -> np.ndarray:
    pc = np.asarray(points, dtype=float)
    if pc.ndim == 1:
        pc = pc.reshape(-1, 1)
    if pc.ndim != 2 or pc.shape[0] < 1 or pc.shape[1] < 1:
        raise ValueError(f"point cloud must be an N x d array with N, d >= 1, got shape {pc.shape}")
    if not np.all(np.isfinite(pc)):
        raise ValueError("point cloud contains non-finite coordinates")
    return pc


def check_dissimilarity(matrix) -> np.ndarray:
    """Validate a dissimilarity matrix and return it as a float array."""
    dm = np.asarray(matrix, dtype=float)
    if dm.ndim != 2 or dm.shape[0] != dm.shape[1] or dm.shape[0] < 1:
        raise ValueError(f"dissimilarity matrix must be square, got shape {dm.shape}")
    if not np.all(np.isfinite(dm)):
        raise ValueError("dissimilarity matrix contains non-finite entries")
    if not np.array_equal(dm, dm.T):
        raise ValueError("dissimilarity matrix is not symmetric")
    if np.any(np.diag(dm) != 0):
        raise ValueError("dissimilarity matrix must have a zero diagonal")
    if np.any(dm < 0):
        raise ValueError("dissimilarity matrix has negative entries")
    return np.ascontiguousarray(dm)


def pairwise_distances(points) -> np.ndarray:
    """Euclidean distance matrix of a point cloud."""
    pc = check_point_cloud(points)
    if pc.shape[0] == 1:
        return np.zeros((1, 1))
    return squareform(pdist(pc))


def rips_persistence(dm, max_dim: int = 1, representatives: bool = False) -> list[PersistenceDiagram]:
    """Persistence diagrams of the Rips filtration of ``dm`` for dims 0..max_dim.

    The essential H0 class and zero-persistence pairs are dropped. With
    ``representatives=True`` every H1 pair carries the loop returned by
    :func:`representative_cycle`.
    """
    if max_dim not in (0, 1):
        raise ValueError("max_dim must be 0 or 1")
    dm = check_dissimilarity(dm)
    n = dm.shape[0]
    ei, ej, ev = _k.sorted_edges(dm)
    deaths0, negative = _k.zero_dim_pairs(n, ei, ej, ev)
    deaths0 = deaths0[deaths0 > 0]
    h0 = PersistenceDiagram(0, np.column_stack([np.zeros(len(deaths0)), deaths0]))
    out = [h0]
    if max_dim == 0:
        return out

    if n < 3:
        out.append(PersistenceDiagram(1, np.empty((0, 2)), [] if representatives else None,
                                      np.empty((0, 2), dtype=np.int64)))
        return out
    birth_edge, death_key, death_val = _k.one_dim_pairs(dm, ei, ej, ev, negative)
    births = ev[birth_edge]
    keep = (death_key >= 0) & (death_val > births)
    # report pairs in filtration order of their birth edge
    idx = np.flatnonzero(keep)[::-1]
    pairs = np.column_stack([births[idx], death_val[idx]])
    edges = np.column_stack([ei[birth_edge[idx]], ej[birth_edge[idx]]])
    reps = None
    if representatives:
        ranks = _edge_ranks(n, ei, ej)
        reps = [_loop_from_birth_edge(dm, ranks, int(u), int(v)) for u, v in edges]
    out.append(PersistenceDiagram(1, pairs, reps, edges))
    return out


def _edge_ranks(n, ei, ej) -> np.ndarray:
    ranks = np.full((n, n), -1, dtype=np.int64)
    order = np.arange(len(ei))
    ranks[ei, ej] = order
    ranks[ej, ei] = order
    return ranks


def representative_cycle(dm, pair) -> list[int]:
    """Shortest loop through the birth edge of the H1 pair ``(birth, death)``.

    The loop is the birth edge ``(u, v)`` closed by a path from ``u`` to ``v``
    over edges that precede the birth edge in the filtration: fewest hops,
    then smallest total weight, then the lexicographically smallest node
    sequence.
    """
    dm = check_dissimilarity(dm)
    birth, death = (float(x) for x in pair)
    h1 = rips_persistence(dm, max_dim=1)[1]
    if len(h1) == 0:
        raise ValueError("dissimilarity matrix has no H1 pairs")
    match = np.flatnonzero((np.abs(h1.births - birth) <= PAIR_TOL) & (np.abs(h1.deaths - death) <= PAIR_TOL))
    if len(match) == 0:
        raise ValueError(f"pair ({birth}, {death}) is not an H1 pair of this matrix")
    n = dm.shape[0]
    ei, ej, _ = _k.sorted_edges(dm)
    u, v = h1.birth_edges[match[0]]
    return _loop_from_birth_edge(dm, _edge_ranks(n, ei, ej), int(u), int(v))


def _loop_from_birth_edge(dm, ranks, u, v) -> list[int]:
    n = dm.shape[0]
    adj = ranks < ranks[u, v]
    np.fill_diagonal(adj, False)

    hops = np.full(n, -1, dtype=np.int64)
    hops[u] = 0
    frontier = [u]
    while frontier and hops[v] < 0:
        nxt = []
        for x in frontier:
            for y in np.flatnonzero(adj[x] & (hops < 0)):
                hops[y] = hops[x] + 1
                nxt.append(int(y))
        frontier = nxt
    if hops[v] < 0:
        raise ValueError(f"no path closes birth edge ({u}, {v}); pair does not belong to this matrix")

    # cheapest remaining weight to v along shortest-hop paths, layer by layer
    h = hops[v]
    cost = np.full(n, np.inf)
    cost[v] = 0.0
    for level in range(h - 1, -1, -1):
        for x in np.flatnonzero(hops == level):
            nbrs = np.flatnonzero(adj[x] & (hops == level + 1) & np.isfinite(cost))
            if len(nbrs):
                cost[x] = np.min(dm[x, nbrs] + cost[nbrs])

    path = [u]
    x = u
    while x != v:
        nbrs = np.flatnonzero(adj[x] & (hops == hops[x] + 1) & np.isfinite(cost))
        totals = dm[x, nbrs] + cost[nbrs]
        best = totals.min()
        ok = nbrs[totals <= best + 1e-12 * max(1.0, abs(best))]
        x = int(ok.min())
        path.append(x)
    return path
