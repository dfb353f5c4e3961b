"""Community detection by communicability-distance thresholding, plus a Louvain baseline.

A threshold ``xi0`` links every pair with ``Xi[i, j] <= xi0``; communities
are the connected components of that graph. The threshold is chosen to
maximize the cohesion-weighted quality ``Q``, which can only change at the
observed distance values, so the sweep over them is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .graph import WeightedNetwork

__all__ = [
    "CohesionMatrix",
    "CommunityPartition",
    "cohesion",
    "community_graph",
    "partition_from_graph",
    "quality",
    "threshold_candidates",
    "optimize_threshold",
    "modularity",
    "louvain",
    "compare_partitions",
    "relabel_first_appearance",
]


@dataclass(frozen=True)
class CohesionMatrix:
    gamma: np.ndarray
    row_means: np.ndarray
    global_mean: float


@dataclass(frozen=True)
class CommunityPartition:
    threshold: float
    membership: np.ndarray
    q_value: float
    community_graph: np.ndarray

    @property
    def n_communities(self) -> int:
        return int(self.membership.max()) + 1 if self.membership.size else 0


def _as_distance(Xi) -> np.ndarray:
    Xi = np.asarray(Xi, dtype=float)
    if Xi.ndim != 2 or Xi.shape[0] != Xi.shape[1]:
        raise ValueError(f"expected a square distance matrix, got {Xi.shape}")
    return Xi


def cohesion(Xi) -> CohesionMatrix:
    """Cohesion ``gamma_ij = (xbar_j - xbar) - (Xi_ij - xbar_i)``.

    Row means skip the diagonal; the global mean is over ordered pairs
    ``i != j``. The diagonal of ``gamma`` is set to zero and never used.
    """
    Xi = _as_distance(Xi)
    n = Xi.shape[0]
    if n < 2:
        raise ValueError("cohesion needs at least two nodes")
    off = ~np.eye(n, dtype=bool)
    row = np.where(off, Xi, 0.0).sum(axis=1) / (n - 1)
    glob = float(np.where(off, Xi, 0.0).sum() / (n * (n - 1)))
    gamma = (row[None, :] - glob) - (Xi - row[:, None])
    np.fill_diagonal(gamma, 0.0)
    return CohesionMatrix(gamma, row, glob)


def community_graph(Xi, xi0: float) -> np.ndarray:
    """Binary adjacency with ``m_ij = 1`` iff ``Xi_ij <= xi0`` and ``i != j``."""
    Xi = _as_distance(Xi)
    if not np.isfinite(xi0):
        raise ValueError("threshold must be finite")
    M = (Xi <= xi0).astype(np.int8)
    np.fill_diagonal(M, 0)
    return M


def relabel_first_appearance(labels) -> np.ndarray:
    """Map arbitrary community labels to 0, 1, ... in order of first appearance."""
    seen: dict = {}
    return np.array([seen.setdefault(x, len(seen)) for x in labels], dtype=int)


def partition_from_graph(M) -> np.ndarray:
    """Connected components of ``M`` as membership ids ordered by first node."""
    M = np.asarray(M)
    n = M.shape[0]
    if n == 0:
        return np.zeros(0, dtype=int)
    _, comp = connected_components(csr_matrix(M != 0), directed=False)
    return relabel_first_appearance(comp)


def _same_community(membership) -> np.ndarray:
    mem = np.asarray(membership)
    same = mem[:, None] == mem[None, :]
    np.fill_diagonal(same, False)
    return same


def quality(Xi, membership, gamma=None) -> float:
    """Sum of ``gamma_ij`` over ordered pairs ``i != j`` in the same community."""
    if gamma is None:
        gamma = cohesion(Xi).gamma
    mem = np.asarray(membership)
    if mem.shape != (gamma.shape[0],):
        raise ValueError("membership must assign every node")
    return float(gamma[_same_community(mem)].sum())


def threshold_candidates(Xi) -> np.ndarray:
    """Distinct off-diagonal distances, ascending, preceded by one value below the minimum."""
    Xi = _as_distance(Xi)
    iu = np.triu_indices(Xi.shape[0], 1)
    vals = np.unique(np.concatenate([Xi[iu], Xi.T[iu]]))
    below = vals[0] - max(1.0, abs(vals[0]))
    return np.concatenate([[below], vals])


def optimize_threshold(Xi, tie_tol: float = 1e-12) -> CommunityPartition:
    """Partition maximizing ``Q`` over all thresholds.

    Every candidate threshold is evaluated; among those whose ``Q`` is within
    ``tie_tol`` of the best, the smallest threshold wins. The tolerance
    absorbs rounding noise in nominally equal distances (e.g. complete graphs).
    """
    Xi = _as_distance(Xi)
    if Xi.shape[0] < 2:
        raise ValueError("need at least two nodes")
    gamma = cohesion(Xi).gamma
    cands = threshold_candidates(Xi)
    qs = np.empty(cands.size)
    mems = []
    for k, t in enumerate(cands):
        mem = partition_from_graph(community_graph(Xi, t))
        mems.append(mem)
        qs[k] = quality(Xi, mem, gamma)
    best = int(np.flatnonzero(qs >= qs.max() - tie_tol)[0])
    t = float(cands[best])
    return CommunityPartition(t, mems[best], float(qs[best]), community_graph(Xi, t))


# --- Louvain baseline -------------------------------------------------------


def _weights(net) -> np.ndarray:
    return np.asarray(net.weights if isinstance(net, WeightedNetwork) else net, dtype=float)


def modularity(net, membership) -> float:
    """Weighted Newman-Girvan modularity ``sum_c e_c/m - (d_c / 2m)^2``.

    ``e_c`` is the weight inside community ``c`` (each edge once), ``d_c``
    the total strength of its members and ``m`` the total edge weight.
    """
    W = _weights(net)
    mem = np.asarray(membership)
    two_m = W.sum()
    if two_m <= 0:
        raise ValueError("modularity is undefined for an edgeless graph")
    k = W.sum(axis=1)
    q = 0.0
    for c in np.unique(mem):
        idx = mem == c
        inside = W[np.ix_(idx, idx)].sum()  # counts each edge twice
        q += inside / two_m - (k[idx].sum() / two_m) ** 2
    return float(q)


def _local_moves(A: np.ndarray, order: np.ndarray, max_sweeps: int = 1000) -> tuple[np.ndarray, bool]:
    """One Louvain level: greedy single-node moves until no move improves modularity.

    ``A`` may carry self-loops (diagonal) from aggregation.
    """
    n = A.shape[0]
    k = A.sum(axis=1)
    two_m = k.sum()
    comm = np.arange(n)
    tot = k.copy()
    moved_any = False
    for _ in range(max_sweeps):
        moved = False
        for i in order:
            ci = comm[i]
            tot[ci] -= k[i]
            links = np.bincount(comm, weights=A[i], minlength=n)
            links[ci] -= A[i, i]
            neigh = np.unique(comm[(A[i] > 0) & (np.arange(n) != i)])
            best_c = ci
            best_gain = links[ci] - tot[ci] * k[i] / two_m
            for c in neigh:
                gain = links[c] - tot[c] * k[i] / two_m
                if gain > best_gain + 1e-12 * two_m:
                    best_c, best_gain = c, gain
            comm[i] = best_c
            tot[best_c] += k[i]
            if best_c != ci:
                moved = moved_any = True
        if not moved:
            break
    return relabel_first_appearance(comm), moved_any


def louvain(net, seed: int | None = 0, max_levels: int = 100) -> np.ndarray:
    """Louvain modularity maximization on a weighted undirected graph.

    Each level greedily moves single nodes to the neighbouring community
    with the largest modularity gain (strict improvement required; ties go
    to the smallest community id), then aggregates communities into nodes.
    ``seed`` fixes the node visiting order; ``seed=None`` visits nodes in
    ascending index order. Output ids are ordered by first appearance.
    """
    W = _weights(net)
    n = W.shape[0]
    if W.sum() <= 0:
        return np.arange(n)
    rng = np.random.default_rng(seed) if seed is not None else None
    membership = np.arange(n)
    A = W.copy()
    for _ in range(max_levels):
        m = A.shape[0]
        order = rng.permutation(m) if rng is not None else np.arange(m)
        comm, moved = _local_moves(A, order)
        if not moved:
            break
        membership = comm[membership]
        nc = comm.max() + 1
        P = np.zeros((m, nc))
        P[np.arange(m), comm] = 1.0
        A = P.T @ A @ P
    return relabel_first_appearance(membership)


# --- comparison ---------------------------------------------------------------


def _summary(mem: np.ndarray, labels) -> dict:
    ids, sizes = np.unique(mem, return_counts=True)
    singles = [labels[i] for i in range(mem.size) if sizes[np.searchsorted(ids, mem[i])] == 1]
    return {
        "n_communities": int(ids.size),
        "n_nonsingleton": int(np.sum(sizes > 1)),
        "n_isolated": int(np.sum(sizes == 1)),
        "sizes": sorted((int(s) for s in sizes), reverse=True),
        "isolated": singles,
    }


def compare_partitions(a, b, labels=None) -> dict:
    """Community counts, size lists, singleton lists and the Rand index of two partitions."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("partitions cover different node sets")
    n = a.size
    if labels is None:
        labels = [str(i) for i in range(n)]
    labels = list(labels)
    if len(labels) != n:
        raise ValueError("labels do not match partition size")
    iu = np.triu_indices(n, 1)
    if iu[0].size:
        agree = (a[:, None] == a[None, :]) == (b[:, None] == b[None, :])
        rand = float(agree[iu].mean())
    else:
        rand = 1.0
    return {"a": _summary(a, labels), "b": _summary(b, labels), "rand_index": rand}
