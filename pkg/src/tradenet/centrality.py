"""Node centralities: degree, strength, eigenvector, betweenness, Onnela clustering."""

from __future__ import annotations

import csv
import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .graph import WeightedNetwork, binarize, degrees, normalize_max, strengths

__all__ = [
    "CentralityTable",
    "ConvergenceError",
    "eigenvector_centrality",
    "betweenness",
    "onnela_clustering",
    "community_clustering",
    "centrality_table",
    "summary_statistics",
    "write_centrality_csv",
    "read_centrality_csv",
    "CENTRALITY_COLUMNS",
]

CENTRALITY_COLUMNS = (
    "degree",
    "strength",
    "eigenvector",
    "betweenness",
    "clustering",
    "community_clustering",
)


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class CentralityTable:
    labels: tuple[str, ...]
    degree: np.ndarray
    strength: np.ndarray
    eigenvector: np.ndarray
    betweenness: np.ndarray
    clustering: np.ndarray
    community_clustering: np.ndarray

    def column(self, name: str) -> np.ndarray:
        if name not in CENTRALITY_COLUMNS:
            raise KeyError(name)
        return getattr(self, name)


def eigenvector_centrality(net: WeightedNetwork, mode: str = "weighted",
                           tol: float = 1e-12, max_iter: int = 100_000) -> np.ndarray:
    """Principal eigenvector of ``A`` (binary) or ``W`` (weighted), max-normalized to 1.

    Power iteration on ``B + I`` with ``B`` the adjacency rescaled to unit
    maximum; the shift keeps the Perron root strictly dominant on bipartite
    graphs and leaves the eigenvector unchanged. Iteration stops when
    successive max-normalized iterates differ by less than ``tol`` in
    max-norm. Disconnected graphs are restricted to their largest
    component (other nodes get 0) with a warning.
    """
    if mode == "binary":
        B = binarize(net)
    elif mode == "weighted":
        B = np.array(net.weights, dtype=float)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    n = net.n
    out = np.zeros(n)
    if B.max() <= 0:
        raise ValueError("eigenvector centrality needs at least one edge")
    _, comp = connected_components(csr_matrix(B > 0), directed=False)
    sizes = np.bincount(comp)
    keep = np.flatnonzero(comp == np.argmax(sizes))
    if keep.size < n:
        warnings.warn(
            f"graph is disconnected; eigenvector centrality restricted to "
            f"the largest component ({keep.size} of {n} nodes)",
            RuntimeWarning,
            stacklevel=2,
        )
    B = B[np.ix_(keep, keep)]
    B = B / B.max()
    x = np.ones(keep.size)
    for _ in range(max_iter):
        y = B @ x + x
        y /= y.max()
        if np.max(np.abs(y - x)) < tol:
            out[keep] = y
            return out
        x = y
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")


def betweenness(net: WeightedNetwork) -> np.ndarray:
    """Normalized shortest-path betweenness on the binarized graph.

    Brandes' accumulation with unit edge lengths; each unordered pair is
    counted once and the result is divided by ``(n - 1)(n - 2) / 2``.
    """
    n = net.n
    if n < 3:
        raise ValueError("betweenness needs at least three nodes")
    adj = [np.flatnonzero(row > 0) for row in net.weights]
    bc = np.zeros(n)
    for s in range(n):
        stack = []
        preds = [[] for _ in range(n)]
        sigma = np.zeros(n)
        sigma[s] = 1.0
        dist = np.full(n, -1)
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = np.zeros(n)
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    # every unordered pair was accumulated from both endpoints
    return bc / ((n - 1) * (n - 2))


def onnela_clustering(net: WeightedNetwork) -> np.ndarray:
    """Onnela weighted clustering on max-normalized weights.

    ``C_i = sum_{j != k} (w_ij w_jk w_ki)^(1/3) / (d_i (d_i - 1))`` with
    ``d_i`` the binary degree; nodes with ``d_i <= 1`` get 0.
    """
    if net.weights.max() <= 0:
        return np.zeros(net.n)
    c = np.cbrt(normalize_max(net))
    cycles = np.einsum("ij,jk,ki->i", c, c, c)
    d = degrees(net).astype(float)
    denom = d * (d - 1)
    out = np.zeros(net.n)
    ok = denom > 0
    out[ok] = cycles[ok] / denom[ok]
    return out


def community_clustering(clustering, membership) -> np.ndarray:
    """Replace each node's clustering by the mean clustering of its community."""
    clustering = np.asarray(clustering, dtype=float)
    mem = np.asarray(membership)
    if mem.shape != clustering.shape:
        raise ValueError("membership must cover every node")
    _, inv = np.unique(mem, return_inverse=True)
    sums = np.bincount(inv, weights=clustering)
    counts = np.bincount(inv)
    return (sums / counts)[inv]


def centrality_table(net: WeightedNetwork, membership=None, **eig_kw) -> CentralityTable:
    """All centralities for ``net``.

    Without ``membership`` the community clustering column equals the
    plain clustering (every node its own community).
    """
    clus = onnela_clustering(net)
    mem = np.arange(net.n) if membership is None else np.asarray(membership)
    return CentralityTable(
        labels=net.labels,
        degree=degrees(net).astype(int),
        strength=strengths(net),
        eigenvector=eigenvector_centrality(net, "weighted", **eig_kw),
        betweenness=betweenness(net) if net.n >= 3 else np.zeros(net.n),
        clustering=clus,
        community_clustering=community_clustering(clus, mem),
    )


def summary_statistics(table: CentralityTable) -> dict:
    """Mean, sample standard deviation, min and max per measure."""
    out = {}
    for name in CENTRALITY_COLUMNS:
        x = np.asarray(table.column(name), dtype=float)
        out[name] = {
            "mean": float(x.mean()),
            "sd": float(x.std(ddof=1)) if x.size > 1 else 0.0,
            "min": float(x.min()),
            "max": float(x.max()),
        }
    return out


def write_centrality_csv(table: CentralityTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(("country",) + CENTRALITY_COLUMNS)
        for k, lab in enumerate(table.labels):
            row = [lab, int(table.degree[k])]
            row += [repr(float(table.column(c)[k])) for c in CENTRALITY_COLUMNS[1:]]
            wr.writerow(row)


def read_centrality_csv(path) -> CentralityTable:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    cols = {c: np.array([float(r[c]) for r in rows]) for c in CENTRALITY_COLUMNS}
    cols["degree"] = cols["degree"].astype(int)
    return CentralityTable(labels=tuple(r["country"] for r in rows), **cols)
