"""Weighted undirected network over ISO3-labelled nodes and its elementary indicators."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "WeightedNetwork",
    "GlobalIndicators",
    "ZeroStrengthError",
    "binarize",
    "degree",
    "strength",
    "degrees",
    "strengths",
    "global_indicators",
    "normalize_max",
    "strength_normalize",
    "isolated_nodes",
    "write_edge_list",
    "read_edge_list",
    "write_adjacency_json",
    "read_adjacency_json",
]


class ZeroStrengthError(ValueError):
    """A node with zero strength was passed where strictly positive strength is required."""

    def __init__(self, node):
        super().__init__(f"node {node!r} has zero strength")
        self.node = node


@dataclass(frozen=True)
class WeightedNetwork:
    """Symmetric, non-negative weight matrix with a zero diagonal.

    Parameters
    ----------
    labels : sequence of str
        Node labels (ISO3 codes), in matrix order.
    weights : array_like, shape (n, n)
        Edge weights. ``weights[i, j] > 0`` means an edge between i and j.
    """

    labels: tuple[str, ...]
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        w = np.array(self.weights, dtype=float, copy=True)
        n = len(labels)
        if n < 1:
            raise ValueError("network needs at least one node")
        if len(set(labels)) != n:
            raise ValueError("node labels must be unique")
        if w.shape != (n, n):
            raise ValueError(f"weights shape {w.shape} does not match {n} labels")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if np.any(np.diag(w) != 0):
            raise ValueError("weights must have a zero diagonal")
        if not np.array_equal(w, w.T):
            raise ValueError("weights must be symmetric")
        w.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def m(self) -> int:
        """Number of undirected edges."""
        return int(np.count_nonzero(np.triu(self.weights, 1)))

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def subgraph(self, nodes: Sequence[int]) -> "WeightedNetwork":
        idx = np.asarray(nodes, dtype=int)
        return WeightedNetwork(
            tuple(self.labels[i] for i in idx), self.weights[np.ix_(idx, idx)]
        )

    def permuted(self, perm: Sequence[int]) -> "WeightedNetwork":
        """Relabelled copy whose node ``k`` is this network's node ``perm[k]``."""
        return self.subgraph(perm)

    @classmethod
    def from_edges(cls, labels, edges) -> "WeightedNetwork":
        """Build from ``(source, target, weight)`` triples keyed by label."""
        labels = tuple(labels)
        pos = {lab: k for k, lab in enumerate(labels)}
        w = np.zeros((len(labels), len(labels)))
        for s, t, x in edges:
            i, j = pos[s], pos[t]
            w[i, j] = w[j, i] = float(x)
        return cls(labels, w)


@dataclass(frozen=True)
class GlobalIndicators:
    n: int
    m: int
    average_degree: float
    density: float
    transitivity: float  # nan when n < 3 or no connected triple exists

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "average_degree": self.average_degree,
            "density": self.density,
            "transitivity": None if math.isnan(self.transitivity) else self.transitivity,
        }


def binarize(net: WeightedNetwork) -> np.ndarray:
    """0/1 adjacency matrix: ``a_ij = 1`` iff ``w_ij > 0``."""
    return (net.weights > 0).astype(float)


def _check_index(net: WeightedNetwork, i: int) -> None:
    if not 0 <= i < net.n:
        raise IndexError(f"node index {i} out of range for n={net.n}")


def degree(net: WeightedNetwork, i: int) -> int:
    _check_index(net, i)
    return int(np.count_nonzero(net.weights[i] > 0))


def strength(net: WeightedNetwork, i: int) -> float:
    _check_index(net, i)
    return float(net.weights[i].sum())


def degrees(net: WeightedNetwork) -> np.ndarray:
    return np.count_nonzero(net.weights > 0, axis=1)


def strengths(net: WeightedNetwork) -> np.ndarray:
    return net.weights.sum(axis=1)


def isolated_nodes(net: WeightedNetwork) -> np.ndarray:
    """Indices of nodes with zero strength."""
    return np.flatnonzero(strengths(net) == 0)


def global_indicators(net: WeightedNetwork) -> GlobalIndicators:
    """Node/edge counts, average degree, density and binary transitivity.

    Transitivity is ``3 * triangles / connected triples`` on the binarized
    graph; it is reported as ``nan`` when undefined.
    """
    n, m = net.n, net.m
    density = 2.0 * m / (n * (n - 1)) if n >= 2 else float("nan")
    a = binarize(net)
    d = a.sum(axis=1)
    transitivity = float("nan")
    if n >= 3:
        closed = np.trace(a @ a @ a)  # 6 * triangles
        triples = float(np.sum(d * (d - 1)))  # 2 * connected triples
        if triples > 0:
            transitivity = float(closed / triples)
    return GlobalIndicators(n, m, 2.0 * m / n, density, transitivity)


def normalize_max(net: WeightedNetwork) -> np.ndarray:
    """Weights divided by the largest weight, so the maximum entry is exactly 1."""
    top = net.weights.max()
    if top <= 0:
        raise ValueError("cannot max-normalize an all-zero weight matrix")
    return net.weights / top


def strength_normalize(net: WeightedNetwork) -> np.ndarray:
    """Return ``S^-1/2 W S^-1/2`` with entries ``w_ij / sqrt(s_i s_j)``.

    Raises
    ------
    ZeroStrengthError
        If any node has zero strength; drop isolated nodes first.
    """
    s = strengths(net)
    zero = np.flatnonzero(s <= 0)
    if zero.size:
        raise ZeroStrengthError(net.labels[zero[0]])
    r = 1.0 / np.sqrt(s)
    out = net.weights * r[:, None] * r[None, :]
    return (out + out.T) / 2.0


def write_edge_list(net: WeightedNetwork, path) -> None:
    """CSV ``source,target,weight``, one row per undirected edge (i < j)."""
    iu, ju = np.nonzero(np.triu(net.weights, 1))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["source", "target", "weight"])
        for i, j in zip(iu, ju):
            wr.writerow([net.labels[i], net.labels[j], repr(float(net.weights[i, j]))])


def read_edge_list(path, labels=None) -> WeightedNetwork:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    edges = [(r["source"], r["target"], float(r["weight"])) for r in rows]
    if labels is None:
        labels = sorted({e[0] for e in edges} | {e[1] for e in edges})
    return WeightedNetwork.from_edges(labels, edges)


def write_adjacency_json(net: WeightedNetwork, path) -> None:
    doc = {"labels": list(net.labels), "weights": net.weights.tolist()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def read_adjacency_json(path) -> WeightedNetwork:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return WeightedNetwork(tuple(doc["labels"]), np.asarray(doc["weights"], dtype=float))
