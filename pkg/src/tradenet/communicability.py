"""Communicability matrices and the communicability distance."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .graph import WeightedNetwork, binarize, strength_normalize

__all__ = [
    "CommunicabilityResult",
    "expm_symmetric",
    "communicability",
    "distance_from_communicability",
    "distance_extremes",
    "write_matrix_csv",
]

SYMMETRY_RTOL = 1e-10


@dataclass(frozen=True)
class CommunicabilityResult:
    """Communicability ``G`` and distance ``Xi`` for one network.

    ``Xi[i, j] = G[i, i] - 2 G[i, j] + G[j, j]``; the diagonal of ``G`` is
    the subgraph centrality.
    """

    G: np.ndarray
    Xi: np.ndarray
    labels: tuple[str, ...] = ()

    @property
    def subgraph_centrality(self) -> np.ndarray:
        return np.diag(self.G).copy()


def expm_symmetric(M) -> np.ndarray:
    """Matrix exponential of a symmetric matrix via its eigendecomposition.

    ``exp(M) = V diag(exp(lam)) V^T``, re-symmetrized on output.

    Raises
    ------
    ValueError
        If ``M`` is not square or not symmetric to a relative 1e-10.
    numpy.linalg.LinAlgError
        If the eigensolver does not converge.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = np.max(np.abs(M)) if M.size else 0.0
    asym = np.max(np.abs(M - M.T)) if M.size else 0.0
    if asym > SYMMETRY_RTOL * scale:
        raise ValueError(f"matrix is not symmetric (max |M - M^T| = {asym:.3e})")
    lam, V = np.linalg.eigh((M + M.T) / 2.0)
    E = (V * np.exp(lam)) @ V.T
    return (E + E.T) / 2.0


def distance_from_communicability(G) -> np.ndarray:
    G = np.asarray(G, dtype=float)
    d = np.diag(G)
    Xi = d[:, None] + d[None, :] - 2.0 * G
    Xi = (Xi + Xi.T) / 2.0
    np.fill_diagonal(Xi, 0.0)
    # rounding can push tiny distances below zero
    return np.maximum(Xi, 0.0)


def communicability(net: WeightedNetwork, mode: str = "weighted") -> CommunicabilityResult:
    """Communicability and communicability distance of ``net``.

    Parameters
    ----------
    net : WeightedNetwork
    mode : {"weighted", "binary"}
        ``"binary"`` exponentiates the 0/1 adjacency matrix. ``"weighted"``
        exponentiates the strength-normalized matrix ``S^-1/2 W S^-1/2``
        and therefore needs every node to have positive strength.
    """
    if mode == "binary":
        B = binarize(net)
    elif mode == "weighted":
        B = strength_normalize(net)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    G = expm_symmetric(B)
    return CommunicabilityResult(G, distance_from_communicability(G), net.labels)


def distance_extremes(res: CommunicabilityResult, labels=None, rtol: float = 1e-12):
    """Closest and farthest unordered node pairs under ``Xi``.

    Values within ``rtol`` of the extreme count as ties; ties go to the
    lexicographically smallest ``(label_a, label_b)`` pair.

    Returns
    -------
    dict with ``min_pair``, ``min_value``, ``max_pair``, ``max_value``.
    """
    labels = tuple(labels if labels is not None else res.labels)
    n = res.Xi.shape[0]
    if n < 2:
        raise ValueError("need at least two nodes")
    if len(labels) != n:
        raise ValueError("labels do not match matrix size")
    iu, ju = np.triu_indices(n, 1)
    vals = res.Xi[iu, ju]
    pairs = [tuple(sorted((labels[i], labels[j]))) for i, j in zip(iu, ju)]

    def pick(target):
        tol = rtol * max(abs(target), 1.0)
        cands = [k for k in range(vals.size) if abs(vals[k] - target) <= tol]
        k = min(cands, key=lambda c: pairs[c])
        return pairs[k], float(vals[k])

    lo_pair, lo = pick(vals.min())
    hi_pair, hi = pick(vals.max())
    return {"min_pair": lo_pair, "min_value": lo, "max_pair": hi_pair, "max_value": hi}


def write_matrix_csv(matrix, labels, path) -> None:
    """Square matrix as CSV with a label header row and a label first column."""
    matrix = np.asarray(matrix)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow([""] + list(labels))
        for lab, row in zip(labels, matrix):
            wr.writerow([lab] + [repr(float(x)) for x in row])
