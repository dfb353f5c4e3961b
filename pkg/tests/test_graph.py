import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tradenet.graph import (
    WeightedNetwork,
    ZeroStrengthError,
    binarize,
    degree,
    global_indicators,
    normalize_max,
    read_adjacency_json,
    read_edge_list,
    strength,
    strength_normalize,
    write_adjacency_json,
    write_edge_list,
)

from conftest import complete, labels, path, star
import oracles


def test_rejects_asymmetric_and_negative():
    with pytest.raises(ValueError, match="symmetric"):
        WeightedNetwork(("A", "B"), [[0, 1], [2, 0]])
    with pytest.raises(ValueError, match="non-negative"):
        WeightedNetwork(("A", "B"), [[0, -1], [-1, 0]])
    with pytest.raises(ValueError, match="diagonal"):
        WeightedNetwork(("A",), [[1.0]])


def test_network_is_immutable():
    net = complete(3)
    with pytest.raises(ValueError):
        net.weights[0, 1] = 5.0


def test_binarize():
    W = np.array([[0, 5.3, 0], [5.3, 0, 0], [0, 0, 0]])
    A = binarize(WeightedNetwork(labels(3), W))
    assert A[0, 1] == 1 and A[0, 2] == 0
    np.testing.assert_array_equal(binarize(complete(4, 2.5)), 1 - np.eye(4))


def test_degree_and_strength():
    assert degree(path(3), 0) == 1
    assert degree(complete(5), 2) == 4
    W = np.zeros((3, 3))
    W[0, 1] = W[1, 0] = 2.0
    W[0, 2] = W[2, 0] = 3.5
    assert strength(WeightedNetwork(labels(3), W), 0) == 5.5
    with pytest.raises(IndexError):
        degree(path(3), 3)


def test_global_indicators_closed_forms():
    g = global_indicators(complete(6))
    assert (g.n, g.m, g.density, g.transitivity) == (6, 15, 1.0, 1.0)
    assert global_indicators(star(5)).transitivity == 0.0
    assert np.isnan(global_indicators(complete(2)).transitivity)


@pytest.mark.parametrize("seed", range(5))
def test_transitivity_matches_triple_enumeration(seed):
    rng = np.random.default_rng(seed)
    W = oracles.random_weighted_graph(rng, 12, p=0.4, connected=False)
    net = WeightedNetwork(labels(12), W)
    expected = oracles.transitivity((W > 0).tolist())
    assert global_indicators(net).transitivity == pytest.approx(expected, abs=1e-14)


def test_density_increases_with_edges(rng):
    W = oracles.random_weighted_graph(rng, 8, p=0.3, connected=False)
    d0 = global_indicators(WeightedNetwork(labels(8), W)).density
    i, j = np.argwhere(np.triu(W == 0, 1))[0]
    W[i, j] = W[j, i] = 1.0
    assert global_indicators(WeightedNetwork(labels(8), W)).density > d0


def test_normalize_max():
    W = np.zeros((3, 3))
    W[0, 1] = W[1, 0] = 2
    W[0, 2] = W[2, 0] = 4
    W[1, 2] = W[2, 1] = 8
    out = normalize_max(WeightedNetwork(labels(3), W))
    assert sorted(out[np.triu_indices(3, 1)]) == [0.25, 0.5, 1.0]
    np.testing.assert_array_equal(normalize_max(complete(4, 7.0)), 1 - np.eye(4))
    single = normalize_max(path(2))
    assert single[0, 1] == 1.0
    with pytest.raises(ValueError):
        normalize_max(WeightedNetwork(labels(2), np.zeros((2, 2))))


def test_strength_normalize_closed_forms():
    n = 6
    out = strength_normalize(complete(n, 3.0))
    np.testing.assert_allclose(out[~np.eye(n, dtype=bool)], 1 / (n - 1), rtol=1e-15)
    two = strength_normalize(WeightedNetwork(labels(2), [[0, 7.0], [7.0, 0]]))
    assert two[0, 1] == pytest.approx(1.0)


def test_strength_normalize_zero_strength_names_node():
    W = np.zeros((3, 3))
    W[0, 1] = W[1, 0] = 1.0
    with pytest.raises(ZeroStrengthError) as exc:
        strength_normalize(WeightedNetwork(("AAA", "BBB", "CCC"), W))
    assert exc.value.node == "CCC"


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_strength_normalized_spectral_radius(n, seed):
    rng = np.random.default_rng(seed)
    W = oracles.random_weighted_graph(rng, n, p=0.7, connected=True)
    lam = np.linalg.eigvalsh(strength_normalize(WeightedNetwork(labels(n), W)))
    assert np.max(np.abs(lam)) <= 1 + 1e-12
    # connected graph: the top eigenvalue is exactly 1
    assert lam[-1] == pytest.approx(1.0, abs=1e-12)


def test_edge_list_and_adjacency_round_trip(tmp_path, rng):
    W = oracles.random_weighted_graph(rng, 7)
    net = WeightedNetwork(labels(7), W)
    write_edge_list(net, tmp_path / "e.csv")
    back = read_edge_list(tmp_path / "e.csv", net.labels)
    np.testing.assert_array_equal(back.weights, net.weights)
    write_adjacency_json(net, tmp_path / "a.json")
    doc = json.loads((tmp_path / "a.json").read_text())
    assert doc["labels"] == list(net.labels)
    np.testing.assert_array_equal(read_adjacency_json(tmp_path / "a.json").weights, net.weights)
    assert (tmp_path / "e.csv").read_text().splitlines()[0] == "source,target,weight"
