# # Centralities
#
# Degree and strength count links and their weight. Eigenvector
# centrality rewards central neighbours. Betweenness counts shortest
# paths through a node. Onnela clustering weighs each triangle by the
# geometric mean of its normalized weights.

# %%
import numpy as np

from tradenet import WeightedNetwork
from tradenet.centrality import betweenness, centrality_table, eigenvector_centrality, onnela_clustering

# %% [markdown]
# On a star the hub lies on every path, and each leaf has eigenvector
# centrality 1/sqrt(n-1).

# %%
n = 6
W = np.zeros((n, n))
W[0, 1:] = W[1:, 0] = 1.0
star = WeightedNetwork(tuple("HABCDE"), W)
print("betweenness:", betweenness(star))
print("eigenvector:", eigenvector_centrality(star, "binary").round(6), " 1/sqrt(5) =", round(1 / np.sqrt(5), 6))

# %% [markdown]
# A triangle whose weights are 1, 1 and 1/8: every node's clustering is
# the triangle intensity (1 * 1 * 1/8)^(1/3) = 0.5.

# %%
tri = WeightedNetwork(tuple("XYZ"), [[0, 1, 1], [1, 0, 0.125], [1, 0.125, 0]])
print(onnela_clustering(tri))

# %% [markdown]
# The full table, with communities averaging clustering over their members.

# %%
rng = np.random.default_rng(3)
W = np.triu(rng.uniform(0, 1, (8, 8)) * (rng.random((8, 8)) < 0.6), 1)
W = W + W.T
net = WeightedNetwork(tuple("ABCDEFGH"), W)
table = centrality_table(net, membership=[0, 0, 0, 0, 1, 1, 1, 1])
for name in ("degree", "eigenvector", "betweenness", "clustering", "community_clustering"):
    print(f"{name:>21}", np.round(table.column(name), 3))
