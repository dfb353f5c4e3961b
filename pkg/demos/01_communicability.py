# # Communicability on small graphs
#
# Communicability counts every walk between two nodes, damping walks of
# length k by 1/k!. That is the matrix exponential of the adjacency matrix.
# The derived distance Xi_ij = G_ii + G_jj - 2 G_ij is small when two nodes
# exchange more than they keep to themselves.

# %%
import numpy as np

from tradenet import WeightedNetwork, communicability, distance_extremes

# %% [markdown]
# A complete graph: every pair sits at the same distance, 2/e.

# %%
K5 = WeightedNetwork(tuple("ABCDE"), 1 - np.eye(5))
res = communicability(K5, mode="binary")
print(res.Xi.round(6))
print("2/e =", round(2 / np.e, 6))

# %% [markdown]
# A path on three nodes. The eigenvalues are sqrt(2), 0 and -sqrt(2), so
# everything has a closed form: the two ends are exactly 2 apart.

# %%
P3 = WeightedNetwork(("end1", "mid", "end2"), [[0, 1, 0], [1, 0, 1], [0, 1, 0]])
res = communicability(P3, mode="binary")
print(res.Xi.round(7))
print(distance_extremes(res))

# %% [markdown]
# Weighted mode exponentiates S^-1/2 W S^-1/2 instead, so one heavy link
# cannot swamp the rest. Doubling every weight leaves it unchanged.

# %%
rng = np.random.default_rng(1)
W = np.triu(rng.uniform(0.5, 3.0, (6, 6)), 1)
W = W + W.T
net = WeightedNetwork(tuple("UVWXYZ"), W)
a = communicability(net).Xi
b = communicability(WeightedNetwork(net.labels, 2 * W)).Xi
print("max change after doubling:", np.abs(a - b).max())

# %% [markdown]
# sqrt(Xi) is a Euclidean distance, so it obeys the triangle inequality.

# %%
r = np.sqrt(a)
worst = max(r[i, j] - r[i, k] - r[k, j] for i in range(6) for j in range(6) for k in range(6))
print("largest triangle violation:", worst)
