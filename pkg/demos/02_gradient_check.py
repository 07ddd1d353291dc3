"""
Checking hand-written gradients
===============================

Every model in the package carries an explicit backward pass. Central
finite differences confirm each one.
"""

import numpy as np

from bcl.detectors import GraphContext, detector_init, detector_loss_and_grad
from bcl.gae import gae_init, gae_loss_and_grad
from bcl.graph import AttributedGraph, normalize_adjacency
from bcl.nn import grad_check

# A small random graph with two anomalies.
rng = np.random.default_rng(0)
edges = [(i, j) for i in range(12) for j in range(i + 1, 12) if rng.random() < 0.3]
labels = np.zeros(12, dtype=int)
labels[[3, 8]] = 1
graph = AttributedGraph(edges, rng.normal(size=(12, 5)), labels)
adj = normalize_adjacency(graph)

# The autoencoder reconstruction loss
gae = gae_init(5, hidden=8, embed=4, seed=1)
print("gae ", grad_check(lambda: gae_loss_and_grad(gae, graph, adj), gae.params))

# The three detectors under class-weighted cross-entropy
ctx = GraphContext(graph, adj)
mask = np.arange(12)
for kind in ("mlp", "gcn", "sage"):
    model = detector_init(kind, 5, hidden=8, seed=1)
    err = grad_check(lambda: detector_loss_and_grad(model, ctx, mask)[0], model.params)
    print(f"{kind:<4}", err)
