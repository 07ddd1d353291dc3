"""Graph-autoencoder difficulty measurer and the two curriculum orderings."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import AttributedGraph, write_text_atomic
from .nn import AdamState, ParamStore, adam_step, glorot_uniform, mse_loss, relu, relu_backward, spmm


@dataclass
class GaeModel:
    """Two-layer GCN encoder (``enc1``: f×h, ``enc2``: h×d) and linear decoder ``dec``: d×f."""

    params: ParamStore

    @property
    def num_features(self) -> int:
        return self.params["enc1"].shape[0]


def gae_init(num_features: int, hidden: int = 64, embed: int = 32, seed: int = 0) -> GaeModel:
    if min(num_features, hidden, embed) < 1:
        raise ValueError("feature, hidden and embedding sizes must be >= 1")
    rng = np.random.default_rng(seed)
    params = ParamStore()
    params.add("enc1", glorot_uniform(rng, num_features, hidden))
    params.add("enc2", glorot_uniform(rng, hidden, embed))
    params.add("dec", glorot_uniform(rng, embed, num_features))
    return GaeModel(params)


def _encode(params: ParamStore, ax: np.ndarray, adj: sp.csr_matrix):
    pre1 = ax @ params["enc1"]
    h1 = relu(pre1)
    ah1 = spmm(adj, h1)
    z = ah1 @ params["enc2"]
    return pre1, ah1, z


def gae_loss_and_grad(model: GaeModel, graph: AttributedGraph, adj: sp.csr_matrix, ax=None) -> float:
    """Reconstruction MSE of the features; writes gradients into ``model.params``."""
    p = model.params
    x = graph.features
    if ax is None:
        ax = spmm(adj, x)
    pre1, ah1, z = _encode(p, ax, adj)
    recon = z @ p["dec"]
    loss, g_recon = mse_loss(recon, x)

    p.set_grad("dec", z.T @ g_recon)
    g_z = g_recon @ p["dec"].T
    p.set_grad("enc2", ah1.T @ g_z)
    # adj is symmetric, so it is its own transpose
    g_h1 = spmm(adj, g_z @ p["enc2"].T)
    p.set_grad("enc1", ax.T @ relu_backward(pre1, g_h1))
    return loss


def gae_train(
    graph: AttributedGraph,
    adj: sp.csr_matrix,
    hidden: int = 64,
    embed: int = 32,
    epochs: int = 300,
    seed: int = 0,
    lr: float = 0.01,
    tol: float = 1e-6,
    patience: int = 20,
    history: list | None = None,
) -> GaeModel:
    """Pretrain the autoencoder on all nodes by full-batch Adam.

    Stops early once the loss has improved by less than ``tol`` for
    ``patience`` consecutive epochs. Hidden and embedding widths are clipped
    to the feature dimension. Per-epoch losses are appended to ``history``
    when given.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if hidden < 1 or embed < 1:
        raise ValueError("hidden and embed must be >= 1")
    f = graph.num_features
    model = gae_init(f, min(hidden, f), min(embed, f), seed)
    state = AdamState(lr=lr)
    ax = spmm(adj, graph.features)
    best = np.inf
    stalled = 0
    for epoch in range(1, epochs + 1):
        loss = gae_loss_and_grad(model, graph, adj, ax)
        if not np.isfinite(loss):
            raise FloatingPointError(f"GAE loss diverged at epoch {epoch}")
        if history is not None:
            history.append(loss)
        adam_step(model.params, state)
        if best - loss < tol:
            stalled += 1
            if stalled >= patience:
                break
        else:
            stalled = 0
        best = min(best, loss)
    return model


def gae_embed(model: GaeModel, graph: AttributedGraph, adj: sp.csr_matrix) -> np.ndarray:
    """Encoder output, one row per node."""
    if graph.num_features != model.num_features:
        raise ValueError(
            f"model expects {model.num_features} features, graph has {graph.num_features}"
        )
    _, _, z = _encode(model.params, spmm(adj, graph.features), adj)
    return z


def compute_bds(embeddings, norm: str = "l1") -> np.ndarray:
    """Distance of every embedding row from the column-wise mean row.

    ``norm`` is ``"l1"`` (default) or ``"l2"``.
    """
    h = np.asarray(embeddings, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] == 0:
        raise ValueError("embeddings must be a non-empty 2-d matrix")
    dev = h - h.mean(axis=0)
    if norm == "l1":
        return np.abs(dev).sum(axis=1)
    if norm == "l2":
        return np.sqrt((dev * dev).sum(axis=1))
    raise ValueError(f"unknown norm {norm!r}")


@dataclass(frozen=True)
class DifficultyRanking:
    bds: np.ndarray
    q_homo: np.ndarray
    q_hete: np.ndarray

    def ranks(self) -> np.ndarray:
        """Position of each node in ``q_homo`` (0 = easiest in the homogeneity direction)."""
        r = np.empty_like(self.q_homo)
        r[self.q_homo] = np.arange(self.q_homo.size)
        return r


def rank_nodes(bds) -> DifficultyRanking:
    """Ascending order by score (ties by node index) and its exact reverse."""
    bds = np.asarray(bds, dtype=np.float64).ravel()
    if not np.all(np.isfinite(bds)):
        raise ValueError("non-finite difficulty scores")
    q_homo = np.argsort(bds, kind="stable")
    return DifficultyRanking(bds, q_homo, q_homo[::-1].copy())


def bds_csv(ranking: DifficultyRanking) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["node_id", "bds", "rank_homo"])
    for node, (score, rank) in enumerate(zip(ranking.bds, ranking.ranks())):
        writer.writerow([node, repr(float(score)), int(rank)])
    return buf.getvalue()


def write_bds_csv(ranking: DifficultyRanking, path) -> None:
    write_text_atomic(path, bds_csv(ranking))
