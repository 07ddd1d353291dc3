"""Host anomaly detectors (MLP, GCN, mean-aggregator SAGE) and their training loop.

Each detector maps node features to two logits (normal, anomaly). The
training loop in :func:`fit` is shared by the plain baseline and by both
curriculum directions; only the per-epoch subset differs.
"""

from __future__ import annotations

import enum
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .graph import AttributedGraph, NodeSplit, mean_aggregator
from .metrics import roc_auc
from .nn import (
    AdamState,
    ParamStore,
    adam_step,
    balanced_class_weights,
    glorot_uniform,
    softmax,
    softmax_ce_loss,
    spmm,
)


class DetectorKind(str, enum.Enum):
    MLP = "mlp"
    GCN = "gcn"
    SAGE = "sage"


@dataclass
class DetectorModel:
    kind: DetectorKind
    params: ParamStore
    hidden: int

    @property
    def num_features(self) -> int:
        w = self.params["w1"]
        return w.shape[0] // 2 if self.kind is DetectorKind.SAGE else w.shape[0]


def detector_init(kind, num_features: int, hidden: int = 64, seed: int = 0) -> DetectorModel:
    """Glorot-uniform initialised detector.

    Parameter shapes: mlp/gcn ``w1`` f×h, ``w2`` h×2; sage ``w1`` 2f×h,
    ``w2`` 2h×h, ``w3`` h×2.
    """
    kind = DetectorKind(kind)
    if num_features < 1 or hidden < 1:
        raise ValueError("num_features and hidden must be >= 1")
    rng = np.random.default_rng(seed)
    params = ParamStore()
    if kind is DetectorKind.SAGE:
        params.add("w1", glorot_uniform(rng, 2 * num_features, hidden))
        params.add("w2", glorot_uniform(rng, 2 * hidden, hidden))
        params.add("w3", glorot_uniform(rng, hidden, 2))
    else:
        params.add("w1", glorot_uniform(rng, num_features, hidden))
        params.add("w2", glorot_uniform(rng, hidden, 2))
    return DetectorModel(kind, params, hidden)


class GraphContext:
    """Per-graph quantities the detectors reuse across epochs.

    Also owns the scratch buffers for hidden activations and their gradients,
    so a context must be used by one training task at a time.
    """

    def __init__(self, graph: AttributedGraph, adj: sp.csr_matrix):
        if adj.shape != (graph.num_nodes, graph.num_nodes):
            raise ValueError("adjacency does not match the graph")
        self.graph = graph
        self.x = graph.features
        self.adj = adj
        self._ax = None
        self._agg = None
        self._agg_t = None
        self._sage_input = None
        self._scratch = {}

    def scratch(self, name: str, cols: int) -> np.ndarray:
        """Reusable ``(N, cols)`` work array; contents are overwritten by the caller."""
        buf = self._scratch.get(name)
        if buf is None or buf.shape[1] != cols:
            buf = self._scratch[name] = np.empty((self.graph.num_nodes, cols))
        return buf

    @property
    def ax(self) -> np.ndarray:
        if self._ax is None:
            self._ax = spmm(self.adj, self.x)
        return self._ax

    @property
    def agg(self) -> sp.csr_matrix:
        if self._agg is None:
            self._agg = mean_aggregator(self.graph)
            self._agg_t = sp.csr_matrix(self._agg.T)
            self._agg_t.sort_indices()
        return self._agg

    @property
    def agg_t(self) -> sp.csr_matrix:
        self.agg
        return self._agg_t

    @property
    def sage_input(self) -> np.ndarray:
        """``[X || M X]``, the first SAGE layer's input."""
        if self._sage_input is None:
            self._sage_input = np.hstack([self.x, spmm(self.agg, self.x)])
        return self._sage_input


def _forward(model: DetectorModel, ctx: GraphContext):
    p = model.params
    # Hidden activations live in the context's scratch buffers and relu is
    # applied in place; h > 0 marks the same entries as pre > 0, so the backward
    # pass needs only the activations. Without this, every epoch allocates and
    # frees several N x h arrays and large graphs spend their time in page faults.
    h = model.hidden
    if model.kind is DetectorKind.MLP:
        h1 = np.matmul(ctx.x, p["w1"], out=ctx.scratch("h1", h))
        np.maximum(h1, 0.0, out=h1)
        return h1 @ p["w2"], (h1,)
    if model.kind is DetectorKind.GCN:
        h1 = np.matmul(ctx.ax, p["w1"], out=ctx.scratch("h1", h))
        np.maximum(h1, 0.0, out=h1)
        return spmm(ctx.adj, h1 @ p["w2"]), (h1,)
    c1 = ctx.sage_input
    c2 = ctx.scratch("c2", 2 * h)
    h1 = c2[:, :h]
    np.matmul(c1, p["w1"], out=h1)
    np.maximum(h1, 0.0, out=h1)
    c2[:, h:] = spmm(ctx.agg, h1)
    h2 = np.matmul(c2, p["w2"], out=ctx.scratch("h2", h))
    np.maximum(h2, 0.0, out=h2)
    return h2 @ p["w3"], (c1, h1, c2, h2)


def _backward(model: DetectorModel, ctx: GraphContext, cache, g_logits: np.ndarray) -> None:
    p = model.params
    if model.kind is DetectorKind.MLP:
        (h1,) = cache
        p.set_grad("w2", h1.T @ g_logits)
        g_h1 = np.matmul(g_logits, p["w2"].T, out=ctx.scratch("g_h1", model.hidden))
        g_h1 *= h1 > 0
        p.set_grad("w1", ctx.x.T @ g_h1)
        return
    if model.kind is DetectorKind.GCN:
        (h1,) = cache
        g_hw = spmm(ctx.adj, g_logits)  # adj is symmetric
        p.set_grad("w2", h1.T @ g_hw)
        g_h1 = np.matmul(g_hw, p["w2"].T, out=ctx.scratch("g_h1", model.hidden))
        g_h1 *= h1 > 0
        p.set_grad("w1", ctx.ax.T @ g_h1)
        return
    c1, h1, c2, h2 = cache
    h = model.hidden
    p.set_grad("w3", h2.T @ g_logits)
    g_h2 = np.matmul(g_logits, p["w3"].T, out=ctx.scratch("g_h2", h))
    g_h2 *= h2 > 0
    p.set_grad("w2", c2.T @ g_h2)
    g_c2 = np.matmul(g_h2, p["w2"].T, out=ctx.scratch("g_c2", 2 * h))
    g_h1 = g_c2[:, :h]
    g_h1 += spmm(ctx.agg_t, g_c2[:, h:])
    g_h1 *= h1 > 0
    p.set_grad("w1", c1.T @ g_h1)


def _check_features(model: DetectorModel, graph: AttributedGraph) -> None:
    if graph.num_features != model.num_features:
        raise ValueError(
            f"detector expects {model.num_features} features, graph has {graph.num_features}"
        )


def detector_forward(model: DetectorModel, graph: AttributedGraph, adj, ctx: GraphContext | None = None) -> np.ndarray:
    """Logits of shape ``(N, 2)``; column 1 is the anomaly class."""
    _check_features(model, graph)
    ctx = ctx or GraphContext(graph, adj)
    return _forward(model, ctx)[0]


def detector_loss_and_grad(model: DetectorModel, ctx: GraphContext, mask, class_weights=None):
    """Weighted cross-entropy on ``mask``; fills ``model.params`` gradients.

    Returns ``(loss, logits)``. Class weights default to inverse class
    frequency on ``mask``.
    """
    labels = ctx.graph.labels
    if class_weights is None:
        class_weights = balanced_class_weights(labels, mask)
    logits, cache = _forward(model, ctx)
    loss, g_logits = softmax_ce_loss(logits, labels, mask, class_weights)
    _backward(model, ctx, cache, g_logits)
    return loss, logits


def anomaly_score(logits) -> np.ndarray:
    """Softmax probability of the anomaly class."""
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise ValueError("non-finite logits")
    return softmax(logits)[:, 1]


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    lambda_t: float
    subset_size: int
    loss: float
    val_auc: float


@dataclass
class TrainResult:
    model: DetectorModel
    log: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1
    best_val_auc: float = float("nan")


def fit(
    model: DetectorModel,
    graph: AttributedGraph,
    adj,
    split: NodeSplit,
    subset_at: Callable[[int], tuple[float, np.ndarray]],
    full_from: int,
    max_epochs: int,
    patience: int = 20,
    adam: AdamState | None = None,
) -> TrainResult:
    """Full-batch training with best-validation-AUC checkpointing.

    At epoch ``t`` (counted from 0), ``subset_at(t)`` gives the pacing value
    and the training nodes used for that epoch. From epoch ``full_from`` on,
    training stops once validation AUC has not improved for ``patience``
    consecutive epochs; ``max_epochs`` caps the total. Validation AUC is
    measured on the parameters the epoch starts with, and the model returned
    holds the parameters of the best such epoch.
    """
    _check_features(model, graph)
    ctx = GraphContext(graph, adj)
    val_labels = graph.labels[split.val]
    adam = adam or AdamState()
    result = TrainResult(model)
    best = None
    for t in range(max_epochs):
        lam, subset = subset_at(t)
        mask = np.sort(np.asarray(subset, dtype=np.int64))
        loss, logits = detector_loss_and_grad(model, ctx, mask)
        if not np.isfinite(loss):
            raise FloatingPointError(f"detector loss diverged at epoch {t}")
        val_auc = roc_auc(anomaly_score(logits[split.val]), val_labels)
        result.log.append(EpochRecord(t, float(lam), int(mask.size), loss, val_auc))
        if best is None or val_auc > result.best_val_auc:
            best = model.params.copy()
            result.best_epoch, result.best_val_auc = t, val_auc
        if t >= full_from and t - result.best_epoch >= patience:
            model.params.zero_grad()
            break
        adam_step(model.params, adam)
    if best is not None:
        model.params.load(best)
    return result


def train_plain(
    model: DetectorModel,
    graph: AttributedGraph,
    adj,
    split: NodeSplit,
    epochs: int,
    patience: int = 20,
    adam: AdamState | None = None,
) -> TrainResult:
    """No-curriculum baseline: every epoch uses the whole training set."""
    train = split.train
    return fit(model, graph, adj, split, lambda t: (1.0, train), 0, epochs, patience, adam)


def params_to_text(params: ParamStore) -> str:
    """Serialize as ``name rows cols`` header lines each followed by the row-major values."""
    lines = []
    for name in params:
        w = params[name]
        lines.append(f"{name} {w.shape[0]} {w.shape[1]}")
        lines.append(" ".join(repr(float(v)) for v in w.ravel()))
    return "\n".join(lines) + "\n"


def params_from_text(text: str) -> ParamStore:
    lines = text.splitlines()
    if len(lines) % 2:
        raise ValueError("truncated parameter file")
    store = ParamStore()
    for header, values in zip(lines[::2], lines[1::2]):
        name, rows, cols = header.split()
        data = np.array([float(v) for v in values.split()], dtype=np.float64)
        store.add(name, data.reshape(int(rows), int(cols)))
    return store
