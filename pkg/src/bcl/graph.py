"""Attributed graphs, node splits, text-file I/O and the GCN propagation operator."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class GraphFormatError(ValueError):
    """Raised when graph files are malformed or violate graph invariants."""


@dataclass(frozen=True)
class AttributedGraph:
    """Undirected simple graph with node features and binary anomaly labels.

    Edges are stored once per undirected pair as an ``(m, 2)`` integer array
    with ``edges[:, 0] < edges[:, 1]``, sorted lexicographically.
    """

    edges: np.ndarray
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        if features.ndim != 2:
            raise GraphFormatError("features must be a 2-d matrix")
        n = features.shape[0]
        if labels.shape[0] != n:
            raise GraphFormatError(
                f"feature rows ({n}) != label rows ({labels.shape[0]})"
            )
        if not np.all(np.isfinite(features)):
            raise GraphFormatError("features contain non-finite values")
        if labels.size and not np.all((labels == 0) | (labels == 1)):
            raise GraphFormatError("labels must be 0 or 1")
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise GraphFormatError(f"edge endpoint outside [0, {n})")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise GraphFormatError("self-loop edge")
            edges = np.sort(edges, axis=1)
            edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
            if np.any(np.all(edges[1:] == edges[:-1], axis=1)):
                raise GraphFormatError("duplicate undirected edge")
        for name, arr in (("edges", edges), ("features", features), ("labels", labels)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency matrix without self-loops."""
        n = self.num_nodes
        rows = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        cols = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        a = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
        a.sort_indices()
        return a

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.num_nodes)


@dataclass(frozen=True)
class NodeSplit:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    num_nodes: int = field(default=-1)

    def __post_init__(self):
        for name in ("train", "val", "test"):
            arr = np.sort(np.asarray(getattr(self, name), dtype=np.int64).ravel())
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        union = np.concatenate([self.train, self.val, self.test])
        if np.unique(union).size != union.size:
            raise ValueError("split sets overlap")
        if self.num_nodes >= 0 and union.size and (union.min() < 0 or union.max() >= self.num_nodes):
            raise ValueError("split index outside the node range")
        if self.train.size == 0:
            raise ValueError("empty training set")


def _parse_int(token: str, path, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise GraphFormatError(f"{path}:{lineno}: expected an integer, got {token!r}") from None


def load_graph(edge_path, feature_path, label_path) -> AttributedGraph:
    """Read a graph from the edge / feature / label text files.

    Edge file: two whitespace-separated node ids per line, ``#`` lines ignored.
    Feature file: one node per line, comma-separated reals.
    Label file: one 0/1 integer per line.
    """
    rows = []
    with open(feature_path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                raise GraphFormatError(f"{feature_path}:{lineno}: empty feature row")
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError:
                raise GraphFormatError(f"{feature_path}:{lineno}: bad real value") from None
            if len(rows[-1]) != len(rows[0]):
                raise GraphFormatError(
                    f"{feature_path}:{lineno}: expected {len(rows[0])} values, got {len(rows[-1])}"
                )
    n = len(rows)

    labels = []
    with open(label_path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                raise GraphFormatError(f"{label_path}:{lineno}: empty label row")
            value = _parse_int(line, label_path, lineno)
            if value not in (0, 1):
                raise GraphFormatError(f"{label_path}:{lineno}: label must be 0 or 1")
            labels.append(value)
    if len(labels) != n:
        raise GraphFormatError(f"feature rows ({n}) != label rows ({len(labels)})")

    edges = []
    seen = set()
    with open(edge_path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphFormatError(f"{edge_path}:{lineno}: expected two node ids")
            u, v = (_parse_int(p, edge_path, lineno) for p in parts)
            if u == v:
                raise GraphFormatError(f"{edge_path}:{lineno}: self-loop on node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(
                    f"{edge_path}:{lineno}: dangling endpoint in edge ({u}, {v}) with N={n}"
                )
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphFormatError(f"{edge_path}:{lineno}: duplicate edge {key}")
            seen.add(key)
            edges.append(key)

    features = np.array(rows, dtype=np.float64).reshape(n, -1 if n else 0)
    return AttributedGraph(np.array(edges, dtype=np.int64).reshape(-1, 2), features, labels)


def save_graph(graph: AttributedGraph, edge_path, feature_path, label_path) -> None:
    """Write ``graph`` in the canonical text format read by :func:`load_graph`."""
    with open(edge_path, "w") as fh:
        for u, v in graph.edges:
            fh.write(f"{u} {v}\n")
    with open(feature_path, "w") as fh:
        for row in graph.features:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    with open(label_path, "w") as fh:
        for y in graph.labels:
            fh.write(f"{int(y)}\n")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def make_split(graph: AttributedGraph, ratios=(0.4, 0.2, 0.4), seed: int = 0) -> NodeSplit:
    """Label-stratified random train/val/test split.

    Split sizes are rounded from ``ratios * N``; within each split the number
    of anomalies is rounded from the global anomaly ratio so that every split
    deviates from it by at most ``1 / |split|``.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError("ratios must be three positive fractions")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")

    n = graph.num_nodes
    anomalies = np.flatnonzero(graph.labels == 1)
    normals = np.flatnonzero(graph.labels == 0)
    rate = anomalies.size / n if n else 0.0

    n_train = _round_half_up(ratios[0] * n)
    n_val = _round_half_up(ratios[1] * n)
    n_test = n - n_train - n_val
    a_train = _round_half_up(n_train * rate)
    a_val = min(_round_half_up(n_val * rate), anomalies.size - a_train)
    a_test = anomalies.size - a_train - a_val
    if a_train < 1 or n_train - a_train < 1:
        raise ValueError("training split needs at least one anomaly and one normal node")
    if n_test < 0 or a_test < 0 or n_test - a_test < 0:
        raise ValueError("graph too small for the requested ratios")

    rng = np.random.default_rng(seed)
    anomalies = rng.permutation(anomalies)
    normals = rng.permutation(normals)
    na_train, na_val = n_train - a_train, n_val - a_val
    train = np.concatenate([anomalies[:a_train], normals[:na_train]])
    val = np.concatenate([anomalies[a_train:a_train + a_val], normals[na_train:na_train + na_val]])
    test = np.concatenate([anomalies[a_train + a_val:], normals[na_train + na_val:]])
    return NodeSplit(train, val, test, num_nodes=n)


def normalize_adjacency(graph: AttributedGraph) -> sp.csr_matrix:
    """Symmetric GCN operator ``D^-1/2 (A + I) D^-1/2`` in CSR layout.

    Column indices are sorted within each row, so row-wise products
    accumulate in ascending column order.
    """
    n = graph.num_nodes
    deg = graph.degrees().astype(np.float64) + 1.0
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    off = 1.0 / np.sqrt(deg[u] * deg[v])
    diag = np.arange(n)
    rows = np.concatenate([u, v, diag])
    cols = np.concatenate([v, u, diag])
    vals = np.concatenate([off, off, 1.0 / deg])
    adj = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    adj.sort_indices()
    return adj


def mean_aggregator(graph: AttributedGraph) -> sp.csr_matrix:
    """Row-normalized adjacency ``D^-1 A``; isolated nodes get an all-zero row."""
    a = graph.adjacency()
    deg = graph.degrees().astype(np.float64)
    scale = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    m = sp.diags(scale) @ a
    m = sp.csr_matrix(m)
    m.sort_indices()
    return m


def write_text_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and an atomic rename."""
    path = os.fspath(path)
    tmp = f"{path}.tmp-{os.getpid()}"
    try:
        with open(tmp, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)
