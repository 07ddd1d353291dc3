"""Stochastic-block-model graphs with injected contextual / structural anomalies."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import AttributedGraph

ANOMALY_KINDS = ("contextual", "structural", "mixed")


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator parameters.

    ``noise`` is the per-dimension feature standard deviation around a block
    center; block centers are drawn with standard deviation ``center_scale``.
    Contextual anomalies are drawn around their block center shifted by
    ``anomaly_shift * noise`` in a random direction shared by all anomalies. Structural anomalies are
    joined into cliques of ``clique_size`` nodes.
    """

    num_nodes: int = 500
    num_blocks: int = 4
    p_intra: float = 0.05
    p_inter: float = 0.005
    feature_dim: int = 16
    anomaly_rate: float = 0.05
    anomaly_kind: str = "contextual"
    noise: float = 1.0
    center_scale: float = 1.0
    anomaly_shift: float = 6.0
    clique_size: int = 5

    def __post_init__(self):
        if self.num_nodes < 2 or self.num_blocks < 1 or self.num_blocks > self.num_nodes:
            raise ValueError("need num_nodes >= 2 and 1 <= num_blocks <= num_nodes")
        for name in ("p_intra", "p_inter"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be >= 1")
        if not 0.0 < self.anomaly_rate < 0.5:
            raise ValueError("anomaly_rate must lie in (0, 0.5)")
        if self.anomaly_kind not in ANOMALY_KINDS:
            raise ValueError(f"anomaly_kind must be one of {ANOMALY_KINDS}")
        if self.noise <= 0 or self.center_scale < 0:
            raise ValueError("noise must be > 0 and center_scale >= 0")
        if self.anomaly_shift < 5.0:
            raise ValueError("anomaly_shift must be >= 5 (in units of noise)")
        if self.clique_size < 2:
            raise ValueError("clique_size must be >= 2")

    @property
    def num_anomalies(self) -> int:
        # guard against 0.1 * 300 = 30.000000000000004
        return math.ceil(self.anomaly_rate * self.num_nodes - 1e-9)


@dataclass(frozen=True)
class SyntheticGraph:
    graph: AttributedGraph
    blocks: np.ndarray
    centers: np.ndarray


def _sbm_edges(rng, blocks_members, p_intra, p_inter):
    chunks = []
    k = len(blocks_members)
    for a in range(k):
        ma = blocks_members[a]
        if ma.size > 1 and p_intra > 0:
            iu, ju = np.triu_indices(ma.size, 1)
            count = rng.binomial(iu.size, p_intra)
            pick = rng.choice(iu.size, size=count, replace=False)
            chunks.append(np.stack([ma[iu[pick]], ma[ju[pick]]], axis=1))
        for b in range(a + 1, k):
            mb = blocks_members[b]
            if p_inter <= 0:
                continue
            total = ma.size * mb.size
            count = rng.binomial(total, p_inter)
            pick = rng.choice(total, size=count, replace=False)
            chunks.append(np.stack([ma[pick // mb.size], mb[pick % mb.size]], axis=1))
    if not chunks:
        return np.zeros((0, 2), dtype=np.int64)
    return np.concatenate(chunks).astype(np.int64)


def generate_synthetic_with_blocks(spec: SyntheticSpec, seed: int = 0) -> SyntheticGraph:
    """Like :func:`generate_synthetic` but also returns block ids and centers."""
    rng = np.random.default_rng(seed)
    n, k, f = spec.num_nodes, spec.num_blocks, spec.feature_dim
    blocks = (np.arange(n) * k) // n
    members = [np.flatnonzero(blocks == b) for b in range(k)]
    edges = _sbm_edges(rng, members, spec.p_intra, spec.p_inter)

    centers = rng.normal(0.0, spec.center_scale, size=(k, f))
    features = centers[blocks] + rng.normal(0.0, spec.noise, size=(n, f))

    anomalies = np.sort(rng.choice(n, size=spec.num_anomalies, replace=False))
    labels = np.zeros(n, dtype=np.int64)
    labels[anomalies] = 1
    if spec.anomaly_kind == "contextual":
        contextual, structural = anomalies, anomalies[:0]
    elif spec.anomaly_kind == "structural":
        contextual, structural = anomalies[:0], anomalies
    else:
        shuffled = rng.permutation(anomalies)
        half = (shuffled.size + 1) // 2
        contextual, structural = np.sort(shuffled[:half]), np.sort(shuffled[half:])

    if contextual.size:
        direction = rng.normal(size=(1, f))
        direction /= np.linalg.norm(direction)
        far_center = centers[blocks[contextual]] + spec.anomaly_shift * spec.noise * direction
        features[contextual] = far_center + rng.normal(0.0, spec.noise, size=(contextual.size, f))

    if structural.size:
        order = rng.permutation(structural)
        extra = []
        for start in range(0, order.size, spec.clique_size):
            group = order[start:start + spec.clique_size]
            iu, ju = np.triu_indices(group.size, 1)
            extra.append(np.stack([group[iu], group[ju]], axis=1))
        edges = np.concatenate([edges] + extra) if extra else edges

    if edges.size:
        edges = np.unique(np.sort(edges, axis=1), axis=0)
    graph = AttributedGraph(edges, features, labels)
    return SyntheticGraph(graph, blocks, centers)


def generate_synthetic(spec: SyntheticSpec, seed: int = 0) -> AttributedGraph:
    """Sample an anomaly-labelled SBM graph; deterministic for a given seed."""
    return generate_synthetic_with_blocks(spec, seed).graph
