"""Pacing functions and easy-to-hard training along a node ordering."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass

import numpy as np

from .detectors import DetectorModel, EpochRecord, TrainResult, fit
from .graph import AttributedGraph, NodeSplit, write_text_atomic
from .nn import AdamState


class PacingKind(str, enum.Enum):
    LINEAR = "linear"
    ROOT = "root"
    GEOMETRIC = "geometric"


@dataclass(frozen=True)
class CurriculumConfig:
    """Schedule for one training direction.

    ``t_max`` is the epoch at which the full training set becomes available;
    after it, training continues until validation AUC stalls for
    ``patience`` epochs or ``max_epochs`` is reached.
    """

    pacing: PacingKind = PacingKind.LINEAR
    lambda0: float = 0.5
    t_max: int = 50
    patience: int = 20
    max_epochs: int = 200

    def __post_init__(self):
        object.__setattr__(self, "pacing", PacingKind(self.pacing))
        if not 0.0 < self.lambda0 <= 1.0:
            raise ValueError(f"lambda0 must lie in (0, 1], got {self.lambda0}")
        if self.t_max < 1:
            raise ValueError("t_max must be >= 1")
        if self.patience < 0 or self.max_epochs < 0:
            raise ValueError("patience and max_epochs must be >= 0")


def pacing_value(kind, lambda0: float, t_max: int, t: int) -> float:
    """Fraction of the curriculum available at epoch ``t``.

    Starts at ``lambda0`` for ``t = 0`` and is exactly 1 for ``t >= t_max``.
    """
    kind = PacingKind(kind)
    if not 0.0 < lambda0 <= 1.0:
        raise ValueError(f"lambda0 must lie in (0, 1], got {lambda0}")
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    if t < 0:
        raise ValueError("t must be >= 0")
    if t >= t_max:
        return 1.0
    if t == 0:
        # 2 ** log2(l0) is not always bitwise l0
        return float(lambda0)
    frac = t / t_max
    if kind is PacingKind.LINEAR:
        value = lambda0 + (1.0 - lambda0) * frac
    elif kind is PacingKind.ROOT:
        value = math.sqrt(lambda0 ** 2 + (1.0 - lambda0 ** 2) * frac)
    else:
        log_l0 = math.log2(lambda0)
        value = 2.0 ** (log_l0 - log_l0 * frac)
    return min(1.0, value)


def curriculum_end(kind, lambda0: float, t_max: int) -> int:
    """First epoch at which the pacing value reaches 1."""
    for t in range(t_max + 1):
        if pacing_value(kind, lambda0, t_max, t) >= 1.0:
            return t
    return t_max


def _train_order(ordering, train) -> np.ndarray:
    ordering = np.asarray(ordering, dtype=np.int64)
    train = np.asarray(train, dtype=np.int64)
    if train.size == 0:
        raise ValueError("empty training set")
    return ordering[np.isin(ordering, train)]


def subset_size(lambda_t: float, num_train: int) -> int:
    return min(max(1, math.ceil(lambda_t * num_train)), num_train)


def select_subset(ordering, train, lambda_t: float) -> np.ndarray:
    """The ``ceil(lambda_t * |train|)`` earliest training nodes along ``ordering``.

    Nodes are returned in curriculum order.
    """
    if not 0.0 < lambda_t <= 1.0:
        raise ValueError(f"lambda_t must lie in (0, 1], got {lambda_t}")
    order = _train_order(ordering, train)
    return order[: subset_size(lambda_t, np.asarray(train).size)]


def train_with_curriculum(
    model: DetectorModel,
    graph: AttributedGraph,
    adj,
    split: NodeSplit,
    ordering,
    config: CurriculumConfig,
    adam: AdamState | None = None,
) -> TrainResult:
    """Train ``model`` on a growing prefix of ``ordering`` restricted to the train split."""
    ordering = np.asarray(ordering, dtype=np.int64)
    if ordering.size != graph.num_nodes or np.unique(ordering).size != ordering.size:
        raise ValueError("ordering must be a permutation of all nodes")
    order = _train_order(ordering, split.train)
    n_train = split.train.size

    def subset_at(t):
        lam = pacing_value(config.pacing, config.lambda0, config.t_max, t)
        return lam, order[: subset_size(lam, n_train)]

    end = curriculum_end(config.pacing, config.lambda0, config.t_max)
    return fit(model, graph, adj, split, subset_at, end, config.max_epochs, config.patience, adam)


def log_csv(log: list[EpochRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["epoch", "lambda_t", "subset_size", "loss", "val_auc"])
    for r in log:
        writer.writerow([r.epoch, repr(r.lambda_t), r.subset_size, repr(r.loss), repr(r.val_auc)])
    return buf.getvalue()


def write_log_csv(log: list[EpochRecord], path) -> None:
    write_text_atomic(path, log_csv(log))
