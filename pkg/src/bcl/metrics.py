"""Score fusion and the two evaluation metrics (ROC-AUC, macro-F1)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata


@dataclass(frozen=True)
class FusedScore:
    alpha: float
    score_homo: np.ndarray
    score_hete: np.ndarray
    score_final: np.ndarray


def fuse_scores(alpha: float, homo, hete) -> FusedScore:
    """Convex combination ``alpha * homo + (1 - alpha) * hete``."""
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    homo = np.asarray(homo, dtype=np.float64)
    hete = np.asarray(hete, dtype=np.float64)
    if homo.shape != hete.shape:
        raise ValueError(f"score length mismatch: {homo.shape} vs {hete.shape}")
    final = alpha * homo + (1.0 - alpha) * hete
    return FusedScore(alpha, homo, hete, final)


def _check_binary(labels) -> np.ndarray:
    labels = np.asarray(labels).astype(np.int64).ravel()
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be binary")
    if labels.size == 0 or labels.min() == labels.max():
        raise ValueError("labels must contain both classes")
    return labels


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve as the Mann-Whitney statistic.

    Equals ``P(s_pos > s_neg) + 0.5 * P(s_pos == s_neg)`` over all
    positive/negative pairs, computed from average ranks in O(N log N).
    """
    labels = _check_binary(labels)
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    ranks = rankdata(scores, method="average")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def macro_f1(scores, labels, threshold: float = 0.5) -> float:
    """Unweighted mean of the per-class F1 scores.

    A node is predicted anomalous iff its score is strictly above
    ``threshold``. A class with no true positives gets F1 = 0.
    """
    labels = _check_binary(labels)
    pred = (np.asarray(scores, dtype=np.float64).ravel() > threshold).astype(np.int64)
    if pred.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    f1 = []
    for c in (0, 1):
        tp = int(np.sum((pred == c) & (labels == c)))
        fp = int(np.sum((pred == c) & (labels != c)))
        fn = int(np.sum((pred != c) & (labels == c)))
        f1.append(0.0 if tp == 0 else 2.0 * tp / (2.0 * tp + fp + fn))
    return (f1[0] + f1[1]) / 2.0
