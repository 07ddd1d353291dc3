"""Bi-directional curriculum learning for graph anomaly detection."""

from .curriculum import CurriculumConfig, PacingKind, pacing_value, select_subset, train_with_curriculum
from .detectors import DetectorKind, DetectorModel, anomaly_score, detector_forward, detector_init, train_plain
from .experiment import ExperimentConfig, ExperimentReport, run_bcl, sweep
from .gae import DifficultyRanking, compute_bds, gae_embed, gae_train, rank_nodes
from .graph import AttributedGraph, NodeSplit, load_graph, make_split, normalize_adjacency, save_graph
from .metrics import FusedScore, fuse_scores, macro_f1, roc_auc
from .synthetic import SyntheticSpec, generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "AttributedGraph", "CurriculumConfig", "DetectorKind", "DetectorModel", "DifficultyRanking",
    "ExperimentConfig", "ExperimentReport", "FusedScore", "NodeSplit", "PacingKind", "SyntheticSpec",
    "anomaly_score", "compute_bds", "detector_forward", "detector_init", "fuse_scores", "gae_embed",
    "gae_train", "generate_synthetic", "load_graph", "macro_f1", "make_split", "normalize_adjacency",
    "pacing_value", "rank_nodes", "roc_auc", "run_bcl", "save_graph", "select_subset", "sweep",
    "train_plain", "train_with_curriculum",
]
