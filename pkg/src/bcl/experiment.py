"""End-to-end runs: pretrain, rank, train both directions, fuse, evaluate.

A run compares four variants on shared splits and initial weights:
``baseline`` (no curriculum), ``homo`` and ``hete`` (one direction each)
and ``bcl`` (the fused score).
"""

from __future__ import annotations

import contextlib
import csv
import dataclasses
import io
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .curriculum import CurriculumConfig, PacingKind, log_csv, train_with_curriculum
from .detectors import (
    DetectorKind,
    anomaly_score,
    detector_forward,
    detector_init,
    train_plain,
)
from .gae import DifficultyRanking, bds_csv, compute_bds, gae_embed, gae_train, rank_nodes
from .graph import AttributedGraph, load_graph, make_split, normalize_adjacency, write_text_atomic
from .metrics import fuse_scores, macro_f1, roc_auc
from .nn import AdamState
from .synthetic import SyntheticSpec, generate_synthetic

log = logging.getLogger(__name__)

VARIANTS = ("baseline", "homo", "hete", "bcl")
REPORT_SCHEMA = "bcl-report/1"


class ConfigError(ValueError):
    pass


class ExperimentError(RuntimeError):
    def __init__(self, stage: str, seed: int, cause: Exception):
        super().__init__(f"seed {seed}, stage {stage!r}: {cause}")
        self.stage = stage
        self.seed = seed


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob of a run. Keys of the config file are the field names."""

    dataset: str = "synthetic"
    edge_path: str = ""
    feature_path: str = ""
    label_path: str = ""

    syn_num_nodes: int = 500
    syn_num_blocks: int = 4
    syn_p_intra: float = 0.05
    syn_p_inter: float = 0.005
    syn_feature_dim: int = 16
    syn_anomaly_rate: float = 0.05
    syn_anomaly_kind: str = "contextual"
    syn_noise: float = 1.0
    syn_center_scale: float = 1.0
    syn_anomaly_shift: float = 6.0
    syn_clique_size: int = 5

    detector: str = "gcn"
    hidden: int = 64
    pacing: str = "linear"
    lambda0_homo: float = 0.3
    t_homo: int = 180
    lambda0_hete: float = 0.7
    t_hete: int = 60
    alpha: float = 0.2
    patience: int = 20
    max_epochs: int = 200

    seeds: tuple = (0,)
    split: tuple = (0.4, 0.2, 0.4)
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    gae_hidden: int = 64
    gae_embed: int = 32
    gae_epochs: int = 300
    gae_patience: int = 20
    bds_norm: str = "l1"
    threshold: float = 0.5

    def __post_init__(self):
        if self.dataset not in ("synthetic", "files"):
            raise ConfigError("dataset must be 'synthetic' or 'files'")
        if self.dataset == "files" and not (self.edge_path and self.feature_path and self.label_path):
            raise ConfigError("dataset=files needs edge_path, feature_path and label_path")
        try:
            DetectorKind(self.detector)
            PacingKind(self.pacing)
            self.curriculum("homo")
            self.curriculum("hete")
            if self.dataset == "synthetic":
                self.synthetic_spec()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]")
        if len(self.seeds) < 1:
            raise ConfigError("at least one seed is required")
        if len(self.split) != 3:
            raise ConfigError("split needs three fractions")
        if self.hidden < 1 or self.gae_hidden < 1 or self.gae_embed < 1 or self.gae_epochs < 1:
            raise ConfigError("layer sizes and gae_epochs must be >= 1")
        if self.bds_norm not in ("l1", "l2"):
            raise ConfigError("bds_norm must be 'l1' or 'l2'")

    def curriculum(self, direction: str) -> CurriculumConfig:
        lam, t = (
            (self.lambda0_homo, self.t_homo) if direction == "homo" else (self.lambda0_hete, self.t_hete)
        )
        return CurriculumConfig(self.pacing, lam, t, self.patience, self.max_epochs)

    def synthetic_spec(self) -> SyntheticSpec:
        return SyntheticSpec(
            **{f.name[4:]: getattr(self, f.name) for f in dataclasses.fields(self) if f.name.startswith("syn_")}
        )

    def adam(self) -> AdamState:
        return AdamState(lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v)
                for f in dataclasses.fields(self)}

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            default = known[key].default
            try:
                if not isinstance(raw, str):
                    value = tuple(raw) if isinstance(default, tuple) else raw
                elif key == "seeds":
                    value = _ints(raw)
                elif isinstance(default, tuple):
                    value = _floats(raw)
                elif isinstance(default, bool):
                    value = raw.strip().lower() in ("1", "true", "yes")
                else:
                    value = type(default)(raw.strip())
            except ValueError:
                raise ConfigError(f"bad value for {key!r}: {raw!r}") from None
            kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        values = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            values[key] = value
        return cls.from_mapping(values)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_text(fh.read())

    def to_text(self) -> str:
        lines = []
        for key, value in self.to_dict().items():
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


@dataclass
class SeedRun:
    seed: int
    metrics: dict
    logs: dict
    best_epochs: dict
    ranking: DifficultyRanking
    test_scores: dict = field(repr=False, default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "metrics": self.metrics,
            "best_epoch": self.best_epochs,
            "epochs_run": {k: len(v) for k, v in self.logs.items()},
            "logs": {k: f"curriculum_s{self.seed}_{k}.csv" for k in self.logs},
            "bds_file": f"bds_s{self.seed}.csv",
        }


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    runs: list[SeedRun]
    timings: dict | None = None

    def summary(self) -> dict:
        out = {}
        for v in VARIANTS:
            auc = [r.metrics[v]["auc"] for r in self.runs]
            f1 = [r.metrics[v]["macro_f1"] for r in self.runs]
            out[v] = {"auc_mean": float(np.mean(auc)), "auc_std": float(np.std(auc)),
                      "macro_f1_mean": float(np.mean(f1)), "macro_f1_std": float(np.std(f1))}
        return out

    def to_dict(self) -> dict:
        d = {
            "schema": REPORT_SCHEMA,
            "config": self.config.to_dict(),
            "variants": list(VARIANTS),
            "runs": [r.to_dict() for r in self.runs],
            "summary": self.summary(),
        }
        if self.timings is not None:
            d["timings"] = self.timings
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, out_dir) -> str:
        """Write the side CSVs, then ``report.json`` atomically; returns the report path."""
        os.makedirs(out_dir, exist_ok=True)
        for run in self.runs:
            for variant, records in run.logs.items():
                write_text_atomic(os.path.join(out_dir, f"curriculum_s{run.seed}_{variant}.csv"), log_csv(records))
            write_text_atomic(os.path.join(out_dir, f"bds_s{run.seed}.csv"), bds_csv(run.ranking))
        path = os.path.join(out_dir, "report.json")
        write_text_atomic(path, self.to_json())
        return path


def _seed_streams(seed: int) -> dict:
    names = ("split", "gae", "detector")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {n: int(c.generate_state(1)[0]) for n, c in zip(names, children)}


def load_dataset(config: ExperimentConfig, seed: int) -> AttributedGraph:
    if config.dataset == "files":
        return load_graph(config.edge_path, config.feature_path, config.label_path)
    return generate_synthetic(config.synthetic_spec(), seed)


@contextlib.contextmanager
def _stage(name: str, seed: int):
    try:
        yield
    except ExperimentError:
        raise
    except Exception as exc:
        raise ExperimentError(name, seed, exc) from exc


def _run_seed(config: ExperimentConfig, seed: int, graph, parallel: bool, timings: dict) -> SeedRun:
    streams = _seed_streams(seed)
    tick = time.perf_counter()
    with _stage("data", seed):
        if graph is None:
            graph = load_dataset(config, seed)
        adj = normalize_adjacency(graph)
    with _stage("split", seed):
        split = make_split(graph, config.split, streams["split"])
    with _stage("gae", seed):
        gae = gae_train(graph, adj, config.gae_hidden, config.gae_embed, config.gae_epochs,
                        streams["gae"], lr=config.lr, patience=config.gae_patience)
    with _stage("bds", seed):
        ranking = rank_nodes(compute_bds(gae_embed(gae, graph, adj), config.bds_norm))
    t_gae = time.perf_counter()

    def new_detector():
        return detector_init(config.detector, graph.num_features, config.hidden, streams["detector"])

    def train(variant):
        model = new_detector()
        with _stage(variant, seed):
            if variant == "baseline":
                result = train_plain(model, graph, adj, split, config.max_epochs, config.patience, config.adam())
            else:
                ordering = ranking.q_homo if variant == "homo" else ranking.q_hete
                result = train_with_curriculum(model, graph, adj, split, ordering,
                                               config.curriculum(variant), config.adam())
            return result, anomaly_score(detector_forward(model, graph, adj))

    if parallel:
        with ThreadPoolExecutor(max_workers=3) as pool:
            results = dict(zip(("baseline", "homo", "hete"), pool.map(train, ("baseline", "homo", "hete"))))
    else:
        results = {v: train(v) for v in ("baseline", "homo", "hete")}
    t_train = time.perf_counter()

    with _stage("fusion", seed):
        scores = {v: results[v][1] for v in ("baseline", "homo", "hete")}
        scores["bcl"] = fuse_scores(config.alpha, scores["homo"], scores["hete"]).score_final
        y = graph.labels[split.test]
        metrics = {
            v: {"auc": roc_auc(scores[v][split.test], y),
                "macro_f1": macro_f1(scores[v][split.test], y, config.threshold)}
            for v in VARIANTS
        }
    timings[str(seed)] = {"pretrain_s": t_gae - tick, "train_s": t_train - t_gae,
                          "total_s": time.perf_counter() - tick}
    log.info("seed %d: %s", seed, {v: round(m["auc"], 4) for v, m in metrics.items()})
    return SeedRun(
        seed=seed,
        metrics=metrics,
        logs={v: results[v][0].log for v in ("baseline", "homo", "hete")},
        best_epochs={v: results[v][0].best_epoch for v in ("baseline", "homo", "hete")},
        ranking=ranking,
        test_scores={v: s[split.test] for v, s in scores.items()},
    )


def run_bcl(config: ExperimentConfig, out_dir=None, deterministic: bool = False,
            graph: AttributedGraph | None = None) -> ExperimentReport:
    """Run every seed of ``config`` and optionally write the report to ``out_dir``.

    In deterministic mode BLAS is limited to one thread, the three trainings
    of a seed run sequentially, and wall-clock timings are left out of the
    report so that identical configs give byte-identical JSON.
    ``graph`` overrides the dataset named in the config.
    """
    limits = threadpool_limits(1) if deterministic else contextlib.nullcontext()
    timings: dict = {}
    with limits:
        runs = [_run_seed(config, seed, graph, not deterministic, timings) for seed in config.seeds]
    report = ExperimentReport(config, runs, None if deterministic else timings)
    if out_dir is not None:
        report.write(out_dir)
    return report


SWEEP_AXES = ("alpha", "lambda0", "T", "pacing")


def _sweep_config(config: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "pacing":
        try:
            return config.replace(pacing=PacingKind(value).value)
        except ValueError:
            raise ConfigError(f"illegal pacing {value!r}") from None
    value = float(value)
    if not 0.1 - 1e-9 <= value <= 0.9 + 1e-9:
        raise ConfigError(f"{axis} value {value} outside [0.1, 0.9]")
    if axis == "alpha":
        return config.replace(alpha=value)
    if axis == "lambda0":
        return config.replace(lambda0_homo=value, lambda0_hete=value)
    # T is given as a fraction of the baseline epoch budget
    t = max(1, round(value * config.max_epochs))
    return config.replace(t_homo=t, t_hete=t)


def sweep(config: ExperimentConfig, axis: str, values, out_dir=None, deterministic: bool = False):
    """One report per axis value, all sharing the seeds of ``config``.

    Returns ``(reports, table_csv)``; ``table_csv`` has one row per value with
    the mean test AUC and macro-F1 of every variant.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"axis must be one of {SWEEP_AXES}")
    values = list(values)
    if not values:
        raise ConfigError("empty sweep")
    configs = [_sweep_config(config, axis, v) for v in values]
    reports = []
    for value, cfg in zip(values, configs):
        sub = None if out_dir is None else os.path.join(out_dir, f"{axis}_{value}")
        reports.append(run_bcl(cfg, sub, deterministic))
    table = sweep_table(axis, values, reports)
    if out_dir is not None:
        write_text_atomic(os.path.join(out_dir, f"sweep_{axis}.csv"), table)
    return reports, table


def sweep_table(axis: str, values, reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([axis] + [f"{v}_{m}" for v in VARIANTS for m in ("auc", "macro_f1")])
    for value, report in zip(values, reports):
        s = report.summary()
        writer.writerow([value] + [repr(s[v][k]) for v in VARIANTS for k in ("auc_mean", "macro_f1_mean")])
    return buf.getvalue()


def evaluate_scores(scores, labels, threshold: float = 0.5) -> dict:
    return {"auc": roc_auc(scores, labels), "macro_f1": macro_f1(scores, labels, threshold)}


def read_scores(path) -> np.ndarray:
    with open(path) as fh:
        values = [float(line) for line in fh if line.strip()]
    arr = np.array(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{path}: non-finite score")
    return arr


def read_labels(path) -> np.ndarray:
    with open(path) as fh:
        return np.array([int(line) for line in fh if line.strip()], dtype=np.int64)

