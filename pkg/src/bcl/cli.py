"""Command line entry point: ``bcl run|sweep|gen|eval``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .experiment import (
    SWEEP_AXES,
    ConfigError,
    ExperimentConfig,
    ExperimentError,
    evaluate_scores,
    read_labels,
    read_scores,
    run_bcl,
    sweep,
)
from .graph import GraphFormatError, save_graph
from .synthetic import generate_synthetic


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["seeds"] = (args.seed,)
    if getattr(args, "threshold", None) is not None:
        changes["threshold"] = args.threshold
    return config.replace(**changes) if changes else config


def _cmd_run(args) -> int:
    config = _load_config(args)
    report = run_bcl(config, args.out, deterministic=args.deterministic)
    if args.out is None:
        sys.stdout.write(report.to_json())
    else:
        print(os.path.join(args.out, "report.json"))
    return 0


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    values = [v for v in args.values.split(",") if v.strip()]
    _, table = sweep(config, args.axis, values, args.out, deterministic=args.deterministic)
    sys.stdout.write(table)
    return 0


def _cmd_gen(args) -> int:
    config = _load_config(args)
    seed = config.seeds[0]
    graph = generate_synthetic(config.synthetic_spec(), seed)
    os.makedirs(args.out, exist_ok=True)
    save_graph(graph, *(os.path.join(args.out, n) for n in ("edges.txt", "features.txt", "labels.txt")))
    print(f"N={graph.num_nodes} m={graph.num_edges} f={graph.num_features} "
          f"anomalies={int(graph.labels.sum())} -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    scores = read_scores(args.scores)
    labels = read_labels(args.labels)
    if scores.size != labels.size:
        raise ValueError(f"{scores.size} scores but {labels.size} labels")
    print(json.dumps(evaluate_scores(scores, labels, args.threshold), sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bcl", description="Bi-directional curriculum learning for graph anomaly detection")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=False):
        p.add_argument("--config", help="flat 'key = value' config file")
        p.add_argument("--seed", type=int, help="run this single seed instead of the config's seeds")
        p.add_argument("--out", required=out_required, help="output directory")

    p = sub.add_parser("run", help="run one config")
    common(p)
    p.add_argument("--threshold", type=float, help="macro-F1 decision threshold")
    p.add_argument("--deterministic", action="store_true", help="single-threaded kernels, no timings in the report")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="sweep one hyperparameter")
    common(p)
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.add_argument("--threshold", type=float)
    p.add_argument("--deterministic", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("gen", help="write a synthetic dataset as edge/feature/label files")
    common(p, out_required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("eval", help="AUC and macro-F1 of a scores file")
    p.add_argument("scores", help="one score per line")
    p.add_argument("labels", help="one 0/1 label per line")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=_cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, GraphFormatError, ExperimentError, ValueError, OSError) as exc:
        print(f"bcl: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
