"""Command-line entry point.

Subcommands: train-teacher, run, compare, plot, grad-check. Exit codes:
0 success, 2 config or input error, 3 I/O error, 4 verification failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import (
    AkdError,
    CheckpointError,
    ConfigError,
    ContractError,
    DataError,
    NumericError,
    ParameterError,
    ParseError,
    ShapeError,
)
from .gradcheck import THRESHOLD, format_suite, run_gradient_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_VERIFY = 4

_INPUT_ERRORS = (ConfigError, ParameterError, ContractError, ShapeError, DataError, ParseError, NumericError)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="akd", description="Adaptive knowledge distillation at desk scale")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="path to a key=value config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the config output directory")

    p = sub.add_parser("train-teacher", help="train the teacher and persist its checkpoint")
    add_common(p)

    p = sub.add_parser("run", help="train one student variant, logging per-epoch metrics")
    add_common(p)

    p = sub.add_parser("compare", help="run every (method, seed) pair and emit the comparison report")
    add_common(p)
    p.add_argument("--jobs", type=int, default=1, help="concurrent (method, seed) runs")

    p = sub.add_parser("plot", help="render loss/accuracy/alpha SVG charts from metrics CSVs")
    p.add_argument("metrics", nargs="+", help="metrics CSV files")
    p.add_argument("--out", default=".", help="output directory for the SVG files")

    p = sub.add_parser("grad-check", help="run the finite-difference verification suite")
    add_common(p, config_required=False)

    return parser


def _load(args):
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    return cfg.with_overrides(**overrides) if overrides else cfg


def _cmd_train_teacher(args) -> int:
    from .config import validate_for_teacher
    from .harness import build_dataset, derive_streams, ensure_teacher, teacher_checkpoint_path
    from .models import accuracy

    cfg = _load(args)
    validate_for_teacher(cfg)
    streams = derive_streams(cfg.seed)
    dataset = build_dataset(cfg)
    model = ensure_teacher(cfg, dataset, streams)
    acc = accuracy(model, dataset.val_features, dataset.val_labels)
    print(f"teacher checkpoint: {teacher_checkpoint_path(cfg)}")
    print(f"teacher val accuracy: {acc:.4f}")
    return EXIT_OK


def _cmd_run(args) -> int:
    from .harness import run_experiment

    cfg = _load(args)
    result = run_experiment(cfg)
    print(f"metrics: {result.metrics_path}")
    print(f"student checkpoint: {result.student_checkpoint}")
    print(f"final val accuracy: {result.final_val_accuracy:.4f}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    from .harness import compare_methods

    cfg = _load(args)
    report = compare_methods(cfg, jobs=args.jobs)
    sys.stdout.write(report.render_text())
    print(f"report: {cfg.out}/report.txt and {cfg.out}/report.csv")
    return EXIT_OK


def _cmd_plot(args) -> int:
    from .plots import emit_plots

    paths = emit_plots(args.metrics, args.out)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return EXIT_OK


def _cmd_grad_check(args) -> int:
    kwargs = {}
    if args.config is not None:
        cfg = _load(args)
        kwargs = {"temperature": cfg.temperature, "k": cfg.k, "seed": cfg.seed}
    results = run_gradient_suite(**kwargs)
    print(format_suite(results))
    if not all(r.passed(THRESHOLD) for r in results):
        return EXIT_VERIFY
    return EXIT_OK


_COMMANDS = {
    "train-teacher": _cmd_train_teacher,
    "run": _cmd_run,
    "compare": _cmd_compare,
    "plot": _cmd_plot,
    "grad-check": _cmd_grad_check,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, IsADirectoryError, PermissionError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except AkdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
