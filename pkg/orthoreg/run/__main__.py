"""
orthoreg - orthogonality regularization and dimensional-collapse diagnostics

Main entry point for all orthoreg commands.

Exit codes: 0 success, 1 property check failed, 2 input error, 3 training diverged.
"""

import argparse
import csv
import json
import logging
import re
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from cogents_core.utils import get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_DIVERGED = 3
# 128 + SIGINT, the shell convention for Ctrl-C
EXIT_INTERRUPTED = 130

COMPARE_COLUMNS = (
    "name",
    "method",
    "regularizer",
    "final_repr_effective_rank",
    "deepest_weight_effective_rank",
    "probe_top1",
    "final_combined",
)
CURVE_COLUMNS = ("run", "epoch", "loss_ssl", "loss_or", "combined")


def _add_verbose(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="Enable verbose logging",
    )


def create_train_parser(subparsers):
    """Create argument parser for the train command."""
    parser = subparsers.add_parser(
        "train",
        help="Train a joint-embedding model on synthetic data",
        description="Train BYOL / InfoNCE / VICReg with an optional orthogonality or whitening regularizer.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        allow_abbrev=False,
        epilog="""
Any configuration key can be overridden with --<key> <value>:

Examples:
  # Run with a configuration file
  orthoreg train --config configs/byol_so.cfg --out runs/byol_so

  # Override single keys
  orthoreg train --config configs/byol_so.cfg --out runs/gamma0 --regularizer.gamma 0
  orthoreg train --out runs/infonce --method infonce --regularizer.kind srip --seed 3
        """,
    )
    parser.add_argument("-c", "--config", type=str, help="Configuration file path (key = value lines)")
    parser.add_argument("-o", "--out", type=Path, required=True, help="Output directory for the run")
    _add_verbose(parser)
    return parser


def create_analyze_parser(subparsers):
    """Create argument parser for the analyze command."""
    parser = subparsers.add_parser(
        "analyze",
        help="Eigenspectra and filter correlations of a checkpoint",
        description="Build a collapse report for a checkpoint bundle and optional feature dumps.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        allow_abbrev=False,
        epilog="""
Examples:
  orthoreg analyze --bundle runs/byol_so/checkpoint --out analysis
  orthoreg analyze --bundle ckpt --features feats/block0.matx feats/repr.matx --out analysis --format csv
        """,
    )
    parser.add_argument("-b", "--bundle", type=Path, required=True, help="Bundle directory (or its manifest.json)")
    parser.add_argument(
        "-f", "--features", type=Path, nargs="*", default=[], help="Feature MATX files; stage name = file stem"
    )
    parser.add_argument("-o", "--out", type=Path, required=True, help="Output directory")
    parser.add_argument("--format", choices=["csv", "json"], default="json", help="Report format (default: json)")
    parser.add_argument(
        "--weight-axis",
        choices=["rows", "cols"],
        default="rows",
        help="Axis of each weight matrix treated as samples (default: rows)",
    )
    _add_verbose(parser)
    return parser


def create_check_parser(subparsers):
    """Create argument parser for the check command."""
    parser = subparsers.add_parser(
        "check",
        help="Run the executable property suites",
        description="Orthogonal-layer properties and finite-difference gradient checks.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        allow_abbrev=False,
        epilog="""
Examples:
  orthoreg check
  orthoreg check --suite gradients --seed 7
        """,
    )
    parser.add_argument("--suite", choices=["prop1", "gradients", "all"], default="all", help="Suite to run")
    parser.add_argument("--seed", type=int, default=None, help="Seed (default: $ORTHO_SEED or 0)")
    parser.add_argument("--quick", action="store_true", help="Fewer sampled instances")
    parser.add_argument("--fault", action="store_true", help=argparse.SUPPRESS)
    _add_verbose(parser)
    return parser


def create_compare_parser(subparsers):
    """Create argument parser for the compare command."""
    parser = subparsers.add_parser(
        "compare",
        help="Merge the results of several training runs",
        description="Final ranks, probe accuracy and loss curves of several runs side by side.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        allow_abbrev=False,
        epilog="""
Examples:
  orthoreg compare --runs runs/none runs/so runs/whiten --out comparison
        """,
    )
    parser.add_argument("-r", "--runs", type=Path, nargs="+", required=True, help="Run directories")
    parser.add_argument("-o", "--out", type=Path, required=True, help="Output directory")
    _add_verbose(parser)
    return parser


def parse_overrides(tokens: Sequence[str]) -> Dict[str, Any]:
    """
    Turn ``--key value`` / ``--key=value`` tokens into ``{key: parsed value}``.

    Raises:
        ConfigError: A token is not a flag or a flag has no value
    """
    from orthoreg.config_loader import ConfigError, parse_value

    overrides: Dict[str, Any] = {}
    index = 0
    while index < len(tokens):
        token = tokens[index]
        if not token.startswith("--") or len(token) == 2:
            raise ConfigError(f"unexpected argument {token!r}")
        key = token[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            if index + 1 >= len(tokens) or tokens[index + 1].startswith("--"):
                raise ConfigError("missing value", key)
            index += 1
            value = tokens[index]
        if not value.strip():
            raise ConfigError("missing value", key)
        overrides[key] = parse_value(value)
        index += 1
    return overrides


def _input_error(message: str) -> int:
    logger.error(message)
    print(f"error: {message}", file=sys.stderr)
    return EXIT_INPUT_ERROR


def run_train(args, overrides: Dict[str, Any]) -> int:
    """Run the train command."""
    from orthoreg.config_loader import ConfigError, dump_resolved_config, load_train_config
    from orthoreg.constants import (
        BUNDLE_DIR,
        REPORT_CSV_FILE,
        REPORT_JSON_FILE,
        RESOLVED_CONFIG_FILE,
        TRAIN_LOG_FILE,
    )
    from orthoreg.harness import Trainer, TrainingDivergedError
    from orthoreg.tensor import InsufficientSamplesError
    from orthoreg.storage import export_report, save_bundle

    try:
        cfg = load_train_config(args.config, overrides)
    except ConfigError as e:
        return _input_error(f"invalid configuration: {e}")

    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / RESOLVED_CONFIG_FILE).write_text(dump_resolved_config(cfg), encoding="utf-8")

    trainer = Trainer(cfg)
    try:
        log = trainer.run()
    except InsufficientSamplesError as e:
        return _input_error(f"configuration leaves too few samples: {e}")
    except TrainingDivergedError as e:
        (out / TRAIN_LOG_FILE).write_text(e.log.model_dump_json(indent=2) + "\n", encoding="utf-8")
        logger.error(f"{e}; log up to the last finite step written to {out / TRAIN_LOG_FILE}")
        return EXIT_DIVERGED
    except KeyboardInterrupt:
        logger.warning("Training interrupted by user; no outputs written beyond the resolved config")
        return EXIT_INTERRUPTED

    (out / TRAIN_LOG_FILE).write_text(log.model_dump_json(indent=2) + "\n", encoding="utf-8")
    save_bundle(trainer.state.encoder.layer_specs(), out / BUNDLE_DIR)
    export_report(log.report, "json", out / REPORT_JSON_FILE)
    export_report(log.report, "csv", out / REPORT_CSV_FILE)
    logger.info(f"Run written to {out}")
    return EXIT_OK


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", name)


def run_analyze(args) -> int:
    """Run the analyze command."""
    from orthoreg.spectra import SpectraConfig, collapse_report, correlation_matrix
    from orthoreg.storage import ManifestError, MatxError, export_matrix_csv, export_report, load_bundle, read_matx

    try:
        layers = load_bundle(args.bundle)
        features = [(path.stem, read_matx(path)) for path in args.features]
    except (MatxError, ManifestError) as e:
        return _input_error(f"cannot read {e.path}: {e}")
    except OSError as e:
        return _input_error(str(e))

    report = collapse_report(layers, features, SpectraConfig(weight_axis=args.weight_axis))
    out: Path = args.out
    export_report(report, args.format, out / f"collapse_report.{args.format}")
    for layer in layers:
        if not layer.or_eligible:
            continue
        try:
            corr = correlation_matrix(layer.weight, layer.name)
        except ValueError as e:
            logger.warning(f"No correlation matrix for {layer.name}: {e}")
            continue
        export_matrix_csv(corr, out / f"correlation_{_safe_name(layer.name)}.csv")

    for summary in report.stages:
        rank = "n/a" if summary.effective_rank is None else f"{summary.effective_rank:.4f}"
        print(f"{summary.group:<8} {summary.stage:<32} dim={summary.spectrum.dim:<4} erank={rank}")
    return EXIT_OK


def run_check(args) -> int:
    """Run the check command."""
    from orthoreg.checks import run_checks
    from orthoreg.config_loader import get_env
    from orthoreg.constants import DEFAULT_SEED, SEED_ENV_VAR

    seed = args.seed
    if seed is None:
        env_seed = get_env(SEED_ENV_VAR)
        try:
            seed = int(env_seed) if env_seed is not None else DEFAULT_SEED
        except ValueError:
            return _input_error(f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}")

    summary = run_checks(args.suite, seed=seed, fault=args.fault, quick=args.quick)
    print(summary.render_table())
    if not summary.passed:
        print(summary.render_failures())
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _compare_row(name: str, log) -> Dict[str, Any]:
    last = log.final()
    deepest = None
    if log.report is not None and log.report.weights():
        deepest = log.report.weights()[-1].effective_rank
    return {
        "name": name,
        "method": log.method,
        "regularizer": log.regularizer,
        "final_repr_effective_rank": last.effective_rank if last else None,
        "deepest_weight_effective_rank": deepest,
        "probe_top1": log.probe.top1 if log.probe else None,
        "final_combined": last.combined if last else None,
    }


def _csv_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, columns: Sequence[str], rows: List[Dict[str, Any]]) -> None:
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_csv_cell(row[column]) for column in columns])


def run_compare(args) -> int:
    """Run the compare command."""
    from pydantic import ValidationError

    from orthoreg.constants import TRAIN_LOG_FILE
    from orthoreg.harness import TrainLog

    if len(args.runs) < 2:
        return _input_error("compare needs at least 2 run directories")

    rows: List[Dict[str, Any]] = []
    curves: List[Dict[str, Any]] = []
    for run_dir in args.runs:
        log_path = run_dir / TRAIN_LOG_FILE
        if not log_path.exists():
            return _input_error(f"missing training log: {log_path}")
        try:
            log = TrainLog.model_validate_json(log_path.read_text(encoding="utf-8"))
        except (ValidationError, ValueError) as e:
            return _input_error(f"malformed training log {log_path}: {e}")
        name = run_dir.name or str(run_dir)
        rows.append(_compare_row(name, log))
        for record in log.epochs:
            curves.append(
                {
                    "run": name,
                    "epoch": record.epoch,
                    "loss_ssl": record.loss_ssl,
                    "loss_or": record.loss_or,
                    "combined": record.combined,
                }
            )

    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "compare.json").write_text(json.dumps({"runs": rows, "curves": curves}, indent=2) + "\n", encoding="utf-8")
    _write_csv(out / "compare.csv", COMPARE_COLUMNS, rows)
    _write_csv(out / "curves.csv", CURVE_COLUMNS, curves)

    for row in rows:
        print("  ".join(f"{column}={_csv_cell(row[column]) or 'n/a'}" for column in COMPARE_COLUMNS))
    logger.info(f"Comparison of {len(rows)} runs written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orthoreg",
        description="orthoreg - orthogonality regularization and dimensional-collapse diagnostics",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Available Commands:
  train    Train a joint-embedding model, write log, checkpoint and report
  analyze  Collapse report and filter correlations of a checkpoint
  check    Executable property suites (exit 1 on any failure)
  compare  Merge several runs into one table and loss-curve file

Examples:
  orthoreg train --config configs/byol_so.cfg --out runs/byol_so
  orthoreg check --suite all
  python -m orthoreg.run compare --runs runs/none runs/so --out comparison

For more information on each command, use:
  orthoreg <command> --help
        """,
    )

    # Create subparsers for different commands
    subparsers = parser.add_subparsers(dest="command", help="Command to run", required=True)

    create_train_parser(subparsers)
    create_analyze_parser(subparsers)
    create_check_parser(subparsers)
    create_compare_parser(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for orthoreg."""
    from orthoreg.config_loader import ConfigError

    parser = build_parser()
    args, extra = parser.parse_known_args(argv)

    if getattr(args, "verbose", False):
        logging.getLogger().setLevel(logging.DEBUG)

    if args.command == "train":
        try:
            overrides = parse_overrides(extra)
        except ConfigError as e:
            return _input_error(f"invalid override: {e}")
        return run_train(args, overrides)

    if extra:
        parser.error(f"unrecognized arguments: {' '.join(extra)}")

    # Route to appropriate command
    if args.command == "analyze":
        return run_analyze(args)
    elif args.command == "check":
        return run_check(args)
    elif args.command == "compare":
        return run_compare(args)
    else:
        parser.print_help()
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
