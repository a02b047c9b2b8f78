"""Main entry point for the hicom CLI."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

from hicom import __version__
from hicom.config import Config, set_config
from hicom.errors import ConfigError, HicomError

logger = logging.getLogger("hicom")

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def setup_logging(dev: bool) -> Optional[Path]:
    """RichHandler on stderr; with --dev also DEBUG level and a persistent log file."""
    root = logging.getLogger()
    root.handlers.clear()
    root.setLevel(logging.DEBUG if dev else logging.INFO)
    root.addHandler(RichHandler(console=Console(stderr=True), show_path=dev, rich_tracebacks=dev))
    # matplotlib and PIL are chatty at DEBUG
    for name in ("matplotlib", "PIL"):
        logging.getLogger(name).setLevel(logging.WARNING)
    if not dev:
        return None

    log_file = Path.home() / ".cache" / "hicom" / "debug.log"
    log_file.parent.mkdir(parents=True, exist_ok=True)
    file_handler = logging.FileHandler(log_file)
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(file_handler)
    return log_file


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hicom",
        description="Multi-face deepfake detection from contextual human cues",
    )
    parser.add_argument(
        "--dev",
        action="store_true",
        help="Run in development mode (debug logging to stderr and ~/.cache/hicom/debug.log)",
    )
    parser.add_argument("--config", type=Path, default=None, help="TOML config file")
    parser.add_argument("--version", action="version", version=f"hicom {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="Render the synthetic multi-face dataset")
    p.add_argument("--out", type=Path, help="Dataset directory (default: data_dir)")
    p.add_argument("--clips", type=int, help="Number of clips over all splits")
    p.add_argument("--seed", type=int, help="Master seed")
    p.add_argument("--force", action="store_true", help="Overwrite an existing dataset")

    p = sub.add_parser("train", help="Train detector modules")
    p.add_argument("--data", type=Path, help="Dataset directory")
    p.add_argument("--out", type=Path, help="Run directory for checkpoints and logs")
    p.add_argument("--modules", default="all", help="M1,M2,gaze,agegender or all")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("evaluate", help="Score trained modules on the test split")
    p.add_argument("--data", type=Path, help="Dataset directory")
    p.add_argument("--out", type=Path, help="Run directory holding checkpoints")
    p.add_argument("--modules", default="all", help="M1,M2,gaze,agegender or all")
    p.add_argument("--manifest", type=Path, help="Evaluate this manifest instead of <data>/test")
    p.add_argument(
        "--perturb", nargs="?", const="mid", default=None,
        help="Add the perturbation table: mid (default), all, or severities like 1,3,5",
    )
    p.add_argument("--oracle", action="store_true", help="Fuse generator ground-truth verdicts")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("explain", help="Write per-face explanations for an evaluated run")
    p.add_argument("--out", type=Path, help="Run directory")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--offline", action="store_true", help="Template explanations only")
    mode.add_argument(
        "--llm", nargs="?", const="", metavar="URL",
        help="POST flagged faces to this endpoint (default: llm_endpoint from the config)",
    )

    p = sub.add_parser("ingest", help="Normalize an external manifest")
    p.add_argument("path", type=Path)
    p.add_argument("--layout", required=True, choices=("jsonl", "ffiw_like"))
    p.add_argument("--out", type=Path, required=True, help="Normalized manifest file")

    p = sub.add_parser("view", help="Browse a run's explanations")
    p.add_argument("run_dir", type=Path)
    return parser


def load_config(args: argparse.Namespace) -> Config:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if args.command == "generate" and args.out is not None:
        overrides["data_dir"] = str(args.out)
    elif getattr(args, "out", None) is not None and args.command != "ingest":
        overrides["output_dir"] = str(args.out)
    if getattr(args, "data", None) is not None:
        overrides["data_dir"] = str(args.data)
    config = Config(args.config, overrides=overrides)
    if config.has_error:
        logger.debug(config.config_error)
    set_config(config)
    return config


def cmd_generate(args: argparse.Namespace, config: Config, console: Console) -> None:
    from hicom.pipeline.report import audit_table
    from hicom.synth import build_dataset

    summary = build_dataset(config.data_dir, config.synth, config.seed, args.clips, args.force)
    console.print(audit_table(summary.audit))
    console.print(f"Audit written to {summary.audit_path}")


def cmd_train(args: argparse.Namespace, config: Config, console: Console) -> None:
    from hicom.pipeline.modules import parse_modules
    from hicom.pipeline.training import train_modules

    written = train_modules(config, config.data_dir, config.output_dir, parse_modules(args.modules), config.seed)
    for module, path in written.items():
        console.print(f"{module.value}: {path}")


def cmd_evaluate(args: argparse.Namespace, config: Config, console: Console) -> None:
    from hicom.pipeline.evaluation import evaluate_run
    from hicom.pipeline.modules import parse_modules
    from hicom.pipeline.report import plot_ablation, plot_degradation, print_report
    from hicom.synth import parse_severities, perturbation_grid

    try:
        grid = perturbation_grid(parse_severities(args.perturb)) if args.perturb else ()
    except ValueError as e:
        raise ConfigError(str(e)) from e
    manifest = args.manifest or config.data_dir / "test" / "manifest.jsonl"
    run_dir = config.output_dir
    report = evaluate_run(
        manifest, run_dir, run_dir, parse_modules(args.modules), config.fusion,
        grid=grid, oracle=args.oracle, seed=config.seed,
    )
    print_report(report, console)
    plots = [plot_ablation(report, run_dir / "plots" / "ablation.png")]
    plots.append(plot_degradation(report, run_dir / "plots" / "degradation.png"))
    for path in filter(None, plots):
        logger.info("Wrote %s", path)


def cmd_explain(args: argparse.Namespace, config: Config, console: Console) -> None:
    from hicom.pipeline.explain import explain_run

    endpoint = None if args.offline else (args.llm or config.llm_endpoint or "")
    path = explain_run(config.output_dir, config.fusion, endpoint)
    console.print(f"Explanations written to {path}")


def cmd_ingest(args: argparse.Namespace, config: Config, console: Console) -> None:
    from hicom.core.ingest import ingest_external_manifest

    result = ingest_external_manifest(args.path, args.layout, args.out)
    console.print(f"{result.n_clips} clips written to {result.out_path}, {len(result.rejections)} rejected")


def cmd_view(args: argparse.Namespace, config: Config, console: Console) -> None:
    from hicom.tui import ReportBrowser

    ReportBrowser(args.run_dir).run()


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "explain": cmd_explain,
    "ingest": cmd_ingest,
    "view": cmd_view,
}


def main(argv=None) -> int:
    """Main CLI entry point."""
    args = build_parser().parse_args(argv)
    log_file = setup_logging(args.dev)
    if log_file is not None:
        logger.info("Dev mode: logging to stderr and %s", log_file)

    console = Console()
    try:
        config = load_config(args)
        COMMANDS[args.command](args, config, console)
    except HicomError as e:
        logger.error("%s", e, exc_info=args.dev)
        return 1
    except Exception as e:
        if not args.dev:
            raise
        logger.error("Application crashed: %s", e, exc_info=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
