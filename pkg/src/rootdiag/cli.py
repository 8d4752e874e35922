"""Command-line entry point.

Each subcommand runs one pipeline stage (plus `all`); a bare `--stage NAME`
is accepted as an alias.  Exit code 2 marks configuration problems, 1 runtime
failures.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import PipelineConfig, desk_config, full_config
from .errors import ConfigurationError
from .pipeline import STAGES, run_pipeline

_SUBCOMMANDS = {
    "profile": ["profile"],
    "metrics": ["metrics"],
    "dataset": ["dataset"],
    "train": ["train"],
    "evaluate": ["evaluate"],
    "cost": ["cost"],
    "heatmap": ["heatmap"],
    "curves": ["curves"],
    "validate": ["validate"],
    "all": None,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="pipeline config JSON")
    parser.add_argument("--seed", type=int, help="override the global seed")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--workers", type=int, default=1, help="worker processes")
    parser.add_argument(
        "--desk", action="store_true", help="use the small desk-scale preset"
    )
    parser.add_argument(
        "--force", action="store_true", help="re-run stages even if outputs are valid"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rootdiag",
        description="Reliability diagnostics for a two-parameter root-finding scheme",
    )
    _add_common(parser)
    parser.add_argument("--stage", choices=list(STAGES), help="run a single stage")
    sub = parser.add_subparsers(dest="command")
    for name in _SUBCOMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} stage(s)")
        _add_common(sp)
    return parser


def _resolve_config(args) -> PipelineConfig:
    if args.config is not None:
        config = PipelineConfig.from_json(Path(args.config).read_text())
        if args.desk:
            raise ConfigurationError("--desk conflicts with --config")
    elif args.desk:
        config = desk_config()
    else:
        config = full_config()
    if args.seed is not None:
        config = config.replace(global_seed=args.seed)
    out = args.out or os.environ.get("ROOTDIAG_OUT")
    if out is not None:
        config = config.replace(out_dir=str(out))
    return config


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    command = args.command
    if command is None:
        if args.stage is not None:
            stages = [args.stage]
        else:
            parser.print_help()
            return 2
    else:
        stages = _SUBCOMMANDS[command]

    try:
        config = _resolve_config(args)
    except (ConfigurationError, FileNotFoundError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        manifest = run_pipeline(
            config, stages=stages, workers=args.workers, force=args.force
        )
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - boundary of the CLI
        print(f"pipeline failure: {exc}", file=sys.stderr)
        return 1

    for stage in manifest.completed:
        mark = "cached" if stage in manifest.skipped else f"{manifest.stage_seconds[stage]:.2f}s"
        print(f"{stage}: {mark}")
    print(f"artifacts: {len(manifest.files)} files under {config.out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
