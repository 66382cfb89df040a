"""Command-line entry point: pipeline stages as subcommands.

    flowsage <stage> --config CONFIG [--seed N] [--out DIR] [--mode MODE]

Stages: preprocess | train | embed | detect | evaluate | run-all.
Exit codes: 0 success, 1 config/validation error, 2 missing input artifact.
Log level comes from the FLOWSAGE_LOG environment variable only.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .artifacts import ArtifactError, MissingArtifactError
from .config import ConfigError, load_config
from .metrics import comparison_text
from .pipeline import STAGES, output_lock, run_all

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MISSING_ARTIFACT = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowsage",
        description="Self-supervised flow-graph embeddings feeding anomaly detectors.",
    )
    sub = parser.add_subparsers(dest="stage", required=True)
    for stage in [*STAGES, "run-all"]:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        p.add_argument("--config", required=True, help="pipeline config (YAML)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--mode", choices=("benchmark", "deploy"), default=None,
                       help="override the run mode")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("FLOWSAGE_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)

    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    if args.mode is not None:
        overrides["mode"] = args.mode

    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG

    try:
        with output_lock(cfg.out_dir):
            if args.stage == "run-all":
                comparison = run_all(cfg)
                if comparison is not None:
                    print(comparison_text(comparison), end="")
            elif args.stage == "evaluate":
                print(comparison_text(STAGES["evaluate"](cfg)), end="")
            else:
                STAGES[args.stage](cfg)
    except MissingArtifactError as exc:
        print(f"{args.stage}: {exc}", file=sys.stderr)
        return EXIT_MISSING_ARTIFACT
    except (ArtifactError, ValueError, RuntimeError) as exc:
        print(f"{args.stage}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
