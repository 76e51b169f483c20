from dotenv import load_dotenv
load_dotenv(override=True)

import argparse
import json
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from experiment_manager import ExperimentConfig, ExperimentManager, load_config, load_preset
from models import ConfigError, MilsteinError
from settings import RuntimeSettings

logger = logging.getLogger("app")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INVALID = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="monotone-milstein",
        description="Strong-convergence experiments for projected and split-step Milstein schemes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a preset or a JSON experiment config")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", help="name of a shipped preset, e.g. table2")
    source.add_argument("--config", help="path to an experiment config (JSON)")
    run.add_argument("--samples", type=int, help="override the number of Monte Carlo samples")
    run.add_argument("--seed", type=int, help="override the seed")
    run.add_argument("--workers", type=int, help="worker threads; never changes results")
    run.add_argument("--out", help="output directory")
    run.add_argument("--dry-run", action="store_true", help="print the resolved plan and exit")
    run.add_argument("--no-ledger", action="store_true", help="do not record the run in the results database")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_preset(args.preset) if args.preset else load_config(args.config)
    overrides = {k: v for k, v in (("samples", args.samples), ("seed", args.seed)) if v is not None}
    if overrides:
        # Re-validate so overrides go through the same checks as the file.
        config = ExperimentConfig.model_validate({**config.model_dump(), **overrides})
    return config


def resolve_settings(args: argparse.Namespace) -> RuntimeSettings:
    settings = RuntimeSettings.from_env()
    updates = {}
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError(f"--workers must be >= 1, got {args.workers}", field="workers")
        updates["workers"] = args.workers
    if args.out is not None:
        updates["out_dir"] = args.out
    return settings.model_copy(update=updates)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = RuntimeSettings.from_env()
    logging.basicConfig(
        level=settings.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        settings = resolve_settings(args)
        config = resolve_config(args)
        manager = ExperimentManager(config, settings, ledger=not args.no_ledger)
    except (ValidationError, ConfigError, MilsteinError, ValueError) as e:
        print(f"invalid config: {e}", file=sys.stderr)
        return EXIT_INVALID

    if args.dry_run:
        print(json.dumps(manager.plan(), indent=2))
        return EXIT_OK

    try:
        outputs = manager.run()
    except MilsteinError as e:
        logger.error("run failed: %s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME

    for path in outputs:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
