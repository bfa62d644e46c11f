"""
forge — convex-integration laboratory for the stochastic hypodissipative NSE.
Entry point. Run with: python main.py <subcommand> [--config FILE] [--seed N] [--out DIR]
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

from forge import __version__
from forge.core.config import get_settings
from forge.core.runconfig import load_run_config
from forge.core.storage import get_storage
from forge.harness.base import CommandResult, status_for
from forge.harness.registry import get_command_handler, get_commands, init_commands

logger = logging.getLogger("forge")


def build_parser() -> argparse.ArgumentParser:
    init_commands()
    parser = argparse.ArgumentParser(prog="forge", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"forge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for c in get_commands():
        p = sub.add_parser(c["name"], help=c["help"], description=c["help"])
        p.add_argument("--config", help="run file (key = value lines)")
        p.add_argument("--seed", type=int, help="override the run file seed")
        p.add_argument("--out", help="output directory (default: FORGE_OUT)")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    result = CommandResult(args.command)
    try:
        config = load_run_config(args.config, seed=args.seed)
        store = get_storage(args.out)
        store.write_text("resolved_config.cfg", config.resolved_text())
        result = get_command_handler(args.command)(config, store)
    except Exception as exc:
        logger.exception("%s aborted: %s", args.command, exc)
        result.status = status_for(exc)
        result.message = str(exc)

    if result.message:
        logger.error("%s: %s (%s)", args.command, result.message, result.status.value)
    logger.info(
        "%s finished: %s, %d artifact(s) under %s %s",
        args.command, result.status.value, len(result.artifacts), args.out or settings.out_dir, result.summary,
    )
    return result.exit_code


if __name__ == "__main__":
    settings = get_settings()
    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    sys.exit(run())
