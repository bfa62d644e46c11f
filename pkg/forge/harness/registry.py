"""
Command and suite registries.

Subcommands register with @command; selftest suites with @suite. Both are
plain module-level lists filled at import time by init_commands().
"""

import logging
from typing import Callable, Optional

logger = logging.getLogger(__name__)

# Each command: {name, help, handler}
_commands: list[dict] = []
# Each suite: {name, module, handler}
_suites: list[dict] = []


def command(name: str, help: str):
    """
    Register handler(config: RunConfig, store: StorageBackend) -> CommandResult
    as the subcommand `name`.
    """

    def decorator(func: Callable):
        if get_command_handler(name) is not None:
            logger.warning("Command '%s' already registered, overwriting", name)
            _commands[:] = [c for c in _commands if c["name"] != name]
        _commands.append({"name": name, "help": help, "handler": func})
        logger.debug("Registered command: %s", name)
        return func

    return decorator


def suite(name: str, module: str = "general"):
    """Register a selftest suite: handler() -> dict of measured values; raises on failure."""

    def decorator(func: Callable):
        _suites.append({"name": name, "module": module, "handler": func})
        logger.debug("Registered suite: %s [%s]", name, module)
        return func

    return decorator


def get_command_handler(name: str) -> Optional[Callable]:
    for c in _commands:
        if c["name"] == name:
            return c["handler"]
    return None


def get_command_names() -> list[str]:
    return [c["name"] for c in _commands]


def get_commands() -> list[dict]:
    return list(_commands)


def get_suites(module: Optional[str] = None) -> list[dict]:
    return [s for s in _suites if module is None or s["module"] == module]


def init_commands() -> None:
    """Import command modules to trigger registration. Safe to call more than once."""
    if _commands:
        return

    # ── Subcommands ───────────────────────────────────────────────
    from . import ledger      # noqa: F401
    from . import noise       # noqa: F401
    from . import iteration   # noqa: F401
    from . import galerkin    # noqa: F401
    from . import compare     # noqa: F401
    from . import selftest    # noqa: F401

    # ── Selftest suites ───────────────────────────────────────────
    from . import suites      # noqa: F401

    logger.debug(
        "Commands ready: %d commands [%s], %d suites",
        len(_commands), ", ".join(get_command_names()), len(_suites),
    )
