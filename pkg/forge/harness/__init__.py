"""
Command-line harness: subcommands, the coupled comparison and selftest suites.
"""

from .base import CommandResult, CommandStatus
from .registry import get_command_handler, get_command_names, get_commands, init_commands

__all__ = [
    "CommandResult", "CommandStatus",
    "get_command_handler", "get_command_names", "get_commands", "init_commands",
]
