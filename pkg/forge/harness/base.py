"""
CommandResult — what every subcommand returns.
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from ..core.errors import ConfigError, ForgeError, InvariantError, NumericalAbort


class CommandStatus(str, Enum):
    OK = "ok"
    INVARIANT_FAILURE = "invariant_failure"
    CONFIG_ERROR = "config_error"
    NUMERICAL_ABORT = "numerical_abort"

    @property
    def exit_code(self) -> int:
        return {
            CommandStatus.OK: 0,
            CommandStatus.INVARIANT_FAILURE: 1,
            CommandStatus.CONFIG_ERROR: 2,
            CommandStatus.NUMERICAL_ABORT: 3,
        }[self]


@dataclass
class CommandResult:
    command: str
    status: CommandStatus = CommandStatus.OK
    artifacts: list[Path] = field(default_factory=list)    # files written, in order
    summary: dict = field(default_factory=dict)            # headline numbers for the log line
    message: Optional[str] = None                          # why the status is not OK

    @property
    def exit_code(self) -> int:
        return self.status.exit_code

    def wrote(self, path: Path) -> Path:
        self.artifacts.append(path)
        return path

    def fail(self, message: str) -> "CommandResult":
        self.status = CommandStatus.INVARIANT_FAILURE
        self.message = message
        return self


def status_for(exc: BaseException) -> CommandStatus:
    """Exit status an exception maps to."""
    if isinstance(exc, ConfigError):
        return CommandStatus.CONFIG_ERROR
    if isinstance(exc, InvariantError):
        return CommandStatus.INVARIANT_FAILURE
    if isinstance(exc, NumericalAbort):
        return CommandStatus.NUMERICAL_ABORT
    if isinstance(exc, ForgeError):
        return CommandStatus.INVARIANT_FAILURE
    if isinstance(exc, ValueError):
        return CommandStatus.CONFIG_ERROR
    return CommandStatus.NUMERICAL_ABORT
