"""
`selftest` — every registered invariant suite, in registration order.
"""

import logging
import time

from .base import CommandResult, status_for
from .registry import command, get_suites
from ..core.errors import ForgeError
from ..core.runconfig import RunConfig
from ..core.storage import StorageBackend

logger = logging.getLogger(__name__)


def run_suites(module: str | None = None) -> list[dict]:
    rows = []
    for s in get_suites(module):
        start = time.perf_counter()
        row = {"suite": s["name"], "module": s["module"]}
        try:
            row["measured"] = s["handler"]()
            row["status"] = "ok"
        except (ForgeError, ValueError, ArithmeticError) as exc:
            logger.error("Suite '%s' failed: %s", s["name"], exc)
            row["status"] = status_for(exc).value
            row["error"] = str(exc)
        row["seconds"] = round(time.perf_counter() - start, 3)
        rows.append(row)
        logger.info("Suite %-32s %s (%.1fs)", s["name"], row["status"], row["seconds"])
    return rows


@command(name="selftest", help="Run every module's invariant suite at reduced size.")
def cmd_selftest(config: RunConfig, store: StorageBackend) -> CommandResult:
    result = CommandResult("selftest")
    rows = run_suites()
    # wall-clock seconds stay out of the stored report
    stored = [{k: v for k, v in r.items() if k != "seconds"} for r in rows]
    result.wrote(store.write_json("selftest.json", stored))
    failed = [r["suite"] for r in rows if r["status"] != "ok"]
    result.summary.update(suites=len(rows), failed=len(failed))
    if failed:
        return result.fail(f"{len(failed)} suite(s) failed: {', '.join(failed)}")
    return result
