"""
`ledger` — exact scale bookkeeping at the true parameter regime.
"""

import logging

from .base import CommandResult
from .registry import command
from ..core.runconfig import RunConfig
from ..core.storage import StorageBackend
from ..ledger.constraints import check_constraints, holder_gamma
from ..ledger.params import LPolicy, derive_scales
from ..ledger.search import c0_sensitivity, find_min_a, golden_rows
from ..waves.beltrami import write_waves_json

logger = logging.getLogger(__name__)


@command(name="ledger", help="Check every scale inequality in the log domain and search for the least a.")
def cmd_ledger(config: RunConfig, store: StorageBackend) -> CommandResult:
    result = CommandResult("ledger")
    params = config.parameter_set()
    result.wrote(write_waves_json(store, config.family1))

    if config.a is None:
        found = find_min_a(params, config.q_max)
        result.wrote(store.write_json("min_a.json", found.to_json()))
        if not found.satisfiable:
            return result.fail(f"no admissible a: '{found.binding_constraint}' fails at every a")
        params = params.with_a(found.log2_a, found.a)
        result.summary["binding_constraint"] = found.binding_constraint

    report = check_constraints(params, config.q_max)
    payload = report.to_json()
    payload["holder_gamma"] = str(holder_gamma(params))
    result.wrote(store.write_json("ledger.json", payload))
    result.wrote(store.write_csv("ledger_golden.csv", ["name", "q", "relation", "log_slack", "pass"], golden_rows(report)))
    result.wrote(store.write_csv(
        "scales.csv",
        ["q", "log2_lambda", "log2_delta", "log2_ell", "log2_mu"],
        ([r.q, r.log2_lambda, r.log2_delta, r.log2_ell, r.log2_mu] for r in derive_scales(params, config.q_max)),
    ))

    sweep = c0_sensitivity(params, config.q_max, L_policy=LPolicy(config.L_policy))
    result.wrote(store.write_json("c0_sensitivity.json", [r.to_json() for r in sweep]))

    result.summary.update(log2_a=params.log2_a, passed=report.passed, constraints=len(report.results))
    if not report.passed:
        worst = report.binding()
        return result.fail(f"{len(report.failures)} constraint(s) fail; worst '{worst.name}' (q={worst.q})")
    logger.info("Ledger passes at log2 a = %.9g for q ≤ %d", params.log2_a, config.q_max)
    return result
