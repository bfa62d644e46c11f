"""
`iterate` — the convex-integration stages, surrogate or ledger.
"""

import logging
from dataclasses import dataclass
from typing import Optional

from .base import CommandResult
from .noise import stopped_path
from .registry import command
from ..core.flags import get_flags
from ..core.runconfig import RunConfig
from ..core.storage import StorageBackend
from ..integrator.energy import EnergyGapReport, energy_gap_report
from ..integrator.iterate import IterationRun, ledger_stage, run_iteration
from ..integrator.state import STRESS_COMPONENTS
from ..ledger.search import find_min_a
from ..spectral.dump import write_field
from ..spectral.grid import TorusGrid
from ..stochastic.ou import OUPath
from ..stochastic.stopping import StoppingClock

logger = logging.getLogger(__name__)


@dataclass
class SurrogateRun:
    run: IterationRun
    path: OUPath
    clock: StoppingClock
    T: float                       # horizon ∧ T_L on the iteration grid

    def energy(self, K: float) -> EnergyGapReport:
        final = self.run.final
        window = final.time_grid.window
        return energy_gap_report(
            final.v.at(window), self.run.z.at(window), final.times[window],
            final.L, self.T, self.path.spectrum.trace(), K,
        )


def surrogate_run(config: RunConfig, drop_component: Optional[str] = None) -> SurrogateRun:
    grid = TorusGrid(n=config.n)
    it_config = config.iteration_config()
    path, clock = stopped_path(config, grid)
    stop = clock.T_L if clock.T_L < config.horizon else None
    run = run_iteration(it_config, path, grid, stop=stop, drop_component=drop_component)
    tg = run.final.time_grid
    T = float(tg.times[tg.index(min(config.horizon, clock.T_L))])
    return SurrogateRun(run=run, path=path, clock=clock, T=T)


def _dump_stages(run: IterationRun, store: StorageBackend, result: CommandResult):
    for state in run.states:
        tg = state.time_grid
        for idx in (tg.window.start, tg.window.stop - 1):
            t = float(state.times[idx])
            for name, f in (("v", state.v), ("p", state.p), ("R", state.stress)):
                stem = store.path(f"iterates/stage_{state.stage}/{name}_n{idx - tg.history:05d}")
                raw, side = write_field(stem, f.at(idx), name, t)
                result.wrote(raw)
                result.wrote(side)


def _ratio_rows(run: IterationRun) -> tuple[list[str], list[list]]:
    keys = sorted({k for s in run.stages for k in s.ratios})
    rows = [[s.stage, s.mode.value, *(s.ratios.get(k, "") for k in keys)] for s in run.stages]
    return ["stage", "mode", *keys], rows


def _breakdown_rows(run: IterationRun) -> list[list]:
    rows = []
    for s in run.stages:
        window = s.state.time_grid.window
        rows.extend([s.stage, *r] for r in s.breakdown.rows(window))
    return rows


def _ledger_mode(config: RunConfig, store: StorageBackend, result: CommandResult) -> CommandResult:
    params = config.parameter_set()
    if config.a is None:
        found = find_min_a(params, config.q_max)
        if not found.satisfiable:
            return result.fail(f"no admissible a: '{found.binding_constraint}' fails at every a")
        params = params.with_a(found.log2_a, found.a)
    stages = [ledger_stage(params, q, config.n) for q in range(config.n_stages)]
    rows = [[s.stage, *s.log_scales.to_json().values(), int(s.representable)] for s in stages]
    result.wrote(store.write_csv(
        "ledger_scales.csv",
        ["stage", "q", "log2_lambda", "log2_delta", "log2_ell", "log2_mu", "representable"],
        rows,
    ))
    hidden = [s.stage for s in stages if not s.representable]
    if hidden:
        logger.warning("Stages %s lie beyond any N = %d grid; scales reported, no fields built", hidden, config.n)
    result.summary.update(log2_a=params.log2_a, stages=len(stages))
    return result


@command(name="iterate", help="Run the convex-integration stages and report every measured ratio.")
def cmd_iterate(config: RunConfig, store: StorageBackend) -> CommandResult:
    result = CommandResult("iterate")
    if config.mode == "ledger":
        return _ledger_mode(config, store, result)

    sr = surrogate_run(config)
    run = sr.run
    if get_flags().write_fields:
        _dump_stages(run, store, result)
    result.wrote(store.write_csv(
        "stress_breakdown.csv", ["stage", "t", "component", "c0", "l2"], _breakdown_rows(run),
    ))
    header, rows = _ratio_rows(run)
    result.wrote(store.write_csv("ledger_ratios.csv", header, rows))
    energy = sr.energy(config.K)
    result.wrote(store.write_csv("energy.csv", ["t", "v_l2", "u_l2", "M_half"], energy.rows))
    result.wrote(store.write_json("iterate_checks.json", {
        "T": sr.T,
        "T_L": sr.clock.T_L,
        "start_bounds": run.start_bounds,
        "components": list(STRESS_COMPONENTS),
        "stages": [
            {
                "stage": s.stage,
                "scales": s.scales.model_dump(),
                "checks": s.checks,
                "ratios": s.ratios,
                "flows": s.flows,
                "amplitudes": s.amplitudes,
            }
            for s in run.stages
        ],
    }))
    result.summary.update(
        stages=len(run.stages),
        residual=max((s.residual.relative for s in run.stages), default=0.0),
        T=sr.T,
    )
    return result
