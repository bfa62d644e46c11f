"""
One q → q+1 step and the stage pipeline.

Surrogate mode builds fields at user-chosen scales, asserts the identities
and reports every inductive inequality as a measured/bound ratio. Ledger
mode evaluates the exact scale formulas in the log domain and builds nothing.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import IterationConfig, RunMode, StageScales
from .cutoffs import build_cutoffs
from .flows import flow_ratios, solve_flows
from .mollify import mollify_state
from .perturbation import build_perturbation
from .residual import ResidualReport, residual_check
from .starting import make_time_grid, noise_series, starting_bounds, starting_triple
from .state import IterationState, StressBreakdown, check_state, energy_profile, hold_state
from .stress import assemble_stress
from ..core.errors import ConfigError, InvariantError
from ..core.flags import get_flags
from ..ledger.params import ParameterSet, ScaleRow, derive_scales, log_constant_C_L
from ..spectral.field import FourierField
from ..spectral.grid import TorusGrid
from ..spectral.norms import c0_norm, c1_tx_norm, l2_norm
from ..spectral.operators import divergence_ratio
from ..stochastic.ou import OUPath
from ..waves.families import build_wave_families, common_n0
from ..waves.gamma import GammaSystem, build_gamma_system

logger = logging.getLogger(__name__)

_DIVERGENCE_TOL = 1e-8
_CANCELLATION_TOL = 1e-8


@dataclass
class StageResult:
    stage: int                                   # q + 1
    mode: RunMode
    scales: Optional[StageScales] = None
    state: Optional[IterationState] = None
    breakdown: Optional[StressBreakdown] = None
    residual: Optional[ResidualReport] = None
    ratios: dict[str, float] = field(default_factory=dict)     # measured / bound
    checks: dict[str, float] = field(default_factory=dict)     # identities, relative
    flows: list[dict] = field(default_factory=list)
    amplitudes: list[dict] = field(default_factory=list)
    log_scales: Optional[ScaleRow] = None
    representable: bool = True

    def ratio_row(self) -> dict:
        return {"stage": self.stage, "mode": self.mode.value, **self.ratios}


def admissible_lambda(lam: int, n: int, families=None, variant: str = "five") -> None:
    """λ a multiple of n0 with 2λ·max|ξ_i| ≤ N/3; raises ConfigError otherwise."""
    families = families or build_wave_families(variant)
    n0 = common_n0(families)
    if lam % n0:
        raise ConfigError(f"λ = {lam} is not a multiple of n0 = {n0}")
    reach = max(float(np.max(np.abs(f.directions()))) for f in families)
    if 2.0 * lam * reach > n / 3.0:
        raise ConfigError(
            f"λ = {lam} resonates at |k| = {2.0 * lam * reach:g}, beyond the dealiased band N/3 = {n / 3.0:g}"
        )


def _breach(name: str, value: float, tol: float) -> None:
    if value <= tol:
        return
    if get_flags().strict_invariants:
        raise InvariantError(name, value, tol)
    logger.warning("invariant '%s' breached: %.3e > %.1e (recorded)", name, value, tol)


def _check_window(state: IterationState, lag: int) -> slice:
    tg = state.time_grid
    start = (state.valid.start or 0) + lag - 1
    stop = state.valid.stop if state.valid.stop is not None else tg.size
    w = tg.window
    return slice(max(start, w.start), min(stop, w.stop))


def ledger_stage(params: ParameterSet, q: int, n: int) -> StageResult:
    """Exact scales of stage q → q+1 and whether a grid of size N could hold them."""
    row = derive_scales(params, q + 1)[q]
    cap = math.log2(n / 6.0)
    representable = row.log2_lambda <= cap
    logger.info(
        "Ledger stage %d: log2 λ = %.6g, log2 δ = %.6g (N=%d holds log2 λ ≤ %.3g)",
        q + 1, row.log2_lambda, row.log2_delta, n, cap,
    )
    return StageResult(stage=q + 1, mode=RunMode.LEDGER, log_scales=row, representable=representable)


def iterate(
    state: IterationState,
    z: FourierField,
    scales: StageScales,
    config: IterationConfig,
    systems: Optional[tuple[GammaSystem, GammaSystem]] = None,
    drop_component: Optional[str] = None,
    next_delta: Optional[float] = None,
) -> StageResult:
    """Surrogate q → q+1: mollify, cut off, transport, perturb, assemble, verify."""
    families = build_wave_families(config.family)
    admissible_lambda(scales.lam, state.grid.n, families)
    if systems is None:
        systems = tuple(build_gamma_system(f) for f in families)
    tg = state.time_grid

    moll = mollify_state(state, z, scales.ell)
    cutoffs = build_cutoffs(scales.mu, state.times)
    u_l = moll.v + moll.z
    flows = solve_flows(u_l, cutoffs, tg.dt, tg.history, config.substeps)
    check = _check_window(state, moll.lag)
    if check.stop <= check.start:
        raise ConfigError("no samples left in [0, horizon] after mollification; widen the history padding")
    pert = build_perturbation(
        moll.stress, flows, cutoffs, systems, scales.lam, scales.delta, config.c_R, state.L, tg, check=check,
    )
    w_div = divergence_ratio(pert.w.at(check))
    _breach("w divergence-free", w_div, _DIVERGENCE_TOL)
    cancel = float(np.max(pert.cancellation[check]))
    _breach("resonant cancellation", cancel, _CANCELLATION_TOL)

    new_state, breakdown = assemble_stress(
        state, moll, pert, z, scales, keep_fields=config.keep_breakdown, drop_component=drop_component,
    )
    try:
        invariants = check_state(new_state, tol=_DIVERGENCE_TOL)
    except InvariantError as exc:
        if get_flags().strict_invariants:
            raise
        logger.warning("stage %d state check: %s", new_state.stage, exc)
        invariants = {}
    residual = residual_check(new_state, z)

    result = StageResult(
        stage=new_state.stage,
        mode=RunMode.SURROGATE,
        scales=scales,
        state=new_state,
        breakdown=breakdown,
        residual=residual,
        flows=flow_ratios(flows, u_l, scales.mu),
    )
    result.checks = {
        "w_divergence": w_div,
        "cancellation": cancel,
        "corrector_gap": pert.corrector_gap,
        "breakdown_sum": breakdown.sum_mismatch,
        "residual_relative": residual.relative,
        "partition_of_unity": cutoffs.partition_error(),
        "flow_periodicity": max((f.periodicity for f in flows), default=0.0),
        "flow_anchor": max((f.anchor_error() for f in flows), default=0.0),
        **{f"state_{k}": v for k, v in invariants.items()},
    }
    result.ratios, result.amplitudes = _measured_ratios(
        state, new_state, pert, systems, scales, config, check, next_delta,
    )
    logger.info(
        "Stage %d done: A1 ratio %.3g, residual %.2e, cancellation %.2e",
        new_state.stage, result.ratios["A1"], residual.relative, cancel,
    )
    return result


def _measured_ratios(old, new, pert, systems, scales, config, check, next_delta) -> tuple[dict, list]:
    times = new.times[check]
    m = energy_profile(times, new.L)
    dv = new.v.at(check) - old.v.at(check)
    c_l = math.exp(log_constant_C_L(new.L))
    ratios = {
        "A1": float(np.max(c0_norm(dv) / np.sqrt(m * scales.delta))),
        "A2": c1_tx_norm(dv, new.time_grid.dt) / (c_l * math.sqrt(m[-1] * scales.delta) * scales.lam),
    }
    if next_delta is not None:
        r = c0_norm(new.stress.at(check))
        ratios["A3"] = float(np.max(r / (m * next_delta * config.c_R)))
    ratios["r0"] = float(np.max(pert.r0_ratio[check])) / min(s.r0 for s in systems)

    D = max(s.D for s in systems)
    l_max = max(pert.l_c0.values(), default=0.0)
    w_c0 = float(np.max(c0_norm(pert.w.at(check))))
    ratios["w_bound"] = w_c0 / (D * l_max) if l_max > 0 else 0.0

    # ‖v(T)‖ against (‖v(0)‖ + L)e^{LT}
    e = np.asarray(l2_norm(new.v.at(check)))
    T = float(times[-1] - times[0])
    ratios["energy_growth"] = float(e[-1] / ((e[0] + new.L) * math.exp(new.L * T)))

    scale = math.sqrt(float(np.max(m)) * scales.delta)
    amplitudes = []
    for key, a_c0 in sorted(pert.coefficient_c0.items()):
        row = {"j": key[0], "pair": key[1], "a_ratio": a_c0 / scale}
        dt_norm = pert.coefficient_dt.get(key)
        if dt_norm is not None and a_c0 > 0:
            row["dt_ratio"] = dt_norm / a_c0 * scales.ell
        amplitudes.append(row)
    if amplitudes:
        ratios["amplitude"] = max(r["a_ratio"] for r in amplitudes)
        ratios["amplitude_dt"] = max((r.get("dt_ratio", 0.0) for r in amplitudes), default=0.0)
    return ratios, amplitudes


@dataclass
class IterationRun:
    config: IterationConfig
    z: FourierField                            # series on the padded grid
    states: list[IterationState]
    stages: list[StageResult]
    start_bounds: dict

    @property
    def final(self) -> IterationState:
        return self.states[-1]

    def ratio_rows(self) -> list[dict]:
        return [s.ratio_row() for s in self.stages]


def run_iteration(
    config: IterationConfig,
    path: Optional[OUPath],
    grid: Optional[TorusGrid] = None,
    stop: Optional[float] = None,
    drop_component: Optional[str] = None,
) -> IterationRun:
    """Starting triple, then every configured stage in order."""
    grid = grid or (path.grid if path is not None else TorusGrid(n=config.n))
    if grid.n != config.n:
        raise ConfigError(f"grid N={grid.n} disagrees with configured N={config.n}")
    tg = make_time_grid(config)
    z = noise_series(path, grid, tg, stop=stop)
    state = starting_triple(config.L, grid, tg, z, config.alpha)
    if stop is not None and stop < tg.horizon:
        state = hold_state(state, tg.index(stop))
    check_state(state)
    bounds = starting_bounds(state, config.c_R)

    families = build_wave_families(config.family)
    systems = tuple(build_gamma_system(f) for f in families)
    states, stages = [state], []
    for i, scales in enumerate(config.stages):
        nxt = config.stages[i + 1].delta if i + 1 < len(config.stages) else config.next_delta
        result = iterate(
            state, z, scales, config, systems,
            drop_component=drop_component if i == len(config.stages) - 1 else None,
            next_delta=nxt,
        )
        state = result.state
        states.append(state)
        stages.append(result)
    return IterationRun(config=config, z=z, states=states, stages=stages, start_bounds=bounds)
