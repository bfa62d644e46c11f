"""
`compare` — the coupled experiment.

One noise path drives the surrogate construction u = v + z up to T ∧ T_L; a
Galerkin ensemble starts from the same x₀ = u(0) with the same spectrum. The
report lays the three energy lines side by side:

    ‖u(T)‖²  vs  K(‖u(0)‖² + T·Tr(GG*))  vs  E‖x(T)‖² ≤ ‖x₀‖² + T·Tr(GG*)
"""

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .base import CommandResult
from .galerkin import GALERKIN_HEADER
from .iteration import surrogate_run
from .registry import command
from ..core.runconfig import RunConfig
from ..core.storage import StorageBackend
from ..galerkin.ensemble import run_ensemble
from ..spectral.field import resample

logger = logging.getLogger(__name__)

DEGENERATE = "degenerate horizon"
GAP = "gap exhibited"
NO_GAP = "no gap at surrogate scale"


@dataclass
class ComparisonReport:
    T: float
    K: float
    T_L: float
    trace: float                     # Tr(GG*)
    u_energy: float                  # ‖u(T)‖²
    u0_energy: float                 # ‖u(0)‖²
    threshold: float                 # K(‖u(0)‖² + T·Tr)
    galerkin_energy: float           # E‖x(T)‖²
    galerkin_se: float
    x0_energy: float                 # ‖x₀‖² after Galerkin projection
    galerkin_bound: float            # ‖x₀‖² + T·Tr
    verdicts: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def verdicts_for(report: ComparisonReport, n_se: float = 3.0) -> list[str]:
    """Verdict lines from the stored numbers only."""
    lines = []
    if report.T == 0:
        lines.append(DEGENERATE)
    elif report.u_energy > report.threshold:
        lines.append(GAP)
    else:
        lines.append(NO_GAP)
    if report.galerkin_energy <= report.galerkin_bound + n_se * report.galerkin_se:
        lines.append("galerkin energy inequality holds")
    else:
        lines.append("galerkin energy inequality violated")
    if report.threshold < 2.0 * report.galerkin_bound:
        lines.append("threshold below twice the galerkin bound")
    return lines


def build_report(
    T: float, K: float, T_L: float, trace: float, u_energy: float, u0_energy: float,
    galerkin_energy: float, galerkin_se: float, x0_energy: float,
) -> ComparisonReport:
    report = ComparisonReport(
        T=T, K=K, T_L=T_L, trace=trace,
        u_energy=u_energy, u0_energy=u0_energy, threshold=K * (u0_energy + T * trace),
        galerkin_energy=galerkin_energy, galerkin_se=galerkin_se,
        x0_energy=x0_energy, galerkin_bound=x0_energy + T * trace,
    )
    report.verdicts = verdicts_for(report)
    return report


@command(name="compare", help="Coupled experiment: constructed u against the Galerkin reference.")
def cmd_compare(config: RunConfig, store: StorageBackend) -> CommandResult:
    result = CommandResult("compare")
    sr = surrogate_run(config)
    energy = sr.energy(config.K)

    final = sr.run.final
    u0 = final.v.at(final.time_grid.window.start) + sr.run.z.at(final.time_grid.window.start)
    g_dt = config.galerkin_dt
    g_T = max(math.ceil(sr.T / g_dt - 1e-9), 1) * g_dt
    base = config.galerkin_config(T=g_T)
    gcfg = base.model_copy(update={"x0": resample(u0, base.grid)})
    stats, _ = run_ensemble(gcfg)
    i_T = int(np.argmin(np.abs(stats.times - sr.T)))

    report = build_report(
        T=sr.T, K=config.K, T_L=sr.clock.T_L, trace=energy.trace,
        u_energy=energy.u_energy, u0_energy=energy.u0_energy,
        galerkin_energy=float(stats.mean_energy[i_T]), galerkin_se=float(stats.se[i_T]),
        x0_energy=stats.x0_energy,
    )
    result.wrote(store.write_csv("energy.csv", ["t", "v_l2", "u_l2", "M_half"], energy.rows))
    result.wrote(store.write_csv("galerkin_stats.csv", GALERKIN_HEADER, stats.rows()))
    result.wrote(store.write_json("comparison.json", report.to_json()))
    for line in report.verdicts:
        logger.info("compare: %s", line)
    result.summary.update(verdict=report.verdicts[0], u_energy=report.u_energy, threshold=report.threshold)
    return result
