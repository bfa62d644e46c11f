"""
Convex-integration stages on discrete space-time fields.
"""

from .config import IterationConfig, RunMode, StageScales
from .energy import EnergyGapReport, energy_gap_report
from .iterate import IterationRun, StageResult, iterate, ledger_stage, run_iteration
from .residual import ResidualReport, residual_check
from .starting import make_time_grid, noise_series, starting_triple
from .state import STRESS_COMPONENTS, IterationState, StressBreakdown, TimeGrid

__all__ = [
    "IterationConfig", "RunMode", "StageScales",
    "EnergyGapReport", "energy_gap_report",
    "IterationRun", "StageResult", "iterate", "ledger_stage", "run_iteration",
    "ResidualReport", "residual_check",
    "make_time_grid", "noise_series", "starting_triple",
    "STRESS_COMPONENTS", "IterationState", "StressBreakdown", "TimeGrid",
]
