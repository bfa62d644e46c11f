"""
Fourier–Galerkin ensemble solver for the stochastic equation.
"""

from .config import GalerkinConfig
from .solver import galerkin_step, simulate_path
from .ensemble import EnsembleStats, run_ensemble, moment_report

__all__ = ["GalerkinConfig", "galerkin_step", "simulate_path", "EnsembleStats", "run_ensemble", "moment_report"]
