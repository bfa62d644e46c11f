"""
Linear stochastic part: OU noise, stopping times, path functionals.
"""

from .spectrum import NoiseSpectrum
from .ou import OUPath, simulate_ou

__all__ = ["NoiseSpectrum", "OUPath", "simulate_ou"]
