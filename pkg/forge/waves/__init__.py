"""
Beltrami wave families and the geometric lemma.
"""

from .families import WaveFamily, build_wave_families
from .gamma import GammaSystem, build_gamma_system, gamma, certify_r0

__all__ = [
    "WaveFamily", "build_wave_families",
    "GammaSystem", "build_gamma_system", "gamma", "certify_r0",
]
