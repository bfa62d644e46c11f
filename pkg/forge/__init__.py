"""
forge: spectral convex-integration laboratory for the stochastic
hypodissipative Navier-Stokes equations.
"""

__version__ = "0.3.0"
