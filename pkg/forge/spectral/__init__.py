"""
Periodic 3-torus spectral toolbox.
"""

from .grid import TorusGrid
from .field import FourierField, Rank

__all__ = ["TorusGrid", "FourierField", "Rank"]
