"""
Measured stationary-phase decay of 𝓡(a e^{iλξ·x}).
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from ..spectral.field import FourierField, Rank
from ..spectral.grid import TorusGrid
from ..spectral.norms import c0_norm
from ..spectral.operators import inverse_divergence

logger = logging.getLogger(__name__)


@dataclass
class PhaseFit:
    lams: list[int]
    norms: list[float]
    exponent: float          # p in ‖𝓡(a e^{iλξ·x})‖_{C⁰} ≈ C λ^{−p}
    constant: float


def _default_amplitude(x1, x2, x3):
    return 1.0 + 0.5 * np.cos(x1) + 0.25 * np.sin(x2)


def stationary_phase_fit(
    grid: TorusGrid,
    lams: Sequence[int],
    xi: Sequence[int] = (0, 0, 1),
    amplitude: Optional[Callable] = None,
) -> PhaseFit:
    """Fit the decay exponent over λ for the vector field (a cos(λξ·x), 0, 0); ξ is an integer direction."""
    amp = amplitude or _default_amplitude
    x1, x2, x3 = grid.coordinates()
    a = np.broadcast_to(amp(x1, x2, x3), grid.shape)
    norms = []
    for lam in lams:
        k = [lam * c for c in xi]
        if max(abs(c) for c in k) + 2 > grid.max_wavenumber:
            raise ValueError(f"λ={lam} is not resolved on N={grid.n}")
        phase = k[0] * x1 + k[1] * x2 + k[2] * x3
        values = np.stack([a * np.cos(phase), np.zeros(grid.shape), np.zeros(grid.shape)])
        f = FourierField.from_physical(grid, values, Rank.VECTOR)
        norms.append(float(c0_norm(inverse_divergence(f))))
    slope, intercept = np.polyfit(np.log(np.asarray(lams, dtype=np.float64)), np.log(norms), 1)
    fit = PhaseFit(lams=list(lams), norms=norms, exponent=float(-slope), constant=float(np.exp(intercept)))
    logger.info("Stationary phase fit: exponent %.3f over λ=%s", fit.exponent, list(lams))
    return fit
