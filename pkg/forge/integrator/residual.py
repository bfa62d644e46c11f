"""
Residual of the fractional Navier–Stokes–Reynolds system for a state.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .state import IterationState
from ..spectral.field import FourierField
from ..spectral.norms import c0_norm, l2_norm, time_derivative
from ..spectral.operators import div, frac_laplacian, grad, tensor_product

logger = logging.getLogger(__name__)


@dataclass
class ResidualReport:
    times: np.ndarray
    l2: np.ndarray
    c0: np.ndarray
    scale: float           # largest L² norm among the balanced terms

    @property
    def relative(self) -> float:
        return float(np.max(self.l2)) / self.scale if self.scale > 0 else float(np.max(self.l2))

    def rows(self) -> list[list]:
        return [[t, a, b] for t, a, b in zip(self.times, self.l2, self.c0)]


def residual_check(state: IterationState, z: FourierField) -> ResidualReport:
    """∂_t v + div((v+z)⊗(v+z)) + ∇p + (−Δ)^α v − div R̊ on the valid samples."""
    dvdt = time_derivative(np.asarray(state.v.coeffs), state.time_grid.dt)
    idx = range(state.time_grid.size)[state.valid]
    l2, c0, scale = [], [], 0.0
    for n in idx:
        v = state.v.at(n)
        u = v + z.at(n)
        terms = (
            v.with_coeffs(dvdt[n]),
            div(tensor_product(u, u)),
            grad(state.p.at(n)),
            frac_laplacian(v, state.alpha),
            -div(state.stress.at(n)),
        )
        res = terms[0]
        for t in terms[1:]:
            res = res + t
        l2.append(float(l2_norm(res)))
        c0.append(float(c0_norm(res)))
        scale = max(scale, max(float(l2_norm(t)) for t in terms))
    report = ResidualReport(times=state.times[state.valid], l2=np.array(l2), c0=np.array(c0), scale=scale)
    logger.info("Residual stage %d: max L² %.3e (relative %.3e)", state.stage, float(np.max(report.l2)), report.relative)
    return report


def refinement_order(coarse: ResidualReport, fine: ResidualReport, factor: float = 2.0) -> float:
    """Observed order log(max coarse / max fine)/log(factor)."""
    a, b = float(np.max(coarse.l2)), float(np.max(fine.l2))
    if b == 0.0:
        return math.inf
    return math.log(a / b) / math.log(factor)
