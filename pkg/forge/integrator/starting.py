"""
Starting triple (v₀, p₀, R̊₀) and the noise series it is coupled to.

v₀ = M(t)^{1/2}(2π)^{−3/2}(cos x₃, sin x₃, 0) solves the Euler–Reynolds system with
R₀ = (2L+1)M^{1/2}(2π)^{−3/2}S + v₀⊗z + z⊗v₀ + z⊗z, where S is the symmetric
trace-free matrix with div S = (cos x₃, sin x₃, 0).
"""

import logging
import math
from typing import Optional

import numpy as np

from .config import IterationConfig
from .state import IterationState, TimeGrid, energy_profile
from ..spectral.field import FourierField, Rank
from ..spectral.grid import TorusGrid
from ..spectral.norms import c0_norm
from ..spectral.operators import tensor_product, trace, traceless
from ..stochastic.ou import OUPath

logger = logging.getLogger(__name__)

_NORMALIZATION = (2.0 * math.pi) ** -1.5


def make_time_grid(config: IterationConfig) -> TimeGrid:
    return TimeGrid(
        dt=config.dt,
        history=config.history_samples(),
        steps=config.n_steps,
        post=config.future_samples(),
    )


def noise_series(path: Optional[OUPath], grid: TorusGrid, time_grid: TimeGrid, stop: Optional[float] = None) -> FourierField:
    """z on the padded grid: 0 for t ≤ 0, the path on [0, stop], held constant afterwards."""
    out = np.zeros((time_grid.size, 3) + grid.spectral_shape, dtype=np.complex128)
    if path is None:
        return FourierField(grid, Rank.VECTOR, out)
    if path.grid != grid:
        raise ValueError(f"noise path lives on N={path.grid.n}, iteration grid is N={grid.n}")
    stride = time_grid.dt / path.h
    if not math.isclose(stride, round(stride), rel_tol=1e-9) or round(stride) < 1:
        raise ValueError(f"iteration step {time_grid.dt:g} is not a multiple of the noise step {path.h:g}")
    stride = int(round(stride))
    last = time_grid.horizon if stop is None else min(stop, time_grid.horizon)
    n_last = int(math.floor(last / time_grid.dt + 1e-9))
    if n_last * stride > path.n_times - 1:
        raise ValueError(f"noise path ends at {path.horizon:g}, before t = {n_last * time_grid.dt:g}")
    z = path.series(slice(0, n_last * stride + 1, stride)).coeffs
    h = time_grid.history
    out[h:h + n_last + 1] = z
    out[h + n_last + 1:] = z[-1]
    if stop is not None and stop < time_grid.horizon:
        logger.info("Noise held constant after T_L = %.4g", stop)
    return FourierField(grid, Rank.VECTOR, out)


def base_profile(grid: TorusGrid) -> FourierField:
    """(cos x₃, sin x₃, 0)."""
    _, _, x3 = grid.coordinates()
    shape = grid.shape
    values = np.stack([np.broadcast_to(np.cos(x3), shape), np.broadcast_to(np.sin(x3), shape), np.zeros(shape)])
    return FourierField.from_physical(grid, values, Rank.VECTOR)


def base_stress(grid: TorusGrid) -> FourierField:
    """S = [[0, 0, sin x₃], [0, 0, −cos x₃], [sin x₃, −cos x₃, 0]]."""
    _, _, x3 = grid.coordinates()
    shape = grid.shape
    s, c = np.broadcast_to(np.sin(x3), shape), np.broadcast_to(np.cos(x3), shape)
    zero = np.zeros(shape)
    values = np.stack([
        np.stack([zero, zero, s]),
        np.stack([zero, zero, -c]),
        np.stack([s, -c, zero]),
    ])
    return FourierField.from_physical(grid, values, Rank.MATRIX)


def starting_triple(
    L: float,
    grid: TorusGrid,
    time_grid: TimeGrid,
    z: FourierField,
    alpha: float,
) -> IterationState:
    if L <= 1:
        raise ValueError(f"L must exceed 1, got {L}")
    amp = np.sqrt(energy_profile(time_grid.times, L)) * _NORMALIZATION
    v0 = base_profile(grid) * amp
    cross = tensor_product(v0, z)
    quad = cross + cross.with_coeffs(np.swapaxes(cross.coeffs, -4, -5)) + tensor_product(z, z)
    r0 = base_stress(grid) * ((2.0 * L + 1.0) * amp) + quad
    p0 = trace(quad) * (-1.0 / 3.0)
    logger.info("Starting triple: L=%g, %d samples, N=%d", L, time_grid.size, grid.n)
    return IterationState(
        stage=0,
        grid=grid,
        time_grid=time_grid,
        L=L,
        alpha=alpha,
        v=v0,
        p=p0,
        stress=traceless(r0),
        valid=slice(2, time_grid.size - 2),
        provenance={"L": L, "alpha": alpha, "N": grid.n, "dt": time_grid.dt, "history": time_grid.history},
    )


def starting_bounds(state: IterationState, c_R: float) -> dict:
    """Measured ‖v₀‖_{C⁰}/M^{1/2} and ‖R̊₀‖_{C⁰}/(M c_R δ₁), δ₁ = 1/(4(2π)³)."""
    m = state.energy_profile()
    delta1 = 1.0 / (4.0 * (2.0 * math.pi) ** 3)
    return {
        "v0_ratio": float(np.max(c0_norm(state.v) / np.sqrt(m))),
        "R0_ratio": float(np.max(c0_norm(state.stress) / (m * c_R * delta1))),
    }
