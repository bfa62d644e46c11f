"""
Exact Ornstein–Uhlenbeck simulation of dz + (−Δ)^α z dt = G dB, z(0) = 0.

Per active mode and polarization the pair (η, ΔB), the OU increment and Brownian
increment over one step, is drawn jointly from its exact Gaussian law:
    Var η = q(1 − e^{−2λh})/(2λ),  Var ΔB = q h,  Cov = q(1 − e^{−λh})/λ,
with λ = |k|^{2α}. The path therefore carries the Wiener path B alongside z.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .rng import ModeTable, draw_normals, mode_table
from .spectrum import NoiseSpectrum
from ..spectral.field import FourierField, Rank
from ..spectral.grid import TorusGrid
from ..spectral.operators import semigroup_multiplier

logger = logging.getLogger(__name__)


def pair_covariance(lam: np.ndarray, q: np.ndarray, tau: float) -> np.ndarray:
    """(m, 2, 2) covariance of (η, ΔB) over an interval of length tau."""
    s11 = q * -np.expm1(-2.0 * lam * tau) / (2.0 * lam)
    s22 = q * tau
    s12 = q * -np.expm1(-lam * tau) / lam
    return np.stack([np.stack([s11, s12], -1), np.stack([s12, s22], -1)], -2)


def chol2(c: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of stacked 2×2 PSD matrices, tolerant of zero rows."""
    l11 = np.sqrt(np.maximum(c[..., 0, 0], 0.0))
    l21 = np.divide(c[..., 1, 0], l11, out=np.zeros_like(l11), where=l11 > 0)
    l22 = np.sqrt(np.maximum(c[..., 1, 1] - l21**2, 0.0))
    zero = np.zeros_like(l11)
    return np.stack([np.stack([l11, zero], -1), np.stack([l21, l22], -1)], -2)


def complex_normals(g: np.ndarray) -> np.ndarray:
    """(..., 2 re/im) standard normals → complex normals with E|n|² = 1."""
    return (g[..., 0] + 1j * g[..., 1]) / math.sqrt(2.0)


class IncrementSampler:
    """Draws (η, ΔB) active-mode vectors for one grid, spectrum and step size."""

    def __init__(self, spectrum: NoiseSpectrum, grid: TorusGrid, h: float, seed: int):
        self.spectrum = spectrum
        self.grid = grid
        self.h = h
        self.seed = seed
        cutoff = spectrum.shell_cutoff or grid.max_wavenumber
        self.table: ModeTable = mode_table(grid, cutoff)
        self.decay_full = semigroup_multiplier(grid, h, spectrum.alpha)
        self.decay = self.table.gather(self.decay_full)
        kk = np.sum(self.table.k.astype(np.float64) ** 2, axis=-1)
        self.lam = np.power(kk, spectrum.alpha)
        self.q = spectrum.q(self.table.k)
        self.factor = chol2(pair_covariance(self.lam, self.q, h))

    def draw(self, step: int) -> tuple[np.ndarray, np.ndarray]:
        n = complex_normals(draw_normals(self.table, self.seed, step))   # (m, pol, qty)
        eta = self.factor[:, None, 0, 0] * n[..., 0]
        beta = self.factor[:, None, 1, 0] * n[..., 0] + self.factor[:, None, 1, 1] * n[..., 1]
        return self.table.from_polar(eta), self.table.from_polar(beta)


@dataclass(frozen=True)
class OUPath:
    grid: TorusGrid
    spectrum: NoiseSpectrum
    h: float
    seed: int
    table: ModeTable
    z: np.ndarray          # (n_t, 3, m) active-mode coefficients of z
    b: np.ndarray          # (n_t, 3, m) active-mode coefficients of the Wiener path G·B
    level: int = 0
    T_L: Optional[float] = None

    @property
    def n_times(self) -> int:
        return self.z.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_times) * self.h

    @property
    def horizon(self) -> float:
        return (self.n_times - 1) * self.h

    def snapshot(self, i: int) -> FourierField:
        return FourierField(self.grid, Rank.VECTOR, self.table.scatter(self.z[i]))

    def series(self, sl: slice = slice(None)) -> FourierField:
        return FourierField(self.grid, Rank.VECTOR, self.table.scatter(self.z[sl]))

    def wiener_series(self, sl: slice = slice(None)) -> FourierField:
        return FourierField(self.grid, Rank.VECTOR, self.table.scatter(self.b[sl]))

    def sobolev_norms(self, s: float, which: str = "z") -> np.ndarray:
        """‖·‖_{H^s} per time from active modes (each representative counts twice)."""
        kk = np.sum(self.table.k.astype(np.float64) ** 2, axis=-1)
        w = 2.0 * np.power(1.0 + kk, s)
        data = self.z if which == "z" else self.b
        return np.sqrt(np.sum(w * np.sum(np.abs(data) ** 2, axis=-2), axis=-1))

    def with_stopping(self, t_l: float) -> "OUPath":
        return replace(self, T_L=t_l)

    def resample(self, stride: int) -> "OUPath":
        """Every stride-th sample (a coarser grid on the same path)."""
        return replace(self, h=self.h * stride, z=self.z[::stride], b=self.b[::stride])


def _step_count(T: float, h: float) -> int:
    if h <= 0:
        raise ValueError(f"step must be positive, got {h}")
    n = int(round(T / h))
    if n < 1 or not math.isclose(n * h, T, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"horizon {T} is not a positive multiple of the step {h}")
    return n


def simulate_ou(
    spectrum: NoiseSpectrum,
    grid: TorusGrid,
    h: float,
    T: float,
    seed: int,
    alpha: Optional[float] = None,
) -> OUPath:
    if alpha is not None and not math.isclose(alpha, spectrum.alpha):
        raise ValueError(f"α mismatch: run uses {alpha}, spectrum was built for {spectrum.alpha}")
    n = _step_count(T, h)
    sampler = IncrementSampler(spectrum, grid, h, seed)
    m = sampler.table.size
    z = np.zeros((n + 1, 3, m), dtype=np.complex128)
    b = np.zeros_like(z)
    for step in range(n):
        eta, beta = sampler.draw(step)
        z[step + 1] = sampler.decay * z[step] + eta
        b[step + 1] = b[step] + beta
    logger.info("OU path: N=%d modes=%d steps=%d h=%g seed=%d", grid.n, m, n, h, seed)
    return OUPath(grid, spectrum, h, seed, sampler.table, z, b)


def refine_path(path: OUPath) -> OUPath:
    """Halve the step by Gaussian bridge subdivision of (z, B); coarse samples are kept."""
    tau = path.h / 2.0
    table = path.table
    kk = np.sum(table.k.astype(np.float64) ** 2, axis=-1)
    lam = np.power(kk, path.spectrum.alpha)
    q = path.spectrum.q(table.k)
    s = pair_covariance(lam, q, tau)
    a = np.exp(-lam * tau)
    s11, s12, s22 = s[:, 0, 0], s[:, 0, 1], s[:, 1, 1]
    c_xy = np.stack([np.stack([a * s11, s12], -1), np.stack([a * s12, s22], -1)], -2)
    c_yy = np.stack([
        np.stack([(1 + a**2) * s11, (1 + a) * s12], -1),
        np.stack([(1 + a) * s12, 2 * s22], -1),
    ], -2)
    active = q > 0
    safe_yy = np.where(active[:, None, None], c_yy, np.eye(2))
    gain = np.swapaxes(np.linalg.solve(safe_yy, np.swapaxes(c_xy, -1, -2)), -1, -2)
    gain[~active] = 0.0
    cond = s - gain @ np.swapaxes(c_xy, -1, -2)
    factor = chol2(0.5 * (cond + np.swapaxes(cond, -1, -2)))

    n = path.n_times - 1
    level = path.level + 1
    z = np.empty((2 * n + 1,) + path.z.shape[1:], dtype=np.complex128)
    b = np.empty_like(z)
    z[0::2], b[0::2] = path.z, path.b
    for step in range(n):
        z0, z1 = table.to_polar(path.z[step]), table.to_polar(path.z[step + 1])
        b0, b1 = table.to_polar(path.b[step]), table.to_polar(path.b[step + 1])
        y = np.stack([z1 - (a**2)[:, None] * z0, b1 - b0], -1)              # (m, pol, 2)
        mean = np.einsum("mij,mpj->mpi", gain, y)
        noise = complex_normals(draw_normals(table, path.seed, step, level))  # (m, pol, 2)
        x = mean + np.einsum("mij,mpj->mpi", factor, noise)
        z[2 * step + 1] = table.from_polar(a[:, None] * z0 + x[..., 0])
        b[2 * step + 1] = table.from_polar(b0 + x[..., 1])
    return replace(path, h=tau, z=z, b=b, level=level, T_L=None)
