"""
Norm estimators.

L² and H^s are exact on coefficients. C⁰, C¹, C^N and Hölder seminorms are
grid maxima of physical values and spectral derivatives. All functions accept
batched fields and return one value per batch entry.
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Optional

import numpy as np

from .field import FourierField, Rank, inverse
from .grid import TorusGrid

logger = logging.getLogger(__name__)


@dataclass
class NormReport:
    """Norms of one field."""

    l2: float = 0.0
    sobolev: dict[float, float] = field(default_factory=dict)   # s → ‖f‖_{H^s}
    c0: float = 0.0
    c1: float = 0.0
    holder: dict[float, float] = field(default_factory=dict)    # γ → [f]_{C^γ}
    overflow: list[float] = field(default_factory=list)         # s values that overflowed

    def as_row(self) -> dict:
        row = {"l2": self.l2, "c0": self.c0, "c1": self.c1}
        row.update({f"H{s:g}": v for s, v in self.sobolev.items()})
        row.update({f"C{g:g}": v for g, v in self.holder.items()})
        return row


def _component_axes(f: FourierField) -> tuple[int, ...]:
    nc = len(f.rank.component_shape)
    return tuple(range(-3 - nc, -3))


def _spatial_axes(f: FourierField) -> tuple[int, ...]:
    nc = len(f.rank.component_shape)
    return tuple(range(-3 - nc, 0))


def weighted_square_sum(f: FourierField, weight: np.ndarray) -> np.ndarray:
    w = f.grid.half_weights() * weight
    return np.sum(np.abs(f.coeffs) ** 2 * w, axis=_spatial_axes(f))


def l2_norm(f: FourierField) -> np.ndarray:
    return np.sqrt(weighted_square_sum(f, np.ones(f.grid.spectral_shape)))


def sobolev_norm(f: FourierField, s: float) -> np.ndarray:
    with np.errstate(over="ignore"):
        weight = np.power(1.0 + f.grid.k_squared(), s)
        out = np.sqrt(weighted_square_sum(f, weight))
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"H^{s} norm overflowed on N={f.grid.n}")
    return out


def hminus3_norm(f: FourierField) -> np.ndarray:
    return sobolev_norm(f, -3.0)


def homogeneous_norm(f: FourierField, s: float) -> np.ndarray:
    """‖(−Δ)^{s/2} f‖_{L²}."""
    kk = f.grid.k_squared()
    weight = np.zeros_like(kk)
    np.power(kk, s, out=weight, where=kk > 0)
    return np.sqrt(weighted_square_sum(f, weight))


def magnitude(values: np.ndarray, rank: Rank) -> np.ndarray:
    """Pointwise |·|: absolute value, Euclidean or Frobenius norm."""
    if rank is Rank.SCALAR:
        return np.abs(values)
    axes = (-4,) if rank is Rank.VECTOR else (-5, -4)
    return np.sqrt(np.sum(values**2, axis=axes))


def _space_max(a: np.ndarray) -> np.ndarray:
    return np.max(a, axis=(-3, -2, -1))


def c0_norm(f: FourierField) -> np.ndarray:
    return _space_max(magnitude(f.physical(), f.rank))


def derivative_coeffs(f: FourierField, multi_index: Iterable[int]) -> np.ndarray:
    k = f.grid.k_vector()
    c = f.coeffs
    for j in multi_index:
        c = 1j * k[j] * c
    return c


def derivative_magnitude(f: FourierField, order: int) -> np.ndarray:
    """Grid max of |∇^order f|, summed over all ordered multi-indices."""
    if order == 0:
        return c0_norm(f)
    total = 0.0
    for idx in product(range(3), repeat=order):
        sq = inverse(derivative_coeffs(f, idx), f.grid.n) ** 2
        if f.rank is not Rank.SCALAR:
            sq = np.sum(sq, axis=_component_axes(f))
        total = total + sq
    return _space_max(np.sqrt(total))


def c1_norm(f: FourierField) -> np.ndarray:
    return c0_norm(f) + derivative_magnitude(f, 1)


def cn_norm(f: FourierField, order: int) -> np.ndarray:
    """Σ_{m=0}^{order} [f]_{C^m}; the defining sum is read with the running index."""
    return sum(derivative_magnitude(f, m) for m in range(order + 1))


def holder_seminorm(f: FourierField, gamma: float) -> np.ndarray:
    """max over axes and dyadic h = 2^m·spacing ≤ π of |f(x+h e_i) − f(x)| / h^γ."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"Hölder exponent must lie in (0, 1), got {gamma}")
    vals = f.physical()
    best = np.zeros(f.batch_shape)
    shift = 1
    while shift <= f.grid.n // 2:
        h = shift * f.grid.spacing
        for axis in (-3, -2, -1):
            diff = np.roll(vals, -shift, axis=axis) - vals
            best = np.maximum(best, _space_max(magnitude(diff, f.rank)) / h**gamma)
        shift *= 2
    return best


def norm_report(f: FourierField, s_list: Iterable[float] = (), gamma_list: Iterable[float] = ()) -> NormReport:
    if f.batch_shape:
        raise ValueError("norm_report takes a single field; use the array norms for series")
    report = NormReport(l2=float(l2_norm(f)), c0=float(c0_norm(f)))
    report.c1 = report.c0 + float(derivative_magnitude(f, 1))
    for s in s_list:
        try:
            report.sobolev[s] = float(sobolev_norm(f, s))
        except OverflowError:
            logger.warning("H^%s norm overflowed; reported as inf", s)
            report.sobolev[s] = math.inf
            report.overflow.append(s)
    for g in gamma_list:
        report.holder[g] = float(holder_seminorm(f, g))
    return report


# ── Time series ──────────────────────────────────────────────────────

def time_derivative(a: np.ndarray, dt: float) -> np.ndarray:
    """d/dt along axis 0: 4th-order centered interior, 2nd-order at and next to the ends."""
    n = a.shape[0]
    if n < 3:
        raise ValueError("time derivative needs at least three samples")
    out = np.empty_like(a)
    out[0] = (-3.0 * a[0] + 4.0 * a[1] - a[2]) / (2.0 * dt)
    out[-1] = (3.0 * a[-1] - 4.0 * a[-2] + a[-3]) / (2.0 * dt)
    out[1:-1] = (a[2:] - a[:-2]) / (2.0 * dt)
    if n >= 5:
        out[2:-2] = (-a[4:] + 8.0 * a[3:-1] - 8.0 * a[1:-3] + a[:-4]) / (12.0 * dt)
    return out


def c1_tx_norm(series: FourierField, dt: float) -> float:
    """C¹ in (t, x): sup|f| + sup|∂_t f| + sup|∇f| over the series."""
    dfdt = series.with_coeffs(time_derivative(np.asarray(series.coeffs), dt))
    return float(np.max(c0_norm(series)) + np.max(c0_norm(dfdt)) + np.max(derivative_magnitude(series, 1)))


# ── Semigroup smoothing ──────────────────────────────────────────────

@dataclass
class SmoothingFit:
    times: np.ndarray
    measured: np.ndarray          # ‖(−Δ)^{αγ} S_α(t)‖ on the band, per time
    constant: float               # least C with measured ≤ C(t^{−γ} + 1)


def smoothing_constant(
    grid: TorusGrid,
    alpha: float,
    gamma: float,
    times: Optional[np.ndarray] = None,
) -> SmoothingFit:
    """Operator norm of (−Δ)^{αγ} e^{−t(−Δ)^α} on the grid band, fitted against t^{−γ} + 1."""
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    t = np.geomspace(0.01, 1.0, 25) if times is None else np.asarray(times, dtype=np.float64)
    lam = np.power(grid.k_squared()[grid.band_mask()], alpha)
    lam = np.unique(lam[lam > 0])
    measured = np.max(lam[None, :] ** gamma * np.exp(-t[:, None] * lam[None, :]), axis=1)
    constant = float(np.max(measured / (t ** -gamma + 1.0)))
    return SmoothingFit(times=t, measured=measured, constant=constant)
