"""
Stopping times T_L (noise path) and τ_L (path functional Z^x).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .functionals import SignConvention, m_process, z_functional
from .ou import OUPath
from ..core.errors import InvariantError
from ..core.flags import get_flags
from ..spectral.field import FourierField, inverse
from ..spectral.grid import TorusGrid
from ..spectral.norms import derivative_coeffs, sobolev_norm

logger = logging.getLogger(__name__)


@dataclass
class StoppingClock:
    L: float
    delta: float
    C_S: float
    T_L: float
    index: Optional[int] = None                         # first crossing sample, None when capped
    reason: str = "cap"                                 # "sobolev", "holder" or "cap"
    thresholds: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)          # measured sup ‖z‖∞, ‖∇z‖∞ before T_L

    def __post_init__(self):
        if not 0.0 <= self.T_L <= self.L:
            raise ValueError(f"T_L={self.T_L} outside [0, L={self.L}]")

    def to_json(self) -> dict:
        return {
            "L": self.L, "delta": self.delta, "C_S": self.C_S, "T_L": self.T_L,
            "reason": self.reason, "thresholds": self.thresholds, "bounds": self.bounds,
        }


def sobolev_constant(grid: TorusGrid, sigma: float) -> tuple[float, float, float]:
    """(C_1, C_2, C_S) for the embeddings used by the stopping rule.

    C_2 bounds ‖f‖_{L∞} by ‖f‖_{H^{(3+σ)/2}} on the band (Cauchy–Schwarz over the
    coefficients); C_1 = 1 bounds ‖∇f‖_{H^{(3+σ)/2}} by ‖f‖_{H^{(5+σ)/2}}.
    """
    kx, ky, kz = np.meshgrid(*(np.arange(-grid.max_wavenumber, grid.max_wavenumber + 1),) * 3, indexing="ij")
    kk = (kx**2 + ky**2 + kz**2).astype(np.float64)
    c2 = math.sqrt(float(np.sum((1.0 + kk) ** (-(3.0 + sigma) / 2.0))))
    c1 = 1.0
    return c1, c2, max(c1 * c2, c2)


def running_holder_quotient(y: np.ndarray, times: np.ndarray, exponent: float, h: float) -> np.ndarray:
    """max over sample pairs i < j ≤ n with h ≤ t_j − t_i ≤ 1 of |y_j − y_i| / (t_j − t_i)^exponent.

    y holds already-weighted coefficient vectors (n_t, D), so |·| is the target norm.
    """
    flat = y.reshape(y.shape[0], -1)
    gram = np.real(flat @ np.conj(flat).T)
    sq = np.diag(gram)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * gram, 0.0)
    sep = times[None, :] - times[:, None]                    # t_j − t_i at [i, j]
    valid = (sep >= h * (1 - 1e-9)) & (sep <= 1.0 + 1e-12)
    quot = np.where(valid, np.sqrt(d2) / np.where(valid, sep, 1.0) ** exponent, 0.0)
    return np.maximum.accumulate(np.max(quot, axis=0))


def _path_weighted(path: OUPath, s: float) -> np.ndarray:
    kk = np.sum(path.table.k.astype(np.float64) ** 2, axis=-1)
    return path.z * np.sqrt(2.0 * np.power(1.0 + kk, s))


def path_holder_quotient(path: OUPath, delta: float) -> np.ndarray:
    """Running C_t^{1/2−2δ}H^{(3+σ)/2} quotient of the noise path."""
    return running_holder_quotient(_path_weighted(path, (3 + path.spectrum.sigma) / 2), path.times, 0.5 - 2 * delta, path.h)


def _field_weighted(x: FourierField, s: float) -> np.ndarray:
    w = x.grid.half_weights() * np.power(1.0 + x.grid.k_squared(), s)
    return np.asarray(x.coeffs) * np.sqrt(w)


def _check_bounds(path: OUPath, stop: int, L: float) -> dict:
    """sup_{t < T_L} of ‖z‖∞ and ‖∇z‖∞."""
    sup_z, sup_grad = 0.0, 0.0
    for start in range(0, stop, 32):
        part = path.series(slice(start, min(start + 32, stop)))
        vals = part.physical()
        sup_z = max(sup_z, float(np.max(np.sqrt(np.sum(vals**2, axis=-4)))))
        g2 = sum(np.sum(inverse(derivative_coeffs(part, (j,)), part.grid.n) ** 2, axis=-4) for j in range(3))
        sup_grad = max(sup_grad, float(np.max(np.sqrt(g2))))
    bound = L**0.25
    if get_flags().assert_z_bounds:
        for name, value in (("sup ‖z‖∞ before T_L", sup_z), ("sup ‖∇z‖∞ before T_L", sup_grad)):
            if value > bound:
                raise InvariantError(name, value, bound)
    return {"sup_z": sup_z, "sup_grad_z": sup_grad, "bound": bound}


def stopping_time_TL(path: OUPath, L: float, delta: float, C_S: Optional[float] = None) -> StoppingClock:
    if L <= 1:
        raise ValueError(f"L must exceed 1, got {L}")
    if path.horizon < L * (1 - 1e-12):
        raise ValueError(f"path horizon {path.horizon} is shorter than L = {L}")
    sigma = path.spectrum.sigma
    if C_S is None:
        C_S = sobolev_constant(path.grid, sigma)[2]
    times = path.times
    thr_sob = L**0.25 / C_S
    thr_hol = L**0.5 / C_S
    sob = path.sobolev_norms((5 + sigma) / 2)
    hol = path_holder_quotient(path, delta)
    hits = np.nonzero(((sob >= thr_sob) | (hol >= thr_hol)) & (times <= L))[0]
    thresholds = {"sobolev": thr_sob, "holder": thr_hol}
    if hits.size:
        idx = int(hits[0])
        reason = "sobolev" if sob[idx] >= thr_sob else "holder"
        t_l, stop = float(times[idx]), idx
    else:
        idx, reason, t_l = None, "cap", float(L)
        stop = int(np.searchsorted(times, L, side="left"))
    bounds = _check_bounds(path, stop, L)
    logger.info("T_L = %.6g (%s) for L=%g", t_l, reason, L)
    return StoppingClock(L=L, delta=delta, C_S=C_S, T_L=t_l, index=idx, reason=reason, thresholds=thresholds, bounds=bounds)


@dataclass
class TauReport:
    L: float
    tau_n: dict[int, float]
    tau_L: float
    n_max: int
    censored: bool                          # horizon ended before L without a crossing
    convention: SignConvention

    def nondecreasing(self) -> bool:
        vals = [self.tau_n[n] for n in sorted(self.tau_n)]
        return all(a <= b for a, b in zip(vals, vals[1:]))


def stopping_time_tauL(
    x: FourierField,
    h: float,
    alpha: float,
    sigma: float,
    L: float,
    n_values: Iterable[int],
    delta: float,
    C_S: Optional[float] = None,
    convention: SignConvention = SignConvention.MARTINGALE,
    z_of_x: Optional[FourierField] = None,
) -> TauReport:
    """τ^n_L = inf{t : ‖Z^x‖_{H^{(5+σ)/2}} > (L−1/n)^{1/4}/C_S or Hölder quotient > (L−1/n)^{1/2}/C_S} ∧ L."""
    if C_S is None:
        C_S = sobolev_constant(x.grid, sigma)[2]
    if z_of_x is None:
        z_of_x = z_functional(m_process(x, h, alpha, convention), h, alpha, convention)
    n_t = z_of_x.batch_shape[0]
    times = np.arange(n_t) * h
    sob = sobolev_norm(z_of_x, (5 + sigma) / 2)
    hol = running_holder_quotient(_field_weighted(z_of_x, (3 + sigma) / 2), times, 0.5 - 2 * delta, h)
    cap = min(L, float(times[-1]))
    tau_n = {}
    for n in sorted(set(n_values)):
        if L - 1.0 / n <= 0:
            raise ValueError(f"L − 1/n must be positive (L={L}, n={n})")
        thr_sob = (L - 1.0 / n) ** 0.25 / C_S
        thr_hol = (L - 1.0 / n) ** 0.5 / C_S
        hits = np.nonzero(((sob > thr_sob) | (hol > thr_hol)) & (times <= L))[0]
        tau_n[n] = float(times[hits[0]]) if hits.size else cap
    n_max = max(tau_n)
    censored = cap < L and tau_n[n_max] == cap
    return TauReport(L=L, tau_n=tau_n, tau_L=tau_n[n_max], n_max=n_max, censored=censored, convention=convention)
