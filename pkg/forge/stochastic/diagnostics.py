"""
Empirical martingale and regularity diagnostics over path ensembles.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid

from .functionals import drift_series
from .ou import OUPath
from .spectrum import NoiseSpectrum
from .stopping import path_holder_quotient
from ..spectral.field import FourierField
from ..spectral.operators import divergence_ratio, inner
from ..spectral.norms import l2_norm

logger = logging.getLogger(__name__)


@dataclass
class MartingaleReport:
    n_paths: int
    s: float
    t: float
    mean_increment: float
    mean_se: float
    mean_z: float
    proxy_z: dict[str, float] = field(default_factory=dict)   # correlation z-scores against past functionals
    variance: float = 0.0
    variance_se: float = 0.0
    variance_target: float = 0.0
    variance_z: float = 0.0

    def max_abs_z(self) -> float:
        return max([abs(self.mean_z)] + [abs(v) for v in self.proxy_z.values()])

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _zscore(value: float, se: float) -> float:
    if se > 0:
        return value / se
    return 0.0 if value == 0 else math.copysign(math.inf, value)


def _bounded(v: np.ndarray) -> np.ndarray:
    spread = float(np.std(v))
    return np.tanh((v - float(np.mean(v))) / spread) if spread > 0 else np.zeros_like(v)


def martingale_diagnostics(
    paths: Sequence[FourierField],
    h: float,
    alpha: float,
    spectrum: NoiseSpectrum,
    e: FourierField,
    s_index: int,
    t_index: int,
    min_members: int = 100,
) -> MartingaleReport:
    """Increment M^e(t) − M^e(s) with M^e = ⟨x(t) − x₀, e⟩ − ∫⟨F_α(x), e⟩ across the ensemble."""
    if len(paths) < max(min_members, 2):
        raise ValueError(f"degenerate ensemble: {len(paths)} paths, need ≥ {max(min_members, 2)}")
    if not 0 <= s_index < t_index:
        raise ValueError("need s < t")
    if divergence_ratio(e) > 1e-10:
        raise ValueError("test field must be divergence-free")

    inc, g_lin, g_energy, g_mid = [], [], [], []
    for x in paths:
        window = x.at(slice(s_index, t_index + 1))
        drift = window.with_coeffs(drift_series(window, alpha))
        pair = inner(drift, e)
        inc.append(float(inner(x.at(t_index), e) - inner(x.at(s_index), e)) - float(trapezoid(pair, dx=h)))
        g_lin.append(float(inner(x.at(s_index), e)))
        g_energy.append(float(l2_norm(x.at(s_index)) ** 2))
        g_mid.append(float(inner(x.at(s_index // 2), e)))
    d = np.array(inc)
    m = d.size
    centered = d - d.mean()
    mean_se = float(np.std(d, ddof=1) / math.sqrt(m))
    report = MartingaleReport(
        n_paths=m, s=s_index * h, t=t_index * h,
        mean_increment=float(d.mean()), mean_se=mean_se, mean_z=_zscore(float(d.mean()), mean_se),
    )
    proxies = {
        "tanh_pairing_s": _bounded(np.array(g_lin)),
        "tanh_energy_s": _bounded(np.array(g_energy)),
        "sign_pairing_mid": np.sign(np.array(g_mid) - np.median(g_mid)),
    }
    for name, g in proxies.items():
        prod = d * (g - g.mean())
        se = float(np.std(prod, ddof=1) / math.sqrt(m))
        report.proxy_z[name] = _zscore(float(prod.mean()), se)

    var = float(np.mean(centered**2)) * m / (m - 1)
    m4 = float(np.mean(centered**4))
    report.variance = var
    report.variance_se = math.sqrt(max(m4 - var**2, 0.0) / m)
    grid = e.grid
    report.variance_target = (t_index - s_index) * h * spectrum.cov_norm_sq(
        np.asarray(e.coeffs), grid.k_vector(), grid.half_weights()
    )
    report.variance_z = _zscore(var - report.variance_target, report.variance_se)
    logger.info(
        "Martingale check: mean z=%.2f, var=%.4g target=%.4g (z=%.2f)",
        report.mean_z, var, report.variance_target, report.variance_z,
    )
    return report


def regularity_moments(paths: Sequence[OUPath], delta: float) -> dict:
    """Ensemble means of sup_t‖z‖_{H^{(5+σ)/2}} and the C_t^{1/2−2δ}H^{(3+σ)/2} norm, with a doubling check."""
    if len(paths) < 2:
        raise ValueError("need at least two paths")
    sup_sob, holder = [], []
    for p in paths:
        sigma = p.spectrum.sigma
        sup_sob.append(float(np.max(p.sobolev_norms((5 + sigma) / 2))))
        q = path_holder_quotient(p, delta)
        holder.append(float(np.max(p.sobolev_norms((3 + sigma) / 2)) + q[-1]))
    half = len(paths) // 2
    out = {}
    for name, vals in (("sup_H5", np.array(sup_sob)), ("holder_H3", np.array(holder))):
        full, part = float(vals.mean()), float(vals[:half].mean())
        out[name] = {
            "mean": full,
            "mean_half": part,
            "relative_change": abs(full - part) / full if full > 0 else 0.0,
        }
    return out
