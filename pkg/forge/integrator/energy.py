"""
Energy bookkeeping for u = v + z against the Galerkin energy inequality.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .state import energy_profile
from ..spectral.field import FourierField
from ..spectral.norms import l2_norm

logger = logging.getLogger(__name__)


@dataclass
class EnergyGapReport:
    T: float
    K: float
    u_energy: float             # ‖u(T)‖²
    u0_energy: float            # ‖u(0)‖²
    trace: float                # Tr(GG*)
    threshold: float            # K(‖u(0)‖² + T·Tr)
    galerkin_bound: float       # ‖x₀‖² + T·Tr, x₀ = u(0)
    v_norm: float               # ‖v(T)‖
    growth_bound: float         # (‖v(0)‖ + L)e^{LT}
    rows: list[list] = field(default_factory=list)   # t, ‖v‖, ‖u‖, M^{1/2}

    @property
    def gap(self) -> float:
        return self.u_energy - self.threshold

    @property
    def exhibited(self) -> bool:
        return self.T > 0 and self.gap > 0

    def to_json(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "rows"}
        out.update(gap=self.gap, exhibited=self.exhibited)
        return out


def energy_gap_report(
    v: FourierField,
    z: FourierField,
    times: np.ndarray,
    L: float,
    T: float,
    trace: float,
    K: float = 4.0,
) -> EnergyGapReport:
    """v and z are series sampled at times; T must be one of them (T ≤ T_L)."""
    i0 = int(np.argmin(np.abs(times)))
    iT = int(np.argmin(np.abs(times - T)))
    if not math.isclose(times[iT], T, abs_tol=1e-9) or not math.isclose(times[i0], 0.0, abs_tol=1e-12):
        raise ValueError(f"times do not contain both 0 and T={T}")
    u = v + z
    v_norm = np.asarray(l2_norm(v))
    u_norm = np.asarray(l2_norm(u))
    m_half = np.sqrt(energy_profile(times, L))
    u0 = float(u_norm[i0]) ** 2
    report = EnergyGapReport(
        T=T,
        K=K,
        u_energy=float(u_norm[iT]) ** 2,
        u0_energy=u0,
        trace=trace,
        threshold=K * (u0 + T * trace),
        galerkin_bound=u0 + T * trace,
        v_norm=float(v_norm[iT]),
        growth_bound=(float(v_norm[i0]) + L) * math.exp(L * T),
        rows=[[t, a, b, c] for t, a, b, c in zip(times[i0:iT + 1], v_norm[i0:iT + 1], u_norm[i0:iT + 1], m_half[i0:iT + 1])],
    )
    logger.info(
        "Energy: ‖u(T)‖²=%.6g vs K(‖u(0)‖²+T·Tr)=%.6g (gap %.3g)", report.u_energy, report.threshold, report.gap,
    )
    return report
