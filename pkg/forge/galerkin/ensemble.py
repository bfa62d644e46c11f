"""
Ensemble runner, energy statistics and moment tables for the Galerkin system.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .config import GalerkinConfig
from .solver import PathRecord, prepare_initial, simulate_path
from ..core.config import get_settings
from ..spectral.norms import l2_norm

logger = logging.getLogger(__name__)


def member_seed(seed: int, member: int) -> int:
    return int(np.random.SeedSequence([seed, member]).generate_state(1, dtype=np.uint64)[0])


def _mean_se(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = samples.shape[0]
    mean = samples.mean(axis=0)
    if m < 2:
        return mean, np.zeros_like(mean)
    return mean, samples.std(axis=0, ddof=1) / math.sqrt(m)


@dataclass
class EnsembleStats:
    """Ensemble means over M members at the stored times."""

    times: np.ndarray
    n_members: int
    x0_energy: float                  # ‖x₀‖²
    mean_energy: np.ndarray           # E‖x(t)‖²
    se: np.ndarray
    se_half: np.ndarray               # same, from the first half of the members
    mean_dissipation: np.ndarray      # E‖(−Δ)^{α/2}x(t)‖²
    identity_residual: np.ndarray     # E‖x‖² + 2∫E‖(−Δ)^{α/2}x‖² − ‖x₀‖² − t·Tr(ΠGG*Π)
    identity_se: np.ndarray
    truncated_trace: float
    full_trace: float
    moments: dict[float, np.ndarray] = field(default_factory=dict)   # q → E sup_{u≤t}‖x(u)‖^{2q}

    @property
    def inequality_bound(self) -> np.ndarray:
        """‖x₀‖² + t·Tr(GG*)."""
        return self.x0_energy + self.times * self.full_trace

    def identity_holds(self, n_se: float = 3.0) -> bool:
        return bool(np.all(np.abs(self.identity_residual) <= n_se * self.identity_se + 1e-14))

    def inequality_holds(self, n_se: float = 3.0) -> bool:
        return bool(np.all(self.mean_energy <= self.inequality_bound + n_se * self.se + 1e-14))

    def se_scaling(self) -> float:
        """Ratio of the half-ensemble SE to the full SE at the final time, divided by √2."""
        if self.se[-1] == 0:
            return 1.0
        return float(self.se_half[-1] / self.se[-1] / math.sqrt(2.0))

    def rows(self) -> list[list]:
        return [
            [t, e, s, d, r]
            for t, e, s, d, r in zip(self.times, self.mean_energy, self.se, self.mean_dissipation, self.identity_residual)
        ]


def _identity_samples(records: Sequence[PathRecord], x0_energy: float, trace: float) -> np.ndarray:
    out = []
    for rec in records:
        diss = cumulative_trapezoid(rec.dissipation, rec.times, initial=0.0)
        out.append(rec.energy + 2.0 * diss - x0_energy - rec.times * trace)
    return np.array(out)


def _sup_moment(records: Sequence[PathRecord], q: float) -> np.ndarray:
    return np.array([np.maximum.accumulate(rec.energy**q) for rec in records])


def summarize(records: Sequence[PathRecord], config: GalerkinConfig, q_list: Sequence[float] = (1.0,)) -> EnsembleStats:
    """Fixed-order reduction of per-member records."""
    x0_energy = float(l2_norm(prepare_initial(config))) ** 2
    energy = np.array([r.energy for r in records])
    half = max(len(records) // 2, 1)
    mean_e, se = _mean_se(energy)
    _, se_half = _mean_se(energy[:half])
    trunc = config.truncated_spectrum.truncated_trace(config.cutoff) if config.noise else 0.0
    full = config.spectrum.trace() if config.noise else 0.0
    resid, resid_se = _mean_se(_identity_samples(records, x0_energy, trunc))
    stats = EnsembleStats(
        times=records[0].times,
        n_members=len(records),
        x0_energy=x0_energy,
        mean_energy=mean_e,
        se=se,
        se_half=se_half,
        mean_dissipation=np.array([r.dissipation for r in records]).mean(axis=0),
        identity_residual=resid,
        identity_se=resid_se,
        truncated_trace=trunc,
        full_trace=full,
    )
    for q in q_list:
        stats.moments[q] = _sup_moment(records, q).mean(axis=0)
    return stats


def run_ensemble(
    config: GalerkinConfig,
    keep_paths: bool = False,
    q_list: Sequence[float] = (1.0,),
) -> tuple[EnsembleStats, list[PathRecord]]:
    """M independent members, parallel over members, reduced in member order."""
    seeds = [member_seed(config.seed, m) for m in range(config.ensemble)]
    workers = min(get_settings().threads, config.ensemble)
    logger.info(
        "Galerkin ensemble: M=%d K_G=%d N=%d dt=%g T=%g workers=%d",
        config.ensemble, config.cutoff, config.grid.n, config.dt, config.T, workers,
    )
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda s: simulate_path(config, s), seeds))
    else:
        records = [simulate_path(config, s) for s in seeds]
    stats = summarize(records, config, q_list)
    logger.info(
        "Galerkin ensemble done: E‖x(T)‖²=%.6g ± %.2g, identity residual %.3g (se %.2g)",
        stats.mean_energy[-1], stats.se[-1], stats.identity_residual[-1], stats.identity_se[-1],
    )
    return stats, records if keep_paths else []


# ── Moment bounds ────────────────────────────────────────────────────

@dataclass
class MomentReport:
    """E[sup_{u≤t}‖x(u)‖^{2q} + ∫₀ᵗ‖x‖^{2(q−1)}‖x‖²_{H^γ}] against C_{t,q}(‖x₀‖^{2q}+1), γ = α."""

    times: np.ndarray
    q_list: list[float]
    x0_norms: list[float]                                   # ‖x₀‖ of every sampled initial datum
    lhs: dict[tuple[float, int], np.ndarray] = field(default_factory=dict)      # (q, datum) → series
    constants: dict[float, np.ndarray] = field(default_factory=dict)             # q → fitted C_{t,q}
    stability: dict[float, float] = field(default_factory=dict)                  # q → max rel. change under halving

    def bound(self, q: float, x0_norm: float) -> np.ndarray:
        return self.constants[q] * (x0_norm ** (2 * q) + 1.0)

    def respected(self) -> bool:
        return all(
            np.all(self.lhs[(q, i)] <= self.bound(q, r) * (1 + 1e-12))
            for q in self.q_list for i, r in enumerate(self.x0_norms)
        )

    def stable(self, tolerance: float = 0.25) -> bool:
        return all(v <= tolerance for v in self.stability.values())

    def rows(self) -> list[dict]:
        out = []
        for q in self.q_list:
            for i, r in enumerate(self.x0_norms):
                for t, v, c in zip(self.times, self.lhs[(q, i)], self.constants[q]):
                    out.append({"q": q, "x0_norm": r, "t": t, "lhs": v, "C_tq": c, "rhs": c * (r ** (2 * q) + 1)})
        return out


def _moment_samples(records: Sequence[PathRecord], q: float) -> np.ndarray:
    out = []
    for rec in records:
        sup = np.maximum.accumulate(rec.energy**q)
        integrand = rec.energy ** (q - 1.0) * rec.h_gamma if q != 1 else rec.h_gamma
        out.append(sup + cumulative_trapezoid(integrand, rec.times, initial=0.0))
    return np.array(out)


def moment_report(
    data: Sequence[tuple[float, Sequence[PathRecord]]],
    q_list: Sequence[float],
) -> MomentReport:
    """data: (‖x₀‖, stored member records) per initial datum; C_{t,q} is the smallest common constant."""
    if not data:
        raise ValueError("moment_report needs at least one initial datum")
    times = data[0][1][0].times
    report = MomentReport(times=times, q_list=list(q_list), x0_norms=[float(r) for r, _ in data])
    for q in q_list:
        full_c, half_c = np.zeros_like(times), np.zeros_like(times)
        for i, (r, records) in enumerate(data):
            samples = _moment_samples(records, q)
            scale = r ** (2 * q) + 1.0
            mean = samples.mean(axis=0)
            report.lhs[(q, i)] = mean
            full_c = np.maximum(full_c, mean / scale)
            half_c = np.maximum(half_c, samples[: max(len(records) // 2, 1)].mean(axis=0) / scale)
        report.constants[q] = full_c
        nz = full_c > 0
        report.stability[q] = float(np.max(np.abs(full_c[nz] - half_c[nz]) / full_c[nz])) if nz.any() else 0.0
        if not np.all(np.isfinite(full_c)):
            logger.warning("moment constant for q=%g is not finite", q)
    logger.info("Moment report: q=%s over %d initial data", list(q_list), len(data))
    return report
