"""
Temporal cutoffs χ_j(t) = χ(μt − j) with Σ_j χ_j² = 1.
"""

import math
from dataclasses import dataclass

import numpy as np

from .mollify import bump

_HALF_WIDTH = 0.75


def psi(s: np.ndarray) -> np.ndarray:
    """Bump supported on (−3/4, 3/4)."""
    return bump(np.asarray(s, dtype=np.float64) / _HALF_WIDTH)


def chi(s: np.ndarray) -> np.ndarray:
    """χ = (ψ / Σ_l ψ(· − l))^{1/2}."""
    s = np.asarray(s, dtype=np.float64)
    r = s - np.round(s)
    total = psi(r - 1.0) + psi(r) + psi(r + 1.0)
    return np.sqrt(psi(s) / total)


@dataclass(frozen=True)
class CutoffFamily:
    mu: float
    times: np.ndarray
    indices: tuple[int, ...]

    def values(self, j: int) -> np.ndarray:
        return chi(self.mu * self.times - j)

    def support(self, j: int) -> np.ndarray:
        """Boolean mask of samples in supp χ_j."""
        s = self.mu * self.times - j
        return np.abs(s) < _HALF_WIDTH

    def anchor(self, j: int) -> float:
        return j / self.mu

    def active(self, n: int) -> list[int]:
        return [j for j in self.indices if self.support(j)[n]]

    def partition_error(self) -> float:
        total = sum(self.values(j) ** 2 for j in self.indices)
        return float(np.max(np.abs(total - 1.0)))

    def max_overlap(self) -> int:
        return int(np.max(sum(self.support(j).astype(int) for j in self.indices)))


def build_cutoffs(mu: float, times: np.ndarray) -> CutoffFamily:
    """Every j whose support meets the sampled times."""
    if mu <= 0:
        raise ValueError(f"μ must be positive, got {mu}")
    lo = math.floor(mu * times[0] - _HALF_WIDTH)
    hi = math.ceil(mu * times[-1] + _HALF_WIDTH)
    family = CutoffFamily(mu=mu, times=np.asarray(times, dtype=np.float64), indices=())
    indices = tuple(j for j in range(lo, hi + 1) if family.support(j).any())
    return CutoffFamily(mu=mu, times=family.times, indices=indices)
