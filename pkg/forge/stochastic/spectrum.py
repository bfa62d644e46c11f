"""
Noise covariance GG* = amplitude·(−Δ)^{−ρ} on divergence-free modes.
"""

import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

# Lattice box used for the explicit part of the full trace; the rest is an integral tail.
_TRACE_BOX = 48


class NoiseSpectrum(BaseModel):
    model_config = ConfigDict(frozen=True)

    rho: float = Field(default=4.5, gt=0.0)
    alpha: float = Field(default=0.25, gt=0.0, lt=0.5)
    sigma: float = Field(default=0.01, gt=0.0)
    amplitude: float = Field(default=1e-3, ge=0.0)
    shell_cutoff: Optional[int] = Field(default=None, ge=1)      # max |k|∞ carrying noise
    support: Optional[tuple[tuple[int, int, int], ...]] = None   # explicit ±k support

    @model_validator(mode="after")
    def _trace_class(self) -> "NoiseSpectrum":
        if 2 * self.alpha * self.rho0 + 2 * self.rho <= 3:
            raise ValueError(
                f"weighted trace diverges: 2αρ0 + 2ρ = {2 * self.alpha * self.rho0 + 2 * self.rho:.4g} ≤ 3"
            )
        if self.support is None and self.shell_cutoff is None and 2 * self.rho <= 3:
            raise ValueError(f"Tr(GG*) diverges for ρ = {self.rho} on the full lattice")
        return self

    @property
    def rho0(self) -> float:
        return (5 + 2 * self.sigma - 2 * self.alpha) / (2 * self.alpha)

    def q(self, k: np.ndarray) -> np.ndarray:
        """q_k for integer wavevectors k of shape (..., 3); zero at k = 0 and off support."""
        k = np.asarray(k)
        kk = np.sum(k.astype(np.float64) ** 2, axis=-1)
        out = np.zeros_like(kk)
        np.power(kk, -self.rho, out=out, where=kk > 0)
        out *= self.amplitude
        return out * self.support_mask(k)

    def support_mask(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k)
        mask = np.ones(k.shape[:-1], dtype=bool)
        if self.shell_cutoff is not None:
            mask &= np.max(np.abs(k), axis=-1) <= self.shell_cutoff
        if self.support is not None:
            allowed = {tuple(s) for s in self.support} | {tuple(-c for c in s) for s in self.support}
            flat = k.reshape(-1, 3)
            mask &= np.array([tuple(int(c) for c in v) in allowed for v in flat]).reshape(mask.shape)
        return mask

    def _lattice_sum(self, cutoff: int, weight_power: float = 0.0) -> float:
        r = np.arange(-cutoff, cutoff + 1)
        k = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
        kk = np.sum(k.astype(np.float64) ** 2, axis=-1)
        w = np.zeros_like(kk)
        np.power(kk, -weight_power, out=w, where=kk > 0)
        # two divergence-free polarizations per k ≠ 0
        return float(2.0 * np.sum(self.q(k) * w))

    def truncated_trace(self, cutoff: int) -> float:
        """Tr(Π GG* Π) over 0 < |k|∞ ≤ cutoff."""
        return self._lattice_sum(cutoff)

    def trace(self) -> float:
        """Tr(GG*): exact for finite support, else box sum plus the integral tail 8π·A·K^{3−2ρ}/(2ρ−3)."""
        finite = self.support is not None or self.shell_cutoff is not None
        if finite:
            box = self.shell_cutoff or max(max(abs(c) for c in s) for s in self.support)
            return self._lattice_sum(box)
        tail = 8.0 * math.pi * self.amplitude * _TRACE_BOX ** (3 - 2 * self.rho) / (2 * self.rho - 3)
        return self._lattice_sum(_TRACE_BOX) + tail

    def weighted_trace(self) -> float:
        """Σ |k|^{−2αρ0} q_k with multiplicity 2, on the same box as trace()."""
        box = self.shell_cutoff or (max(max(abs(c) for c in s) for s in self.support) if self.support else _TRACE_BOX)
        return self._lattice_sum(box, weight_power=self.alpha * self.rho0)

    def regularity_trace(self) -> float:
        """Σ |k|^{+2αρ0} q_k, the reading with the opposite exponent sign, reported for comparison."""
        box = self.shell_cutoff or (max(max(abs(c) for c in s) for s in self.support) if self.support else _TRACE_BOX)
        return self._lattice_sum(box, weight_power=-self.alpha * self.rho0)

    def cov_norm_sq(self, e_coeffs: np.ndarray, k_vectors: np.ndarray, weights: np.ndarray) -> float:
        """‖G*e‖² = Σ_k q_k |ê_k|² for half-spectrum coefficients e (3, N, N, N//2+1)."""
        q = self.q(np.moveaxis(k_vectors, 0, -1).astype(np.int64))
        return float(np.sum(q * weights * np.sum(np.abs(e_coeffs) ** 2, axis=0)))
