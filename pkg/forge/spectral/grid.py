"""
Torus grid and its wavevector lattice.

Physical samples live at x_i = i·2π/N on each axis, stored as [..., ix, iy, iz].
Coefficients use the real-FFT half spectrum [..., kx, ky, kz≥0].
"""

import math
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class TorusGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(..., description="Points per axis (even, ≥ 8)")

    @field_validator("n")
    @classmethod
    def _even_and_large(cls, v: int) -> int:
        if v < 8 or v % 2:
            raise ValueError(f"grid size must be even and ≥ 8, got {v}")
        return v

    @property
    def spacing(self) -> float:
        return 2.0 * math.pi / self.n

    @property
    def max_wavenumber(self) -> int:
        return self.n // 2 - 1

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n // 2 + 1)

    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Integer wavevector components, broadcastable to spectral_shape."""
        return _wavenumbers(self.n)

    def k_vector(self) -> np.ndarray:
        """Float array (3, N, N, N//2+1) of wavevectors."""
        return _k_vector(self.n)

    def k_squared(self) -> np.ndarray:
        return _k_squared(self.n)

    def band_mask(self) -> np.ndarray:
        """True where every |k_i| ≤ N/2 − 1."""
        return _band_mask(self.n)

    def dealias_mask(self) -> np.ndarray:
        """2/3 rule: keep 3|k_i| < N."""
        return _dealias_mask(self.n)

    def half_weights(self) -> np.ndarray:
        """Multiplicity of each stored half-spectrum coefficient in the full lattice."""
        return _half_weights(self.n)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Physical coordinates, broadcastable to shape."""
        return _coordinates(self.n)

    def mode_index(self, k: tuple[int, int, int]) -> tuple[int, int, int]:
        """Storage index of lattice vector k (kz ≥ 0 required)."""
        kx, ky, kz = k
        if kz < 0 or kz > self.n // 2:
            raise ValueError(f"kz={kz} is not stored in the half spectrum")
        return (kx % self.n, ky % self.n, kz)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@lru_cache(maxsize=16)
def _wavenumbers(n: int):
    full = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
    half = np.arange(n // 2 + 1, dtype=np.int64)
    return (
        _readonly(full[:, None, None].copy()),
        _readonly(full[None, :, None].copy()),
        _readonly(half[None, None, :].copy()),
    )


@lru_cache(maxsize=16)
def _k_vector(n: int) -> np.ndarray:
    kx, ky, kz = _wavenumbers(n)
    shape = (n, n, n // 2 + 1)
    return _readonly(np.stack([
        np.broadcast_to(kx, shape), np.broadcast_to(ky, shape), np.broadcast_to(kz, shape),
    ]).astype(np.float64))


@lru_cache(maxsize=16)
def _k_squared(n: int) -> np.ndarray:
    kx, ky, kz = _wavenumbers(n)
    return _readonly((kx**2 + ky**2 + kz**2).astype(np.float64))


@lru_cache(maxsize=16)
def _band_mask(n: int) -> np.ndarray:
    kx, ky, kz = _wavenumbers(n)
    m = n // 2 - 1
    return _readonly((np.abs(kx) <= m) & (np.abs(ky) <= m) & (kz <= m))


@lru_cache(maxsize=16)
def _dealias_mask(n: int) -> np.ndarray:
    kx, ky, kz = _wavenumbers(n)
    return _readonly((3 * np.abs(kx) < n) & (3 * np.abs(ky) < n) & (3 * kz < n))


@lru_cache(maxsize=16)
def _half_weights(n: int) -> np.ndarray:
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return _readonly(np.broadcast_to(w[None, None, :], (n, n, n // 2 + 1)).copy())


@lru_cache(maxsize=16)
def _coordinates(n: int):
    x = np.arange(n) * (2.0 * math.pi / n)
    return (
        _readonly(x[:, None, None].copy()),
        _readonly(x[None, :, None].copy()),
        _readonly(x[None, None, :].copy()),
    )
