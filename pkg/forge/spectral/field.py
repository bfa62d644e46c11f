"""
FourierField — band-limited real field on the torus, stored by its coefficients.

Coefficients are normalized so that f(x) = Σ_k f̂_k e^{ik·x}, i.e. the L² pairing
is ⟨f, g⟩ = (2π)^{-3}∫ f·g and ‖e^{ik·x}‖ = 1. Leading axes before the
component axes are batch axes (typically time).
"""

from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np
import scipy.fft

from .grid import TorusGrid
from ..core.config import get_settings
from ..core.errors import RankError


class Rank(str, Enum):
    SCALAR = "scalar"
    VECTOR = "vector"
    MATRIX = "matrix"

    @property
    def component_shape(self) -> tuple[int, ...]:
        return {Rank.SCALAR: (), Rank.VECTOR: (3,), Rank.MATRIX: (3, 3)}[self]


def _workers() -> int:
    return get_settings().threads


def forward(values: np.ndarray) -> np.ndarray:
    return scipy.fft.rfftn(values, axes=(-3, -2, -1), norm="forward", workers=_workers())


def inverse(coeffs: np.ndarray, n: int) -> np.ndarray:
    return scipy.fft.irfftn(coeffs, s=(n, n, n), axes=(-3, -2, -1), norm="forward", workers=_workers())


def _conj_reflect_plane(plane: np.ndarray) -> np.ndarray:
    """plane[(-kx) % N, (-ky) % N], conjugated."""
    return np.conj(np.roll(np.flip(plane, axis=(-2, -1)), 1, axis=(-2, -1)))


@dataclass(frozen=True)
class FourierField:
    grid: TorusGrid
    rank: Rank
    coeffs: np.ndarray  # (*batch, *component_shape, N, N, N//2+1), complex128

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=np.complex128)
        tail = self.rank.component_shape + self.grid.spectral_shape
        if arr.shape[arr.ndim - len(tail):] != tail:
            raise RankError(
                f"coefficient shape {arr.shape} does not end with {tail} for rank {self.rank.value}"
            )
        view = arr.view()
        view.flags.writeable = False
        object.__setattr__(self, "coeffs", view)

    # ── Construction ─────────────────────────────────────────────────

    @classmethod
    def zeros(cls, grid: TorusGrid, rank: Rank, batch: tuple[int, ...] = ()) -> "FourierField":
        return cls(grid, rank, np.zeros(batch + rank.component_shape + grid.spectral_shape, np.complex128))

    @classmethod
    def from_physical(cls, grid: TorusGrid, values: np.ndarray, rank: Rank) -> "FourierField":
        c = forward(np.asarray(values, dtype=np.float64))
        return cls(grid, rank, _project_real(c, grid))

    @classmethod
    def stack(cls, fields: Sequence["FourierField"]) -> "FourierField":
        first = fields[0]
        return cls(first.grid, first.rank, np.stack([f.coeffs for f in fields]))

    def with_coeffs(self, coeffs: np.ndarray, rank: Union[Rank, None] = None) -> "FourierField":
        return FourierField(self.grid, rank or self.rank, coeffs)

    # ── Views ────────────────────────────────────────────────────────

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[: self.coeffs.ndim - len(self.rank.component_shape) - 3]

    def physical(self) -> np.ndarray:
        return inverse(self.coeffs, self.grid.n)

    def at(self, index) -> "FourierField":
        """Index the batch axes only."""
        return FourierField(self.grid, self.rank, self.coeffs[index])

    def component(self, *idx: int) -> "FourierField":
        nb = len(self.batch_shape)
        sl = (slice(None),) * nb + tuple(idx)
        return FourierField(self.grid, Rank.SCALAR, self.coeffs[sl])

    def enforce_real(self) -> "FourierField":
        return self.with_coeffs(_project_real(np.array(self.coeffs), self.grid))

    # ── Arithmetic ───────────────────────────────────────────────────

    def _check(self, other: "FourierField"):
        if other.grid != self.grid or other.rank != self.rank:
            raise RankError(f"cannot combine {self.rank.value}@N={self.grid.n} with {other.rank.value}@N={other.grid.n}")

    def __add__(self, other: "FourierField") -> "FourierField":
        self._check(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "FourierField") -> "FourierField":
        self._check(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __neg__(self) -> "FourierField":
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, factor) -> "FourierField":
        """Scalar factor, or an array over the leading (batch) axes; new leading axes broadcast."""
        f = np.asarray(factor)
        if f.ndim:
            f = f.reshape(f.shape + (1,) * (len(self.rank.component_shape) + 3))
        return self.with_coeffs(self.coeffs * f)

    __rmul__ = __mul__


def resample(f: FourierField, grid: TorusGrid) -> FourierField:
    """Same coefficients on another grid; modes outside the smaller band are dropped."""
    if grid == f.grid:
        return f
    kmax = min(f.grid.max_wavenumber, grid.max_wavenumber)
    r = np.arange(-kmax, kmax + 1)
    kz = np.arange(kmax + 1)
    src, dst = r % f.grid.n, r % grid.n
    out = np.zeros(f.batch_shape + f.rank.component_shape + grid.spectral_shape, np.complex128)
    out[..., dst[:, None, None], dst[None, :, None], kz[None, None, :]] = (
        f.coeffs[..., src[:, None, None], src[None, :, None], kz[None, None, :]]
    )
    return FourierField(grid, f.rank, _project_real(out, grid))


def _project_real(c: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Zero modes outside the band and make the kz = 0 plane Hermitian."""
    c = np.where(grid.band_mask(), c, 0.0)
    plane = c[..., 0]
    c[..., 0] = 0.5 * (plane + _conj_reflect_plane(plane))
    return c
