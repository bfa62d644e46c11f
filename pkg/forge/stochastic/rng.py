"""
Counter-based noise streams and the canonical half-lattice.

Each (seed, level, step, shell) pair owns its own Philox key, so a draw for a
wavevector depends only on (seed, k, step), never on the grid size, the thread
count, or which other modes are simulated.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..spectral.grid import TorusGrid

_SHELL_BITS = 16
_STEP_BITS = 40
_LEVEL_SHIFT = _SHELL_BITS + _STEP_BITS


def stream_key(seed: int, step: int, shell: int, level: int = 0) -> int:
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    if step >= 2**_STEP_BITS or shell >= 2**_SHELL_BITS or level >= 2**8:
        raise ValueError("stream coordinates out of range")
    stream = (level << _LEVEL_SHIFT) | (step << _SHELL_BITS) | shell
    return seed | (stream << 64)


def shell_normals(seed: int, step: int, shell: int, count: int, level: int = 0) -> np.ndarray:
    """(count, 2 polarizations, 2 quantities, 2 re/im) standard normals."""
    gen = np.random.Generator(np.random.Philox(key=stream_key(seed, step, shell, level)))
    return gen.standard_normal((count, 2, 2, 2))


@lru_cache(maxsize=64)
def shell_representatives(shell: int) -> np.ndarray:
    """k with |k|∞ = shell and k > 0 in (kz, ky, kx) lexicographic order, sorted that way."""
    r = np.arange(-shell, shell + 1)
    kx, ky, kz = np.meshgrid(r, r, r, indexing="ij")
    k = np.stack([kx.ravel(), ky.ravel(), kz.ravel()], axis=-1)
    on_shell = np.max(np.abs(k), axis=-1) == shell
    positive = (k[:, 2] > 0) | ((k[:, 2] == 0) & (k[:, 1] > 0)) | ((k[:, 2] == 0) & (k[:, 1] == 0) & (k[:, 0] > 0))
    k = k[on_shell & positive]
    order = np.lexsort((k[:, 0], k[:, 1], k[:, 2]))
    out = k[order]
    out.flags.writeable = False
    return out


def polarizations(k: np.ndarray) -> np.ndarray:
    """Real orthonormal basis (m, 2, 3) of k^⊥, identical for k and −k."""
    kf = k.astype(np.float64)
    khat = kf / np.linalg.norm(kf, axis=-1, keepdims=True)
    ref = np.where((k[:, 0] == 0) & (k[:, 1] == 0), 1.0, 0.0)[:, None] * np.array([1.0, 0.0, 0.0]) \
        + np.where((k[:, 0] == 0) & (k[:, 1] == 0), 0.0, 1.0)[:, None] * np.array([0.0, 0.0, 1.0])
    e1 = np.cross(khat, ref)
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(khat, e1)
    return np.stack([e1, e2], axis=1)


@dataclass(frozen=True)
class ModeTable:
    """Active noise modes of a grid: representatives, storage positions, polarizations."""

    grid: TorusGrid
    shells: tuple[int, ...]
    shell_counts: tuple[int, ...]       # representatives per shell, before support filtering
    k: np.ndarray                       # (m, 3) int
    index: tuple[np.ndarray, np.ndarray, np.ndarray]
    mirror: np.ndarray                  # positions (into k) with kz = 0
    mirror_index: tuple[np.ndarray, np.ndarray, np.ndarray]
    pol: np.ndarray                     # (m, 2, 3)

    @property
    def size(self) -> int:
        return self.k.shape[0]

    def scatter(self, vec: np.ndarray) -> np.ndarray:
        """Active vectors (..., 3, m) → half-spectrum coefficients (..., 3, N, N, N//2+1)."""
        out = np.zeros(vec.shape[:-1] + self.grid.spectral_shape, dtype=np.complex128)
        ix, iy, iz = self.index
        out[..., ix, iy, iz] = vec
        mx, my, mz = self.mirror_index
        out[..., mx, my, mz] = np.conj(vec[..., self.mirror])
        return out

    def gather(self, coeffs: np.ndarray) -> np.ndarray:
        ix, iy, iz = self.index
        return coeffs[..., ix, iy, iz]

    def from_polar(self, c: np.ndarray) -> np.ndarray:
        """Polarization coordinates (..., m, 2) → active vectors (..., 3, m)."""
        return np.einsum("...mp,mpi->...im", c, self.pol)

    def to_polar(self, vec: np.ndarray) -> np.ndarray:
        return np.einsum("...im,mpi->...mp", vec, self.pol)


@lru_cache(maxsize=16)
def mode_table(grid: TorusGrid, max_shell: int) -> ModeTable:
    """All representatives with |k|∞ ≤ min(max_shell, N/2 − 1)."""
    shells = tuple(range(1, min(max_shell, grid.max_wavenumber) + 1))
    reps = [shell_representatives(s) for s in shells]
    k = np.concatenate(reps) if reps else np.zeros((0, 3), dtype=np.int64)
    n = grid.n
    index = (k[:, 0] % n, k[:, 1] % n, k[:, 2])
    mirror = np.nonzero(k[:, 2] == 0)[0]
    mirror_index = ((-k[mirror, 0]) % n, (-k[mirror, 1]) % n, np.zeros(mirror.size, dtype=np.int64))
    return ModeTable(
        grid=grid,
        shells=shells,
        shell_counts=tuple(r.shape[0] for r in reps),
        k=k,
        index=index,
        mirror=mirror,
        mirror_index=mirror_index,
        pol=polarizations(k) if k.size else np.zeros((0, 2, 3)),
    )


def draw_normals(table: ModeTable, seed: int, step: int, level: int = 0) -> np.ndarray:
    """(m, 2, 2, 2) normals for every active mode, shell by shell in a fixed order."""
    parts = [
        shell_normals(seed, step, s, count, level)
        for s, count in zip(table.shells, table.shell_counts)
    ]
    return np.concatenate(parts) if parts else np.zeros((0, 2, 2, 2))
