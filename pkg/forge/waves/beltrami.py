"""
Beltrami fields W = Σ a_ξ B_ξ e^{iλξ·x} and the waves.json export.
"""

import logging
from typing import Mapping, Union

import numpy as np

from .families import WaveFamily, build_wave_families
from .gamma import build_gamma_system
from ..core.storage import StorageBackend
from ..spectral.field import FourierField, Rank
from ..spectral.grid import TorusGrid

logger = logging.getLogger(__name__)


def beltrami_field(
    coeffs: Union[Mapping[int, complex], np.ndarray],
    lam: int,
    grid: TorusGrid,
    family: WaveFamily,
) -> FourierField:
    """Real field from direction-indexed amplitudes with a_{−ξ} = conj(a_ξ)."""
    if lam % family.n0:
        raise ValueError(f"λ={lam} is not a multiple of n0={family.n0}")
    if lam > grid.max_wavenumber:
        raise ValueError(f"λ={lam} exceeds the band limit {grid.max_wavenumber} of N={grid.n}")
    amps = np.zeros(family.size, dtype=np.complex128)
    if isinstance(coeffs, Mapping):
        for idx, a in coeffs.items():
            amps[idx] = a
    else:
        amps[:] = coeffs
    for p in range(family.n_pairs):
        if not np.isclose(amps[2 * p + 1], np.conj(amps[2 * p]), rtol=0, atol=1e-14):
            raise ValueError(f"amplitudes of pair {p} are not complex conjugates")

    b = family.frame_b()
    ks = family.lattice_vectors(lam)
    c = np.zeros((3,) + grid.spectral_shape, dtype=np.complex128)
    for i, k in enumerate(ks):
        if amps[i] == 0 or k[2] < 0:
            continue
        c[(slice(None),) + grid.mode_index(tuple(int(v) for v in k))] += amps[i] * b[i]
    return FourierField(grid, Rank.VECTOR, c)


def pair_field(pair: int, lam: int, grid: TorusGrid, family: WaveFamily, amplitude: complex = 1.0) -> FourierField:
    """W for a single antipodal pair with a_ξ = amplitude."""
    amps = np.zeros(family.size, dtype=np.complex128)
    amps[2 * pair] = amplitude
    amps[2 * pair + 1] = np.conj(amplitude)
    return beltrami_field(amps, lam, grid, family)


def waves_payload(variant: str = "five", n_derivatives: int = 9) -> dict:
    families = build_wave_families(variant)
    payload = {"provenance": {
        "family1_variant": variant,
        "directions_per_family": families[0].size,
        "note": "|Λ| fixed at 12 per family; D depends on this choice",
    }}
    for fam in families:
        system = build_gamma_system(fam, n_derivatives)
        payload[f"family{fam.parity}"] = {**fam.to_json(), **system.to_json()}
    return payload


def write_waves_json(store: StorageBackend, variant: str = "five", n_derivatives: int = 9):
    return store.write_json("waves.json", waves_payload(variant, n_derivatives))
