"""
Galerkin run configuration.
"""

import logging
import math
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..spectral.field import FourierField
from ..spectral.grid import TorusGrid
from ..stochastic.spectrum import NoiseSpectrum

logger = logging.getLogger(__name__)


class GalerkinConfig(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    cutoff: int = Field(default=8, ge=1)              # K_G: modes with |k|∞ ≤ K_G retained
    dt: float = Field(default=1e-3, gt=0.0)
    T: float = Field(default=1.0, gt=0.0)
    ensemble: int = Field(default=200, ge=1)
    seed: int = Field(default=0, ge=0)
    spectrum: NoiseSpectrum = Field(default_factory=NoiseSpectrum)
    x0: Optional[FourierField] = None                # None → zero initial datum
    grid_n: Optional[int] = None                     # None → smallest alias-free even size
    nonlinear: bool = True
    noise: bool = True
    drift_bias: float = 0.0                          # constant drift along drift_field (negative control)
    drift_field: Optional[FourierField] = None
    store_fields: bool = False
    store_stride: int = Field(default=1, ge=1)
    energy_cap: float = Field(default=1e12, gt=0.0)

    @model_validator(mode="after")
    def _stiffness_guard(self) -> "GalerkinConfig":
        stiff = self.dt * (self.cutoff * math.sqrt(3.0)) ** (2 * self.spectrum.alpha)
        if stiff > 1.0:
            raise ValueError(f"dt·(K_G√3)^(2α) = {stiff:.3g} > 1")
        if self.grid_n is not None and self.grid_n <= 3 * self.cutoff:
            raise ValueError(f"grid N={self.grid_n} aliases quadratic terms of cutoff {self.cutoff} (need N > 3K_G)")
        if self.drift_bias and self.drift_field is None:
            raise ValueError("drift_bias needs drift_field")
        return self

    @property
    def grid(self) -> TorusGrid:
        n = self.grid_n or max(8, 3 * self.cutoff + 2 - (3 * self.cutoff) % 2)
        return TorusGrid(n=n)

    @property
    def n_steps(self) -> int:
        n = int(round(self.T / self.dt))
        if not math.isclose(n * self.dt, self.T, rel_tol=1e-9):
            raise ValueError(f"T={self.T} is not a multiple of dt={self.dt}")
        return n

    @property
    def truncated_spectrum(self) -> NoiseSpectrum:
        cut = self.cutoff if self.spectrum.shell_cutoff is None else min(self.cutoff, self.spectrum.shell_cutoff)
        return self.spectrum.model_copy(update={"shell_cutoff": cut})
