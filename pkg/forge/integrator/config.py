"""
Surrogate-stage scales and run configuration for the iteration.
"""

import math
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class RunMode(str, Enum):
    SURROGATE = "surrogate"   # small user-chosen scales, fields built
    LEDGER = "ledger"         # exact formulas, log domain only


class StageScales(BaseModel):
    """Scales of one q → q+1 step: λ_{q+1}, δ_{q+1}, ℓ, μ."""

    model_config = ConfigDict(frozen=True)

    lam: int = Field(gt=0)
    delta: float = Field(gt=0.0)
    ell: float = Field(gt=0.0)
    mu: float = Field(gt=0.0)


class IterationConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = 24
    dt: float = Field(default=2.5e-3, gt=0.0)
    horizon: float = Field(default=0.05, ge=0.0)
    L: float = 2.0
    alpha: float = Field(default=0.25, gt=0.0, le=1.0)
    c_R: float = Field(default=1.0, gt=0.0)
    stages: tuple[StageScales, ...] = (StageScales(lam=5, delta=100.0, ell=0.01, mu=40.0),)
    substeps: int = Field(default=4, ge=1)
    family: str = "five"
    post_samples: int = Field(default=4, ge=2)     # samples kept past the horizon per stage
    keep_breakdown: bool = False                   # retain the seven component fields
    next_delta: Optional[float] = None             # δ_{q+2} for the last stage's stress bound

    @field_validator("L")
    @classmethod
    def _L_above_one(cls, v: float) -> float:
        if v <= 1.0:
            raise ValueError(f"L must exceed 1, got {v}")
        return v

    @model_validator(mode="after")
    def _grid_alignment(self) -> "IterationConfig":
        for s in self.stages:
            period = 1.0 / (s.mu * self.dt)
            if not math.isclose(period, round(period), rel_tol=1e-9):
                raise ValueError(f"1/μ = {1.0 / s.mu:g} is not a multiple of dt = {self.dt:g}")
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def future_samples(self) -> int:
        return max(self.post_samples, 2 * len(self.stages) + 2)

    def history_samples(self) -> int:
        """Samples before t = 0: every stage's causal mollifier plus the derivative stencil."""
        return sum(max(1, int(round(s.ell / self.dt))) + 2 for s in self.stages) + 2
