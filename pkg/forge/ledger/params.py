"""
Iteration parameters and their exact log-domain scales.

    λ_q = 2 a^{cb^{q+1} − b/2}          δ_q = a^{b − b^q} / (4(2π)³)
    ℓ_q = δ_{q+1}^{−1/8} δ_q^{1/8} λ_q^{−1/4} λ_{q+1}^{−3/4}
    μ_q = δ_{q+1}^{1/4} δ_q^{1/4} λ_q^{1/2} λ_{q+1}^{1/2}
    M(t) = L⁴e^{4Lt},  C_L = C_T3 + (C_T3 + 1)(1 + 2M(L)^{1/2} + L^{1/4}),  C_T3 = π^{3/2}
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .logexpr import (
    L_SQUARED, LOG_2, LOG_A, LOG_C0, LOG_CL, LOG_CR, LOG_D, LOG_L, LOG_MARGIN, LOG_PI, LOG_R0,
    LogExpr, log_sum,
)

logger = logging.getLogger(__name__)

C_T3 = math.pi**1.5
# 20(2π)³ = 160π³: lower bound for c_R·L
L_FLOOR = LogExpr.number(160) + LogExpr.of(LOG_PI, 3)


class LPolicy(str, Enum):
    MINIMAL = "minimal"     # least integer L with c_R·L ≥ 20(2π)³
    FIXED = "fixed"


class ParameterSet(BaseModel):
    """One tuple (a, b, c, α, σ, δ, ε, L, c_R, D, c0, r0) with everything derived from it."""

    model_config = ConfigDict(frozen=True)

    log2_a: float = Field(default=64.0, ge=0.0)
    a: Optional[int] = Field(default=None, gt=0)      # exact a, when small enough to enumerate
    b: int = 6
    c: int = 15
    alpha: float = Field(default=0.25, gt=0.0, lt=0.5)
    sigma: float = Field(default=0.01, gt=0.0)
    delta: float = Field(default=0.01, gt=0.0, lt=0.25)   # Hölder loss in the stopping time
    epsilon: Optional[float] = Field(default=None, gt=0.0)
    L: float = Field(default=2.0, gt=1.0)
    c_R: float = Field(default=1e-30, gt=0.0)
    D: float = Field(default=1.0, gt=0.0)
    c0: float = Field(default=1e3, gt=0.0)
    r0: float = Field(default=0.1, gt=0.0)
    n0: int = Field(default=5, ge=1)
    margin: float = Field(default=1e3, gt=1.0)
    T: Optional[float] = Field(default=None, gt=0.0)

    @field_validator("b")
    @classmethod
    def _b_even(cls, v: int) -> int:
        if v % 2 or v <= 5:
            raise ValueError(f"b must be an even integer > 5, got {v}")
        return v

    @model_validator(mode="after")
    def _consistent_a(self) -> "ParameterSet":
        if self.a is not None and not math.isclose(math.log2(self.a), self.log2_a, rel_tol=0, abs_tol=1e-9):
            raise ValueError(f"a = {self.a} disagrees with log2_a = {self.log2_a}")
        return self

    # ── Derived constants ────────────────────────────────────────────

    @property
    def beta(self) -> Fraction:
        return Fraction(self.b - 1, 5 * self.b + 5)

    @property
    def eps(self) -> Fraction:
        if self.epsilon is not None:
            return Fraction(self.epsilon)
        return min(Fraction(1, 2) - Fraction(self.alpha), self.beta / 2) / 2

    @property
    def N0(self) -> int:
        return math.ceil((1 + self.eps) / self.beta) + 1

    @property
    def log_a(self) -> float:
        return self.log2_a * math.log(2.0)

    @property
    def log_C_L(self) -> float:
        return log_constant_C_L(self.L)

    def env(self) -> dict[str, float]:
        return {
            LOG_A: self.log_a,
            LOG_2: math.log(2.0),
            LOG_PI: math.log(math.pi),
            LOG_L: math.log(self.L),
            L_SQUARED: self.L**2,
            LOG_CR: math.log(self.c_R),
            LOG_D: math.log(self.D),
            LOG_C0: math.log(self.c0),
            LOG_R0: math.log(self.r0),
            LOG_CL: self.log_C_L,
            LOG_MARGIN: math.log(self.margin),
        }

    def with_a(self, log2_a: float, a: Optional[int] = None) -> "ParameterSet":
        return self.model_copy(update={"log2_a": log2_a, "a": a})

    def a_repr(self) -> dict:
        return {"log2_a": self.log2_a, "a": str(self.a) if self.a is not None else None}


# ── Scale formulas ───────────────────────────────────────────────────

def log_lambda(b: int, c: int, q: int) -> LogExpr:
    return LogExpr.of(LOG_2) + LogExpr.of(LOG_A, Fraction(c * b ** (q + 1)) - Fraction(b, 2))


def log_delta(b: int, q: int) -> LogExpr:
    # 4(2π)³ = 2⁵π³
    return LogExpr.of(LOG_A, b - b**q) - LogExpr.of(LOG_2, 5) - LogExpr.of(LOG_PI, 3)


def log_ell(b: int, c: int, q: int) -> LogExpr:
    return (
        log_delta(b, q + 1) * Fraction(-1, 8) + log_delta(b, q) * Fraction(1, 8)
        + log_lambda(b, c, q) * Fraction(-1, 4) + log_lambda(b, c, q + 1) * Fraction(-3, 4)
    )


def log_mu(b: int, c: int, q: int) -> LogExpr:
    return (
        (log_delta(b, q + 1) + log_delta(b, q)) * Fraction(1, 4)
        + (log_lambda(b, c, q) + log_lambda(b, c, q + 1)) * Fraction(1, 2)
    )


def log_M_half_at_L() -> LogExpr:
    """log M(L)^{1/2} = 2 log L + 2L²."""
    return LogExpr.of(LOG_L, 2) + LogExpr.of(L_SQUARED, 2)


@dataclass
class ScaleRow:
    q: int
    log2_lambda: float
    log2_delta: float
    log2_ell: float
    log2_mu: float

    def to_json(self) -> dict:
        return self.__dict__.copy()


def derive_scales(params: ParameterSet, q_max: int) -> list[ScaleRow]:
    env = params.env()
    ln2 = math.log(2.0)
    b, c = params.b, params.c
    rows = [
        ScaleRow(
            q=q,
            log2_lambda=log_lambda(b, c, q).evaluate(env) / ln2,
            log2_delta=log_delta(b, q).evaluate(env) / ln2,
            log2_ell=log_ell(b, c, q).evaluate(env) / ln2,
            log2_mu=log_mu(b, c, q).evaluate(env) / ln2,
        )
        for q in range(q_max + 1)
    ]
    logger.debug("Derived scales for q ≤ %d at log2 a = %.6g", q_max, params.log2_a)
    return rows


# ── Resolution from the wave families ────────────────────────────────

@lru_cache(maxsize=4)
def waves_constants(variant: str = "five", n_derivatives: int = 9) -> tuple[int, float, float]:
    """(n0, D, r0) for a pair of families: common n0, the larger D, the smaller r0."""
    from ..waves.families import build_wave_families, common_n0
    from ..waves.gamma import build_gamma_system

    families = build_wave_families(variant)
    systems = [build_gamma_system(f, n_derivatives) for f in families]
    return common_n0(families), max(s.D for s in systems), min(s.r0 for s in systems)


def admissible_c_R(D: float, c0: float, r0: float) -> float:
    """Half of min(r0², (4Dc0)^{−4})."""
    return 0.5 * min(r0**2, (4.0 * D * c0) ** -4)


def minimal_L(c_R: float) -> float:
    return float(math.ceil(160.0 * math.pi**3 / c_R))


def make_parameters(
    variant: str = "five",
    L_policy: LPolicy = LPolicy.MINIMAL,
    c_R: Optional[float] = None,
    **overrides,
) -> ParameterSet:
    """ParameterSet with n0, D, r0 from the families and c_R, L resolved by policy."""
    fields = dict(overrides)
    if not {"n0", "D", "r0"} <= fields.keys():
        n0, D, r0 = waves_constants(variant, fields.get("n_derivatives", 9))
        fields.setdefault("n0", n0)
        fields.setdefault("D", D)
        fields.setdefault("r0", r0)
    fields.pop("n_derivatives", None)
    c0 = fields.get("c0", ParameterSet.model_fields["c0"].default)
    fields["c_R"] = c_R if c_R is not None else admissible_c_R(fields["D"], c0, fields["r0"])
    if L_policy == LPolicy.MINIMAL:
        fields["L"] = minimal_L(fields["c_R"])
    return ParameterSet(**fields)


def log_constant_C_L(L: float) -> float:
    """log C_L without forming M(L) = L⁴e^{4L²}."""
    # log(2M(L)^{1/2}) = log 2 + 2 log L + 2L²
    inner = log_sum([0.0, math.log(2.0) + 2.0 * math.log(L) + 2.0 * L**2, 0.25 * math.log(L)])
    return log_sum([math.log(C_T3), math.log(C_T3 + 1.0) + inner])
