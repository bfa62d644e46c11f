"""
Log-domain algebra for the parameter ledger.

A LogExpr is log X written as Σ r_s·s over named symbols with rational r_s,
plus a float remainder for logs of small literal constants. Differences of
expressions cancel exactly in the rationals before anything is evaluated, so
slacks stay accurate even when log a carries coefficients like b^{q+1}.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence, Union

import numpy as np
from scipy.special import logsumexp

Number = Union[int, Fraction]

# ── Symbols ──────────────────────────────────────────────────────────
LOG_A = "log a"
LOG_2 = "log 2"
LOG_PI = "log π"
LOG_L = "log L"
L_SQUARED = "L²"            # linear in the exponent: log M(L)^{1/2} = 2 log L + 2L²
LOG_CR = "log c_R"
LOG_D = "log D"
LOG_C0 = "log c0"
LOG_R0 = "log r0"
LOG_CL = "log C_L"
LOG_MARGIN = "log margin"


@dataclass(frozen=True)
class LogExpr:
    terms: tuple[tuple[str, Fraction], ...] = ()
    const: float = 0.0

    @classmethod
    def of(cls, symbol: str, coef: Number = 1) -> "LogExpr":
        return cls(((symbol, Fraction(coef)),))

    @classmethod
    def number(cls, value: float) -> "LogExpr":
        """log of a positive literal; powers of two go to the log 2 symbol."""
        if value <= 0:
            raise ValueError(f"log of non-positive literal {value}")
        m, e = math.frexp(value)
        if m == 0.5:
            return cls.of(LOG_2, e - 1)
        return cls(const=math.log(value))

    def _as_dict(self) -> dict[str, Fraction]:
        return dict(self.terms)

    @staticmethod
    def _from_dict(d: dict[str, Fraction], const: float) -> "LogExpr":
        return LogExpr(tuple(sorted((k, v) for k, v in d.items() if v != 0)), const)

    def coefficient(self, symbol: str) -> Fraction:
        return self._as_dict().get(symbol, Fraction(0))

    def __add__(self, other: "LogExpr") -> "LogExpr":
        d = self._as_dict()
        for k, v in other.terms:
            d[k] = d.get(k, Fraction(0)) + v
        return self._from_dict(d, self.const + other.const)

    def __neg__(self) -> "LogExpr":
        return LogExpr(tuple((k, -v) for k, v in self.terms), -self.const)

    def __sub__(self, other: "LogExpr") -> "LogExpr":
        return self + (-other)

    def __mul__(self, factor: Number) -> "LogExpr":
        f = Fraction(factor)
        return self._from_dict({k: v * f for k, v in self.terms}, self.const * float(f))

    __rmul__ = __mul__

    def evaluate(self, env: Mapping[str, float]) -> float:
        total = self.const
        for k, v in self.terms:
            if k not in env:
                raise KeyError(f"no value bound for symbol '{k}'")
            total += float(v) * env[k]
        return total

    def __str__(self) -> str:
        parts = [f"{v}·{k}" for k, v in self.terms]
        if self.const:
            parts.append(f"{self.const:.6g}")
        return " + ".join(parts) or "0"


@dataclass(frozen=True)
class LogSum:
    """log Σ_i X_i for terms given as LogExprs; evaluated by log-sum-exp."""

    parts: tuple[LogExpr, ...] = field(default_factory=tuple)

    def evaluate(self, env: Mapping[str, float]) -> float:
        return float(logsumexp(np.array([p.evaluate(env) for p in self.parts])))


def log_sum(values: Sequence[float]) -> float:
    return float(logsumexp(np.asarray(values, dtype=np.float64)))
