"""
Every inequality the iteration relies on, evaluated with exact log-slack.

"X ≪ Y" is read as X·margin ≤ Y. Plain "≤" and "<" are exact. Exponent
conditions on (b, c, α, β, ε, δ, N0) involve no scale and are checked in
rational arithmetic.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Union

from .logexpr import LOG_2, LOG_A, LOG_C0, LOG_CL, LOG_CR, LOG_D, LOG_L, LOG_MARGIN, LOG_R0, LogExpr, LogSum
from .params import L_FLOOR, ParameterSet, log_delta, log_ell, log_lambda, log_M_half_at_L, log_mu

logger = logging.getLogger(__name__)

Side = Union[LogExpr, LogSum]


class Relation(str, Enum):
    MUCH_LESS = "<<"
    LEQ = "<="
    LESS = "<"
    EXPONENT = "exponent"


@dataclass(frozen=True)
class Constraint:
    name: str
    relation: Relation
    q: Optional[int] = None
    lhs: Optional[Side] = None
    rhs: Optional[Side] = None
    value: Optional[Fraction] = None     # exponent conditions: must be > 0

    def slack(self, env: dict[str, float]) -> float:
        if self.relation == Relation.EXPONENT:
            return float(self.value)
        if isinstance(self.lhs, LogExpr) and isinstance(self.rhs, LogExpr):
            s = (self.rhs - self.lhs).evaluate(env)
        else:
            s = self.rhs.evaluate(env) - self.lhs.evaluate(env)
        if self.relation == Relation.MUCH_LESS:
            s -= env[LOG_MARGIN]
        return s

    def holds(self, slack: float) -> bool:
        if self.relation in (Relation.LESS, Relation.EXPONENT):
            return slack > 0
        return slack >= 0


@dataclass
class ConstraintResult:
    name: str
    q: Optional[int]
    relation: str
    log_slack: float
    passed: bool

    def to_json(self) -> dict:
        return {"name": self.name, "q": self.q, "relation": self.relation, "log_slack": self.log_slack, "pass": self.passed}


@dataclass
class LedgerReport:
    params: ParameterSet
    q_max: int
    results: list[ConstraintResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list[ConstraintResult]:
        return [r for r in self.results if not r.passed]

    def binding(self) -> Optional[ConstraintResult]:
        """Failing constraint with the most negative slack, else the tightest passing one."""
        pool = self.failures or self.results
        return min(pool, key=lambda r: r.log_slack) if pool else None

    def to_json(self) -> dict:
        p = self.params
        return {
            "pass": self.passed,
            "q_max": self.q_max,
            "margin": p.margin,
            "c0": p.c0,
            **p.a_repr(),
            "b": p.b, "c": p.c, "alpha": p.alpha, "delta": p.delta,
            "beta": str(p.beta), "epsilon": str(p.eps), "N0": p.N0,
            "L": p.L, "c_R": p.c_R, "D": p.D, "r0": p.r0, "n0": p.n0,
            "constraints": [r.to_json() for r in self.results],
        }


def _half(x: LogExpr) -> LogExpr:
    return x * Fraction(1, 2)


def stage_constraints(p: ParameterSet, q: int) -> list[Constraint]:
    b, c = p.b, p.c
    lam_q, lam_next = log_lambda(b, c, q), log_lambda(b, c, q + 1)
    d_q, d_next, d_after = log_delta(b, q), log_delta(b, q + 1), log_delta(b, q + 2)
    ell, mu = log_ell(b, c, q), log_mu(b, c, q)
    beta, eps = p.beta, p.eps
    zero = LogExpr()
    c_l = LogExpr.of(LOG_CL)
    m_half = log_M_half_at_L()
    gain = lam_next * (-beta)
    ell_ratio = _half(d_q) + lam_q + ell - _half(d_next)
    hl = Fraction(1, 2) - 2 * Fraction(p.delta)
    return [
        Constraint("ell_ratio", Relation.MUCH_LESS, q, ell_ratio, zero),
        Constraint("transport_scales", Relation.LEQ, q, LogSum((_half(d_q) + lam_q - mu, -(ell + lam_next))), gain),
        Constraint("beta_gain", Relation.MUCH_LESS, q, gain, d_after - d_next),
        Constraint("inverse_lambda", Relation.LEQ, q, -lam_next, _half(d_next) - mu),
        Constraint("ell_ratio_L", Relation.MUCH_LESS, q, c_l + m_half + ell_ratio, zero),
        Constraint(
            "transport_scales_L", Relation.LEQ, q,
            LogSum((
                c_l - ell - lam_next,
                c_l + m_half + _half(d_q) + lam_q - mu,
                LogExpr.of(LOG_L, Fraction(1, 4)) - mu,
            )),
            gain,
        ),
        Constraint("ell_holder_loss", Relation.MUCH_LESS, q, c_l + ell * hl + _half(d_q) + lam_q, d_after),
        Constraint("mu_below_inverse_ell", Relation.MUCH_LESS, q, mu + ell, zero),
        Constraint("lambda_increasing", Relation.LESS, q, lam_q, lam_next),
        Constraint("delta_decreasing", Relation.LESS, q, d_next, d_q),
        Constraint("delta_lambda_increasing", Relation.LESS, q, _half(d_q) + lam_q, _half(d_next) + lam_next),
        Constraint(
            "oscillation_decay", Relation.MUCH_LESS, q,
            LogExpr.of(LOG_C0) + _half(d_next) + lam_next * (eps - beta), LogExpr.of(LOG_CR) + d_after,
        ),
        Constraint(
            "dissipation_decay", Relation.MUCH_LESS, q,
            LogExpr.of(LOG_C0) + _half(d_next) + lam_next * (2 * Fraction(p.alpha) + 2 * eps - 1),
            LogExpr.of(LOG_CR) + d_after,
        ),
        Constraint(
            "increment_sum", Relation.LEQ, q,
            LogSum(tuple(_half(log_delta(b, r)) + log_lambda(b, c, r) for r in range(q + 1))),
            LogExpr.of(LOG_2) + _half(d_q) + lam_q,
        ),
    ]


def global_constraints(p: ParameterSet, q_max: int) -> list[Constraint]:
    b, c = p.b, p.c
    beta, eps = p.beta, p.eps
    alpha, hl = Fraction(p.alpha), Fraction(1, 2) - 2 * Fraction(p.delta)
    log_a = LogExpr.of(LOG_A)
    out = [
        Constraint(
            "delta_sum", Relation.LEQ, None,
            LogSum(tuple(_half(log_delta(b, r)) for r in range(1, q_max + 3))), LogExpr(),
        ),
        Constraint("c_R_r0", Relation.LEQ, None, LogExpr.of(LOG_CR), LogExpr.of(LOG_R0, 2)),
        Constraint(
            "c_R_D_c0", Relation.LEQ, None,
            LogExpr.of(LOG_CR), (LogExpr.of(LOG_2, 2) + LogExpr.of(LOG_D) + LogExpr.of(LOG_C0)) * -4,
        ),
        Constraint("L_lower", Relation.LEQ, None, L_FLOOR - LogExpr.of(LOG_CR), LogExpr.of(LOG_L)),
        Constraint("L_upper", Relation.LEQ, None, LogExpr(const=math.log(2.0 * p.L + 2.0)), log_a * 2),
        Constraint(
            "starting_threshold", Relation.LEQ, None,
            LogExpr(const=math.log(2.0 + 2.0 * p.L)), log_a * (Fraction(c * b) - Fraction(1, 2)),
        ),
        Constraint("b_lower", Relation.EXPONENT, value=b - Fraction(8, 3) / hl),
        Constraint("b_above_5", Relation.EXPONENT, value=Fraction(b - 5)),
        Constraint("c_lower", Relation.EXPONENT, value=c - max(2 / beta, Fraction(8, 3) / hl, 1 / (Fraction(1, 2) - alpha))),
        Constraint("epsilon_upper", Relation.EXPONENT, value=min(Fraction(1, 2) - alpha, beta / 2) - eps),
        Constraint("oscillation_exponent", Relation.EXPONENT, value=-(((eps - beta) * c + 1) * b * b - Fraction(b, 2))),
        Constraint(
            "oscillation_tail_exponent", Relation.EXPONENT,
            value=-(b * b * ((1 - beta * p.N0 + eps) - beta * c + 1) - Fraction(b, 2)),
        ),
        Constraint("dissipation_exponent", Relation.EXPONENT, value=-((2 * alpha + 2 * eps - 1) * c + 1)),
        Constraint("holder_window", Relation.EXPONENT, value=Fraction(1, 2) - c * b * holder_gamma(p)),
    ]
    if p.T is not None:
        out.append(Constraint(
            "L_energy_horizon", Relation.LESS, None,
            LogExpr(const=math.log(math.log(11.0) / p.T)), LogExpr.of(LOG_L),
        ))
    if p.a is not None:
        out.append(Constraint("a_multiple_of_n0", Relation.EXPONENT, value=Fraction(1 if p.a % p.n0 == 0 else -1)))
    return out


def holder_gamma(p: ParameterSet) -> Fraction:
    """Reported Hölder exponent of the limit: half of the window 1/(2bc)."""
    return Fraction(1, 4 * p.b * p.c)


def all_constraints(p: ParameterSet, q_max: int) -> list[Constraint]:
    out = global_constraints(p, q_max)
    for q in range(q_max + 1):
        out.extend(stage_constraints(p, q))
    return out


def check_constraints(params: ParameterSet, q_max: int = 10, margin: Optional[float] = None) -> LedgerReport:
    if margin is not None:
        params = params.model_copy(update={"margin": margin})
    env = params.env()
    results = []
    for con in all_constraints(params, q_max):
        s = con.slack(env)
        results.append(ConstraintResult(con.name, con.q, con.relation.value, s, con.holds(s)))
    report = LedgerReport(params=params, q_max=q_max, results=results)
    logger.debug(
        "Ledger at log2 a = %.6g: %d/%d constraints hold", params.log2_a,
        sum(r.passed for r in results), len(results),
    )
    return report
