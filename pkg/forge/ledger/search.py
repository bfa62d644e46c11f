"""
Search for the least admissible a, and the c0 sensitivity sweep.

a ranges over multiples n0·m. Below 2^60 the search is over the exact
integer m; above, a is carried as log₂ a = log₂ n0 + x with x bisected to a
relative resolution of 2^{−40}.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .constraints import ConstraintResult, LedgerReport, check_constraints
from .params import LPolicy, ParameterSet, admissible_c_R, minimal_L

logger = logging.getLogger(__name__)

_EXACT_LIMIT = 60          # log₂ a below which a is enumerated as an integer
_MAX_DOUBLINGS = 400
_RELATIVE_RESOLUTION = 2.0**-40


@dataclass
class MinAResult:
    satisfiable: bool
    log2_a: Optional[float]
    a: Optional[int]
    binding_constraint: Optional[str]     # failing at the last rejected a
    binding_q: Optional[int]
    margin: float
    c0: float
    q_max: int
    monotone: bool = True                 # bracket re-checked at 2a
    report: Optional[LedgerReport] = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {
            "satisfiable": self.satisfiable,
            "log2_a": self.log2_a,
            "a": str(self.a) if self.a is not None else None,
            "binding_constraint": self.binding_constraint,
            "binding_q": self.binding_q,
            "margin": self.margin,
            "c0": self.c0,
            "q_max": self.q_max,
            "monotone_on_bracket": self.monotone,
        }


def _at(params: ParameterSet, log2_a: float, a: Optional[int] = None) -> ParameterSet:
    return params.with_a(log2_a, a)


def _exact(params: ParameterSet, m: int) -> ParameterSet:
    a = params.n0 * m
    return _at(params, math.log2(a), a)


def _binding(report: LedgerReport) -> Optional[ConstraintResult]:
    return report.binding() if not report.passed else None


def find_min_a(params: ParameterSet, q_max: int = 10, margin: Optional[float] = None, cap_log2: float = 2.0**240) -> MinAResult:
    """Least a = n0·m passing every constraint, with the binding constraint at the last failing a."""
    if margin is not None:
        params = params.model_copy(update={"margin": margin})
    check = lambda p: check_constraints(p, q_max)   # noqa: E731
    base = math.log2(params.n0)

    top = check(_at(params, cap_log2))
    if not top.passed:
        worst = top.binding()
        logger.warning("No admissible a up to 2^%g: '%s' fails (q=%s)", cap_log2, worst.name, worst.q)
        return MinAResult(
            satisfiable=False, log2_a=None, a=None, binding_constraint=worst.name, binding_q=worst.q,
            margin=params.margin, c0=params.c0, q_max=q_max, report=top,
        )

    first = check(_exact(params, 1))
    if first.passed:
        return MinAResult(
            satisfiable=True, log2_a=base, a=params.n0, binding_constraint=None, binding_q=None,
            margin=params.margin, c0=params.c0, q_max=q_max, report=first,
        )

    # doubling on x = log₂ m
    lo, hi = 0.0, 1.0
    for _ in range(_MAX_DOUBLINGS):
        if base + hi >= cap_log2 or check(_at(params, base + hi)).passed:
            break
        lo, hi = hi, 2.0 * hi
    hi = min(hi, cap_log2 - base)

    if base + hi <= _EXACT_LIMIT:
        m_lo, m_hi = int(2**lo), int(math.ceil(2**hi))
        while not check(_exact(params, m_hi)).passed:
            m_hi += 1
        while m_hi - m_lo > 1:
            mid = (m_lo + m_hi) // 2
            if check(_exact(params, mid)).passed:
                m_hi = mid
            else:
                m_lo = mid
        found, failed = _exact(params, m_hi), _exact(params, m_lo)
    else:
        while hi - lo > max(_RELATIVE_RESOLUTION * hi, 2.0**-30):
            mid = 0.5 * (lo + hi)
            if check(_at(params, base + mid)).passed:
                hi = mid
            else:
                lo = mid
        found, failed = _at(params, base + hi), _at(params, base + lo)

    report = check(found)
    failing = check(failed)
    binding = _binding(failing)
    doubled = check(_at(params, found.log2_a + 1.0))
    monotone = report.passed and not failing.passed and doubled.passed
    if not monotone:
        logger.warning("Constraint set not monotone on the bracket [2^%.6g, 2^%.6g]", failed.log2_a, found.log2_a)
    logger.info(
        "Minimal a: log2 a = %.9g (binding '%s')", found.log2_a, binding.name if binding else None,
    )
    return MinAResult(
        satisfiable=True,
        log2_a=found.log2_a,
        a=found.a,
        binding_constraint=binding.name if binding else None,
        binding_q=binding.q if binding else None,
        margin=params.margin,
        c0=params.c0,
        q_max=q_max,
        monotone=monotone,
        report=report,
    )


def c0_sensitivity(
    params: ParameterSet,
    q_max: int = 10,
    c0_values: Sequence[float] = (10.0, 1e3, 1e6),
    L_policy: LPolicy = LPolicy.MINIMAL,
) -> list[MinAResult]:
    """min a per c0; c_R follows c0 through its admissible bound, L through the policy."""
    out = []
    for c0 in c0_values:
        c_R = admissible_c_R(params.D, c0, params.r0)
        update = {"c0": c0, "c_R": c_R}
        if L_policy == LPolicy.MINIMAL:
            update["L"] = minimal_L(c_R)
        out.append(find_min_a(params.model_copy(update=update), q_max))
    return out


def golden_rows(report: LedgerReport) -> list[list]:
    """Slack table in a stable textual form for golden-file comparison."""
    return [
        [r.name, "" if r.q is None else r.q, r.relation, repr(r.log_slack), int(r.passed)]
        for r in report.results
    ]
