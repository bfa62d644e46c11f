import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st
from pydantic import ValidationError

from forge.ledger.constraints import check_constraints, holder_gamma
from forge.ledger.logexpr import LOG_2, LOG_A, LOG_PI, LogExpr, LogSum
from forge.ledger.params import (
    LPolicy, ParameterSet, admissible_c_R, derive_scales, log_constant_C_L, log_delta, make_parameters, minimal_L,
)
from forge.ledger.search import c0_sensitivity, find_min_a, golden_rows


@pytest.fixture(scope="module")
def params() -> ParameterSet:
    return make_parameters()


@pytest.fixture(scope="module")
def minimal(params):
    return find_min_a(params, q_max=2)


class TestLogExpr:
    def test_exact_cancellation(self):
        big = LogExpr.of(LOG_A, Fraction(15 * 6**11)) + LogExpr.of(LOG_2)
        diff = big - LogExpr.of(LOG_A, 15 * 6**11)
        assert diff.terms == ((LOG_2, Fraction(1)),)

    def test_powers_of_two_are_symbolic(self):
        assert LogExpr.number(8) == LogExpr.of(LOG_2, 3)
        assert LogExpr.number(0.25) == LogExpr.of(LOG_2, -2)
        assert LogExpr.number(3).const == pytest.approx(math.log(3))

    def test_non_positive_literal(self):
        with pytest.raises(ValueError):
            LogExpr.number(0)

    def test_unbound_symbol(self):
        with pytest.raises(KeyError):
            LogExpr.of(LOG_A).evaluate({})

    @given(
        x=st.fractions(min_value=-100, max_value=100, max_denominator=64),
        f=st.fractions(min_value=-10, max_value=10, max_denominator=16),
    )
    def test_scaling_is_exact(self, x, f):
        e = LogExpr.of(LOG_PI, x) * f
        assert e.coefficient(LOG_PI) == x * f

    def test_log_sum(self):
        s = LogSum((LogExpr.of(LOG_2), LogExpr.of(LOG_2)))
        assert s.evaluate({LOG_2: 1.0}) == pytest.approx(1.0 + math.log(2.0))


class TestParameters:
    @pytest.mark.parametrize("b", [4, 7])
    def test_b_even_above_five(self, b):
        with pytest.raises(ValidationError):
            ParameterSet(b=b)

    def test_a_must_match_log2(self):
        with pytest.raises(ValidationError):
            ParameterSet(a=4, log2_a=3.0)

    def test_derived_exponents(self):
        p = ParameterSet()
        assert p.beta == Fraction(1, 7)
        assert p.eps == Fraction(1, 28)
        assert p.N0 == 9
        assert holder_gamma(p) == Fraction(1, 360)

    def test_lambda_zero_at_a_two(self):
        row = derive_scales(ParameterSet(log2_a=1.0, a=2), 0)[0]
        assert row.log2_lambda == pytest.approx(88.0, abs=1e-9)

    def test_delta_one_does_not_depend_on_a(self):
        for log2_a in (1.0, 40.0):
            env = ParameterSet(log2_a=log2_a).env()
            assert math.exp(log_delta(6, 1).evaluate(env)) == pytest.approx(1.0 / (4.0 * (2.0 * math.pi) ** 3))

    def test_scales_ordered(self):
        rows = derive_scales(ParameterSet(log2_a=10.0), 3)
        for lo, hi in zip(rows, rows[1:]):
            assert hi.log2_lambda > lo.log2_lambda
            assert hi.log2_delta < lo.log2_delta

    def test_constant_C_L_matches_direct_formula(self):
        L = 1.5
        m_half = L**2 * math.exp(2 * L * L)
        direct = math.pi**1.5 + (math.pi**1.5 + 1) * (1 + 2 * m_half + L**0.25)
        assert log_constant_C_L(L) == pytest.approx(math.log(direct), rel=1e-12)

    def test_make_parameters_resolves_c_R_and_L(self, params):
        assert params.c_R == pytest.approx(admissible_c_R(params.D, params.c0, params.r0))
        assert params.L == minimal_L(params.c_R)
        assert params.L * params.c_R >= 160 * math.pi**3 * (1 - 1e-12)

    def test_fixed_L_policy(self):
        assert make_parameters(L_policy=LPolicy.FIXED, L=3.0).L == 3.0


class TestConstraints:
    def test_oversized_c_R_fails(self, params):
        report = check_constraints(params.model_copy(update={"c_R": 1.0}), q_max=1)
        failed = {r.name for r in report.failures}
        assert "c_R_r0" in failed
        assert not report.passed

    def test_binding_is_most_negative_failure(self, params):
        report = check_constraints(params.with_a(1.0, None), q_max=1)
        worst = report.binding()
        assert not worst.passed
        assert worst.log_slack == min(r.log_slack for r in report.failures)

    def test_golden_rows_carry_exact_slacks(self, params, minimal):
        report = check_constraints(params.with_a(minimal.log2_a, minimal.a), q_max=2)
        rows = golden_rows(report)
        assert len(rows) == len(report.results)
        assert rows[0][0] == "delta_sum"
        for row, result in zip(rows, report.results):
            assert float(row[3]) == result.log_slack
            assert row[4] == int(result.passed)
            assert row[1] == ("" if result.q is None else result.q)

    def test_report_json(self, params, minimal):
        payload = check_constraints(params.with_a(minimal.log2_a, minimal.a), q_max=2).to_json()
        assert payload["pass"] is True
        assert payload["beta"] == "1/7"


class TestSearch:
    def test_minimal_a_passes_and_is_tight(self, params, minimal):
        assert minimal.satisfiable
        assert minimal.report.passed
        if minimal.a is None:
            below = check_constraints(params.with_a(minimal.log2_a - 1e-3, None), q_max=2)
        else:
            a = minimal.a - params.n0
            below = check_constraints(params.with_a(math.log2(a), a), q_max=2)
        assert not below.passed
        assert minimal.binding_constraint is not None

    def test_looser_margin_never_raises_a(self, params, minimal):
        loose = find_min_a(params, q_max=2, margin=10.0)
        assert loose.log2_a <= minimal.log2_a * (1 + 1e-9)

    def test_unsatisfiable_exponent_condition(self):
        found = find_min_a(make_parameters(c=13), q_max=1)
        assert not found.satisfiable
        assert found.log2_a is None
        assert found.to_json()["satisfiable"] is False

    def test_c0_sweep(self, params):
        sweep = c0_sensitivity(params, q_max=1, c0_values=(10.0, 1e3))
        assert [r.c0 for r in sweep] == [10.0, 1e3]
        assert all(r.satisfiable for r in sweep)
