import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toeplitz_hv.errors import InvalidParams, NotDifferentiable, SpecParseError
from toeplitz_hv.symbols import (
    HYPOTHESES,
    SymbolSpec,
    boundary_sup,
    check_hypothesis,
    derivative,
    discrete_sup,
    eval_symbol,
    sup_comparison,
    parse_symbol,
    tail_variation,
)

INV_LOG = SymbolSpec.inv_log()
CONST1 = SymbolSpec.constant(1.0)
POW = SymbolSpec.power_decay


def test_linear_power_decay():
    assert eval_symbol(POW(1), 0.3) == pytest.approx(0.7, rel=1e-15)
    assert derivative(POW(1), 0.3) == pytest.approx(-1.0, rel=1e-15)


def test_inv_log_value():
    assert eval_symbol(INV_LOG, 1 - math.exp(-1)) == pytest.approx(0.5, rel=1e-14)


def test_log_cap_continuous_at_junction():
    a = SymbolSpec.log_cap()
    assert eval_symbol(a, 0.5 - 1e-12) == pytest.approx(math.log(2), rel=1e-9)
    assert eval_symbol(a, 0.5 + 1e-12) == pytest.approx(math.log(2), rel=1e-9)


def test_log_cap_kink():
    with pytest.raises(NotDifferentiable):
        derivative(SymbolSpec.log_cap(), 0.5)


def test_truncated_jump():
    a = SymbolSpec.truncated(CONST1, 0.5)
    assert eval_symbol(a, 0.4) == 1.0
    assert eval_symbol(a, 0.6) == 0.0
    with pytest.raises(NotDifferentiable):
        derivative(a, 0.5)
    hi = SymbolSpec.truncated(CONST1, 0.5, side="hi")
    assert eval_symbol(hi, 0.4) == 0.0 and eval_symbol(hi, 0.6) == 1.0


@pytest.mark.parametrize("a", [POW(0.5), POW(2.0), INV_LOG, SymbolSpec.log_cap()], ids=lambda a: a.spec_string)
def test_analytic_derivative_matches_difference_quotient(a):
    for r in (0.1, 0.7, 0.99, 1 - 1e-6):
        h = 1e-4 * (1 - r)
        fd = (eval_symbol(a, r + h) - eval_symbol(a, r - h)) / (2 * h)
        assert derivative(a, r) == pytest.approx(fd, rel=1e-5)


def test_tabulated_derivative_by_difference_quotient():
    r = np.linspace(0, 0.99, 200)
    a = SymbolSpec.tabulated(r, 1 - r ** 2)
    assert derivative(a, 0.5) == pytest.approx(-1.0, rel=1e-4)


def test_inv_log_bounded_hypothesis():
    rep = check_hypothesis(INV_LOG, "1.2")
    assert rep.verdict == "holds"
    assert rep.scan_sup == pytest.approx(1.0, abs=0.05)
    assert rep.scan_sup < 1.0


def test_inv_log_is_not_vanishing():
    assert check_hypothesis(INV_LOG, "1.3").verdict == "fails"


@pytest.mark.parametrize("delta", [0.25, 0.5, 1.0, 2.0])
def test_power_decay_vanishing_hypothesis(delta):
    assert check_hypothesis(POW(delta), "1.3").verdict == "holds"


def test_constant_fails_bounded_hypothesis():
    assert check_hypothesis(CONST1, "1.2").verdict == "fails"


def test_derivative_hypotheses_for_inv_log():
    assert check_hypothesis(INV_LOG, "1.1a").verdict == "holds"
    assert check_hypothesis(INV_LOG, "1.3r").verdict == "holds"
    assert check_hypothesis(INV_LOG, "1.3t").verdict == "fails"


def test_derivative_hypotheses_for_power_decay():
    assert check_hypothesis(POW(0.5), "1.3t").verdict == "holds"


def test_exponential_weight_hypotheses():
    # |a| (1-r)**(-1/2 - beta/4) with beta = 1
    assert check_hypothesis(POW(1.0), "1.5", w_beta=1.0).verdict == "holds"
    assert check_hypothesis(POW(0.75), "1.4", w_beta=1.0).verdict == "holds"
    assert check_hypothesis(POW(0.5), "1.4", w_beta=1.0).verdict == "fails"
    assert check_hypothesis(CONST1, "1.4", w_beta=1.0).verdict == "fails"


def test_hypothesis_needs_beta():
    with pytest.raises(InvalidParams):
        check_hypothesis(POW(1.0), "1.4")
    with pytest.raises(InvalidParams):
        check_hypothesis(POW(1.0), "2.7")


def test_derivative_hypothesis_on_jump_at_scan_point():
    a = SymbolSpec.truncated(CONST1, 0.9)
    with pytest.raises(NotDifferentiable):
        check_hypothesis(a, "1.3r")


def test_report_serializes():
    d = check_hypothesis(INV_LOG, "1.2").to_dict()
    assert set(d) == {"hypothesis", "scan_sup", "verdict", "r_scan_max", "statistics", "note"}
    assert len(d["statistics"]) == 12
    assert set(HYPOTHESES) >= {d["hypothesis"]}


def test_discrete_sup_constant():
    for n in (1, 10, 1e6):
        assert discrete_sup(CONST1, n) == pytest.approx(1.0)


def test_discrete_sup_parabola():
    assert discrete_sup(POW(1), 1) == pytest.approx(0.25, rel=1e-10)


def test_discrete_sup_inv_log_comparable_to_boundary_sup():
    ratio = boundary_sup(INV_LOG) / (discrete_sup(INV_LOG, 100) * math.log(100))
    cmp = sup_comparison(INV_LOG, 0.0, 1e4)
    assert 0.2 < ratio < 5
    assert cmp["continuous"] / cmp["discrete"] == pytest.approx(cmp["ratio"])


def test_discrete_sup_domain():
    with pytest.raises(InvalidParams):
        discrete_sup(CONST1, 1.5, 0.5)


@pytest.mark.parametrize("a,eps", [(INV_LOG, None), (POW(0.5), None), (POW(0.5), 0.25), (POW(0.5), 0.5)],
                         ids=["invlog", "pow-log", "pow-eps1/4", "pow-eps1/2"])
def test_discrete_and_continuous_suprema_stay_comparable(a, eps):
    r1 = sup_comparison(a, 0.0, 1e4, eps)["ratio"]
    r2 = sup_comparison(a, 0.0, 2e4, eps)["ratio"]
    assert 0 < r1 < math.inf
    assert r2 == pytest.approx(r1, rel=0.1)


def test_tail_variation_of_inv_log():
    for r in (0.5, 0.9, 1 - 1e-6):
        tv = tail_variation(INV_LOG, r)
        # a is monotone, so the variation is a(r) minus a at the cut t = 1e-300
        assert tv == pytest.approx(eval_symbol(INV_LOG, r) - 1 / (1 + 300 * math.log(10)), rel=1e-8)
        assert tv * abs(math.log(1 - r)) <= 1.0


def test_table_symbol_round_trip(tmp_path):
    path = tmp_path / "a.csv"
    path.write_text("r,a\n0,2\n0.5,1\n0.9,0.5\n")
    a = parse_symbol(f"table:{path}")
    assert eval_symbol(a, 0.5) == pytest.approx(1.0)
    assert a.nonneg_nonincreasing
    assert a.limit_at_one() == 0.5


@pytest.mark.parametrize("a", [POW(0.5), INV_LOG, SymbolSpec.log_cap(), SymbolSpec.constant(-2.5),
                               SymbolSpec.truncated(POW(1.0), 0.25, "hi"),
                               SymbolSpec.truncated(SymbolSpec.truncated(CONST1, 0.5), 0.25, "hi")],
                         ids=lambda a: a.spec_string)
def test_parse_round_trip(a):
    assert parse_symbol(a.spec_string) == a


@pytest.mark.parametrize("spec", ["pow", "pow:delta=-1", "pow:d=1", "const", "const:c=x", "trunc:invlog",
                                  "trunc:invlog,s=2,side=lo", "trunc:invlog,s=0.5,side=mid", "invlog:x",
                                  "table:/nonexistent.csv", "sin"])
def test_parse_errors(spec):
    with pytest.raises(SpecParseError):
        parse_symbol(spec)


def test_declared_shapes():
    assert INV_LOG.nonneg_nonincreasing and POW(1).nonneg_nonincreasing
    assert not SymbolSpec.constant(-1).nonneg_nonincreasing
    assert not SymbolSpec.truncated(CONST1, 0.5, "hi").nonneg_nonincreasing
    assert not SymbolSpec.tabulated([0, 0.5], [1, 2]).nonneg_nonincreasing


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(0.0, 0.999))
def test_power_decay_nonneg_and_decreasing(delta, r):
    a = POW(delta)
    assert eval_symbol(a, r) >= 0
    assert derivative(a, r) <= 0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.1, 5.0))
def test_scaled_sum_is_linear(s, c):
    a = SymbolSpec.scaled_sum([(c, INV_LOG), (1.0, SymbolSpec.truncated(CONST1, s))])
    r = np.array([0.01, s / 2, (1 + s) / 2, 0.999])
    np.testing.assert_allclose(a(r), c * INV_LOG(r) + (r <= s), rtol=1e-14)
