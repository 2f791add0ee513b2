import math

import numpy as np
import pytest

from toeplitz_hv.serialize import dumps
from toeplitz_hv.symbols import eval_symbol
from toeplitz_hv.verification import (
    CheckResult,
    VerifySummary,
    doubling_constant,
    grows_monotonically,
    random_decreasing_symbol,
    random_multipliers,
    random_polynomial,
    shift_ratio,
    suite_doubling,
    suite_exponential,
    suite_modulation,
    suite_monotonicity,
    suite_partial_sums,
    suite_sup_comparison,
    tail_dominance,
)
from toeplitz_hv.weights import WeightSpec

EXP11 = WeightSpec.exponential(1.0, 1.0)
STANDARD1 = WeightSpec.standard(1.0)


def test_grows_monotonically():
    assert grows_monotonically([1.0, 1.2, 1.5])
    assert not grows_monotonically([1.0, 1.04, 1.5])
    assert not grows_monotonically([1.0, 0.9, 2.0])
    assert grows_monotonically([1.0])


def test_random_families_shapes():
    rng = np.random.default_rng(3)
    for _ in range(50):
        assert random_polynomial(rng, 16).shape == (17,)
        assert random_multipliers(rng, 16).shape == (17,)


def test_random_decreasing_symbols_are_decreasing():
    rng = np.random.default_rng(4)
    r = np.linspace(0, 1 - 1e-9, 4001)
    for _ in range(30):
        a = random_decreasing_symbol(rng)
        v = np.array([eval_symbol(a, x) for x in r])
        assert a.nonneg_nonincreasing
        assert np.all(v >= 0) and np.all(np.diff(v) <= 1e-12)


def test_partial_sum_suite_passes_and_is_seeded():
    a = suite_partial_sums(np.random.default_rng(7), trials=40)
    b = suite_partial_sums(np.random.default_rng(7), trials=40)
    assert a.passed
    assert a.statistic == b.statistic
    assert all(0 < x <= 2.0 for x in a.statistic["max_ratio"])


def test_modulation_suite_passes():
    res = suite_modulation(np.random.default_rng(8), trials=40)
    assert res.passed
    assert all(isinstance(x, float) for x in res.statistic["max_ratio"])


def test_monotonicity_suite_passes():
    res = suite_monotonicity(np.random.default_rng(9), n_symbols=10, k_max=100)
    assert res.passed
    assert res.statistic["worst_margin"] >= -1e-8


def test_tail_dominance_close_to_one_for_large_k():
    # the tail near the maximizer carries almost all the mass
    val = tail_dominance(EXP11, 1e4)
    assert 1.0 <= val < 1.1


def test_shift_ratio_bounded():
    vals = [shift_ratio(EXP11, k) for k in (1e2, 1e3, 1e4)]
    assert all(1.0 < v < 10.0 for v in vals)
    assert max(vals) / min(vals) < 2.0


def test_exponential_suite():
    res = suite_exponential(weights=(EXP11,), k_hi=1e3, points=6)
    assert [r.name for r in res] == ["tail_dominance", "exponent_shift"]
    assert all(r.passed for r in res)


def test_sup_comparison_suite():
    assert all(r.passed for r in suite_sup_comparison(n_max=1e3))


def test_doubling_constant_standard():
    # int r^k (1-r) = 1/((k+1)(k+2)), ratio -> 4
    c = doubling_constant(STANDARD1, 200)
    k = np.arange(1, 201)
    expect = np.max((2 * k + 1) * (2 * k + 2) / ((k + 1) * (k + 2)))
    assert c == pytest.approx(expect, rel=1e-8)
    assert suite_doubling(STANDARD1, k_max=500).passed


def test_summary_serialization_deterministic():
    def run():
        s = VerifySummary(5)
        s.checks.append(suite_partial_sums(np.random.default_rng(5), sizes=(8, 16), trials=10))
        return dumps(s.to_dict())
    assert run() == run()


def test_summary_passed_flag():
    s = VerifySummary(0, [CheckResult("a", {}, {}, True), CheckResult("b", {}, {"x": math.pi}, False)])
    assert not s.passed
    assert s.to_dict()["checks"][1]["statistic"]["x"] == math.pi
