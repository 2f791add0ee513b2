"""Acceptance suite: one PASS/FAIL line per criterion, each with a runtime budget."""

import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy.special import beta as beta_fn
from scipy.special import betaln

from toeplitz_hv.blocks import build_blocks_exponential, build_blocks_generic, build_blocks_normal, verify_ratio_bound
from toeplitz_hv.cli import main
from toeplitz_hv.multiplier import gamma
from toeplitz_hv.symbols import SymbolSpec
from toeplitz_hv.verification import (
    grows_monotonically,
    suite_exponential,
    suite_modulation,
    suite_monotonicity,
    suite_partial_sums,
)
from toeplitz_hv.weights import WeightSpec, moment
from toeplitz_hv.window import diagnose, trapezoid_kernel_l1, vanishing_envelope, vdp_kernel_l1

pytestmark = pytest.mark.slow

SEED = 20240601


@contextmanager
def criterion(capsys, number, title, budget):
    """Run the body, then print one status line; any failure or overrun is FAIL."""
    state = {"ok": False, "detail": ""}
    start = time.perf_counter()
    try:
        yield state
    except BaseException as exc:
        state["ok"], state["detail"] = False, f"{type(exc).__name__}: {exc}"
        raise
    finally:
        elapsed = time.perf_counter() - start
        in_time = elapsed < budget
        status = "PASS" if state["ok"] and in_time else "FAIL"
        with capsys.disabled():
            print(f"\n[{status}] criterion {number}: {title} ({elapsed:.1f}s / {budget:.0f}s) {state['detail']}")
    assert in_time, f"criterion {number} took {elapsed:.1f}s, budget {budget}s"


def test_criterion_1_moment_oracle(capsys):
    with criterion(capsys, 1, "standard-weight moments equal B(k+1, alpha+1)", 5) as st:
        worst = 0.0
        for alpha in (0.5, 1.0, 2.0):
            w = WeightSpec.standard(alpha)
            for k in range(201):
                worst = max(worst, abs(moment(w, k) / beta_fn(k + 1, alpha + 1) - 1))
        st["detail"] = f"worst rel err {worst:.1e}"
        assert worst <= 1e-10
        st["ok"] = True


def test_criterion_2_multiplier_oracle(capsys):
    rng = np.random.default_rng(SEED)
    triples = [(float(rng.uniform(0.25, 3)), float(rng.uniform(0.1, 3)), int(rng.integers(0, 2000)))
               for _ in range(20)]
    with criterion(capsys, 2, "power-decay multipliers equal the Beta ratio", 5) as st:
        worst = 0.0
        for alpha, delta, n in triples:
            oracle = math.exp(betaln(2 * n + 2, alpha + delta + 1) - betaln(2 * n + 2, alpha + 1))
            worst = max(worst, abs(gamma(WeightSpec.standard(alpha), SymbolSpec.power_decay(delta), n) / oracle - 1))
        st["detail"] = f"worst rel err {worst:.1e}"
        assert worst <= 1e-9
        st["ok"] = True


def test_criterion_3_monotone_margins(capsys):
    with criterion(capsys, 3, "moment-ratio margins for 50 random decreasing symbols", 60) as st:
        res = suite_monotonicity(np.random.default_rng(SEED), n_symbols=50, k_max=200, floor=-1e-8)
        st["detail"] = f"worst margin {res.statistic['worst_margin']:.2e}"
        assert res.passed and res.statistic["worst_margin"] >= -1e-8
        st["ok"] = True


def _loglog_slope(seq, lo, hi):
    n = np.arange(lo, hi + 1)
    return float(np.polyfit(np.log(n), np.log([seq.m(int(k)) for k in n]), 1)[0])


def test_criterion_4_block_closed_forms(capsys):
    with criterion(capsys, 4, "closed-form blocks, ratio bound, generic growth slope", 30) as st:
        closed = build_blocks_exponential(1.0, 1.0, 40, n_start=1)
        n = np.array(closed.labels, dtype=float)
        assert np.array_equal(np.array(closed.indices), n ** 4 - n ** 2)
        ratios = [verify_ratio_bound(build_blocks_exponential(1.0, 1.0, c, n_start=1)) for c in (10, 20, 30, 40)]
        assert not grows_monotonically(ratios) and max(ratios) < 10
        slope = _loglog_slope(build_blocks_generic(WeightSpec.exponential(1.0, 1.0), 4.0, 80), 40, 80)
        st["detail"] = f"ratio bound {ratios[-1]:.3g}, slope {slope:.3f}"
        assert abs(slope - 4.0) <= 0.3
        st["ok"] = True


def test_criterion_5_exponential_constants(capsys):
    with criterion(capsys, 5, "tail dominance and exponent shift within 2x on [1e2, 1e4]", 60) as st:
        res = suite_exponential(factor=2.0)
        st["detail"] = ", ".join(f"{r.name}[{r.scale['weight']}] {r.statistic['min_rel']:.2f}..{r.statistic['max_rel']:.2f}"
                                 for r in res)
        assert len(res) == 4 and all(r.passed for r in res)
        st["ok"] = True


def test_criterion_6_randomized_polynomial_suites(capsys):
    with criterion(capsys, 6, "partial-sum and modulation ratios do not grow with size", 60) as st:
        rng = np.random.default_rng(SEED)
        ps = suite_partial_sums(rng, sizes=(8, 32, 128), trials=200)
        mod = suite_modulation(rng, sizes=(8, 32, 128), trials=200)
        st["detail"] = (f"partial sums {np.round(ps.statistic['max_ratio'], 3).tolist()}, "
                        f"modulation {np.round(mod.statistic['max_ratio'], 3).tolist()}")
        assert ps.passed and mod.passed
        st["ok"] = True


def test_criterion_7_criterion_end_to_end(capsys):
    with criterion(capsys, 7, "bounded / compact / vanishing / identity sweeps", 600) as st:
        w = WeightSpec.standard(1.0)
        seq = build_blocks_normal(1, 16, w)
        ns = range(2, 16)
        assert seq.floor(16) <= 100_000
        notes = []

        inv = diagnose(w, SymbolSpec.inv_log(), seq, ns)
        assert inv.verdict_bounded == "evidence_for"
        notes.append(f"invlog bounded={inv.verdict_bounded}")

        pw = diagnose(w, SymbolSpec.power_decay(0.5), seq, ns)
        pn = [r.l1_norm for r in pw.records]
        assert pw.verdict_compact == "evidence_for"
        assert pn[-1] <= 0.25 * pn[0] and pw.trend_slope < 0
        notes.append(f"pow compact={pw.verdict_compact} slope={pw.trend_slope:.2f}")

        trunc = SymbolSpec.truncated(SymbolSpec.constant(1.0), 0.5)
        c2, q = vanishing_envelope(w, trunc, seq, 0.5)
        tr = diagnose(w, trunc, seq, ns)
        tn = [r.l1_norm for r in tr.records]
        assert all(r.l1_norm <= c2 * r.m_prev * q ** r.m_prev for r in tr.records)
        assert tn[-1] < 1e-100 and tn[-1] <= tn[0]
        notes.append(f"trunc last={tn[-1]:.1e}")

        const = diagnose(w, SymbolSpec.constant(1.0), seq, ns)
        rel = [r.l1_norm / trapezoid_kernel_l1(seq.floor(r.n - 1), seq.floor(r.n), seq.floor(r.n + 1))
               for r in const.records]
        assert all(0.3 <= x <= 3.0 for x in rel)
        assert const.verdict_bounded == "evidence_for" and const.verdict_compact == "evidence_against"
        notes.append(f"const/oracle {min(rel):.6f}..{max(rel):.6f}")
        st["detail"] = "; ".join(notes)
        st["ok"] = True


def test_criterion_8_kernel_running_sup(capsys):
    with criterion(capsys, 8, "de la Vallee-Poussin kernel norm stabilizes for all builders", 120) as st:
        builders = {
            "normal": build_blocks_normal(1, 13),
            "exp": build_blocks_exponential(1.0, 1.0, 13, n_start=1),
            "generic": build_blocks_generic(WeightSpec.exponential(1.0, 1.0), 4.0, 13),
        }
        changes = {}
        for name, seq in builders.items():
            labels = [n for n in seq.labels[1:-1] if 2 <= n <= 12]
            run = np.maximum.accumulate([vdp_kernel_l1(seq, n) for n in labels])
            changes[name] = float(run[-1] / run[-4] - 1)
        st["detail"] = ", ".join(f"{k} {v:.2%}" for k, v in changes.items())
        assert all(v < 0.05 for v in changes.values())
        st["ok"] = True


def _cli_json(capsys, argv):
    assert main(argv) == 0
    return capsys.readouterr().out


def test_criterion_9_determinism(capsys):
    verify = ["verify", "--seed", "11", "--trials", "60"]
    diag = ["diagnose", "--symbol", "invlog", "--count", "10"]
    start = time.perf_counter()
    first = (_cli_json(capsys, verify), _cli_json(capsys, diag))
    single = time.perf_counter() - start
    with criterion(capsys, 9, "verify and diagnose JSON byte-identical across runs", 2 * single + 1) as st:
        second = (_cli_json(capsys, verify), _cli_json(capsys, diag))
        assert first == second
        json.loads(second[0]), json.loads(second[1])
        st["detail"] = f"{len(first[0]) + len(first[1])} bytes"
        st["ok"] = True
