"""Randomized and scanned checks of the inequalities behind the criterion.

Every check returns a :class:`CheckResult` carrying the scale scanned, the
worst margin or fitted constant and a pass flag.  Randomness comes only from
the ``numpy.random.Generator`` handed in, so a fixed seed gives identical
output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ToeplitzError
from .multiplier import check_monotonicity
from .numerics import DEFAULT_CONFIG, QuadratureConfig, integrate_01_t
from .symbols import SymbolSpec, sup_comparison
from .weights import MomentRule, WeightSpec, check_normal, exponential_j, log_moment, log_peak, peak_config
from .window import lemma32_ratio, partial_sum_l1_ratio

SIZES = (8, 32, 128)
# a statistic "grows" across sizes if every step raises it by more than this
GROWTH_STEP = 0.05


@dataclass
class CheckResult:
    name: str
    scale: dict
    statistic: dict
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "scale": self.scale, "statistic": self.statistic,
                "passed": self.passed, "note": self.note}


def grows_monotonically(values, step: float = GROWTH_STEP) -> bool:
    """True when each value exceeds the previous one by more than ``step`` relative."""
    return all(b > (1.0 + step) * a for a, b in zip(values, values[1:]))


# ---------------------------------------------------------------------------
# random trigonometric polynomials
# ---------------------------------------------------------------------------

def _fejer_block(rng: np.random.Generator, n: int) -> np.ndarray:
    """Shifted Fejér-type bump: triangular coefficients around a random centre."""
    centre = rng.integers(0, n + 1)
    width = rng.integers(1, n + 1)
    k = np.arange(n + 1)
    return np.clip(1.0 - np.abs(k - centre) / width, 0.0, None) * np.exp(1j * rng.uniform(0, 2 * np.pi))


def random_polynomial(rng: np.random.Generator, n: int) -> np.ndarray:
    """Coefficients ``b_0 .. b_n`` from one of three families picked at random."""
    family = rng.integers(0, 3)
    if family == 0:
        return rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    if family == 1:
        return _fejer_block(rng, n)
    # sparse spikes: few random harmonics
    b = np.zeros(n + 1, dtype=complex)
    idx = rng.choice(n + 1, size=min(n + 1, rng.integers(1, 6)), replace=False)
    b[idx] = rng.normal(size=len(idx)) + 1j * rng.normal(size=len(idx))
    return b


def random_multipliers(rng: np.random.Generator, n: int) -> np.ndarray:
    """Coefficients ``alpha_0 .. alpha_n``: indicator, monotone, random walk or noise."""
    family = rng.integers(0, 4)
    if family == 0:
        return (np.arange(n + 1) >= rng.integers(0, n + 1)).astype(float)
    if family == 1:
        return np.sort(rng.uniform(size=n + 1))[::-1].copy()
    if family == 2:
        return np.cumsum(rng.normal(size=n + 1)) / math.sqrt(n + 1)
    return rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)


def suite_partial_sums(rng: np.random.Generator, sizes=SIZES, trials: int = 200) -> CheckResult:
    """Worst ``int |Q_m f| / (log m int |f|)`` over random ``f`` of degree ``4m``."""
    worst = []
    for m in sizes:
        best = 0.0
        for _ in range(trials):
            b = random_polynomial(rng, 4 * m)
            if not np.any(b):
                continue
            best = max(best, partial_sum_l1_ratio(b, m))
        worst.append(best)
    return CheckResult("partial_sum_projection", {"m": list(sizes), "trials": trials},
                       {"max_ratio": worst, "constant": max(worst)},
                       not grows_monotonically(worst))


def suite_modulation(rng: np.random.Generator, sizes=SIZES, trials: int = 200) -> CheckResult:
    """Worst modulation ratio over random ``f`` and coefficient sequences ``alpha``."""
    worst = []
    for n in sizes:
        best = 0.0
        for _ in range(trials):
            b = random_polynomial(rng, n)
            alpha = random_multipliers(rng, n)
            if not np.any(b) or not np.any(alpha):
                continue
            best = max(best, lemma32_ratio(b, alpha, n))
        worst.append(best)
    return CheckResult("modulated_polynomial", {"n": list(sizes), "trials": trials},
                       {"max_ratio": worst, "constant": max(worst)},
                       not grows_monotonically(worst))


# ---------------------------------------------------------------------------
# moment-ratio monotonicity
# ---------------------------------------------------------------------------

def random_decreasing_symbol(rng: np.random.Generator) -> SymbolSpec:
    """A nonnegative non-increasing symbol: a positive step sum or a decreasing table."""
    if rng.integers(0, 2) == 0:
        cuts = np.sort(rng.uniform(0.05, 0.999, size=rng.integers(1, 5)))
        heights = rng.uniform(0.1, 2.0, size=len(cuts))
        return SymbolSpec.scaled_sum(
            (float(h), SymbolSpec.truncated(SymbolSpec.constant(1.0), float(s), "lo"))
            for h, s in zip(heights, cuts))
    r = np.sort(rng.uniform(0.0, 0.999, size=rng.integers(3, 9)))
    r = np.unique(np.concatenate([[0.0], r]))
    a = np.sort(rng.uniform(0.0, 3.0, size=len(r)))[::-1]
    return SymbolSpec.tabulated(r, a)


DEFAULT_WEIGHTS = (WeightSpec.standard(1.0), WeightSpec.exponential(1.0, 1.0), WeightSpec.slow_log())


def suite_monotonicity(rng: np.random.Generator, weights=DEFAULT_WEIGHTS, n_symbols: int = 50,
                  k_max: int = 200, floor: float = -1e-8,
                  cfg: QuadratureConfig = DEFAULT_CONFIG) -> CheckResult:
    """Consecutive-exponent margins for random decreasing symbols on every weight."""
    symbols = [random_decreasing_symbol(rng) for _ in range(n_symbols)]
    worst, where = math.inf, None
    for w in weights:
        for i, a in enumerate(symbols):
            rep = check_monotonicity(w, a, k_max, "consecutive", cfg)
            if rep.worst_margin < worst:
                worst, where = rep.worst_margin, {"weight": w.spec_string, "symbol": i, "k": rep.worst_k}
    return CheckResult("moment_ratio_monotonicity",
                       {"weights": [w.spec_string for w in weights], "symbols": n_symbols, "k_max": k_max},
                       {"worst_margin": worst, "at": where, "floor": floor}, worst >= floor)


# ---------------------------------------------------------------------------
# exponential weights: tail dominance and exponent shift
# ---------------------------------------------------------------------------

def log_tail_moment(w: WeightSpec, k: float, t_cut: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``log int_{1-t_cut}^1 r**k v dr``."""
    t_pk, s = log_peak(w, k)
    cfg = peak_config(w, k, t_pk, cfg)

    def g(t):
        return np.where(t <= t_cut, np.exp(k * np.log1p(-t) + w.log_v_t(t) - s), 0.0)

    return s + math.log(integrate_01_t(g, cfg, breakpoints=[t_pk, t_cut]))


def tail_dominance(w: WeightSpec, k: float, delta: float = 0.5,
                   cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``int_0^1 r**k v / int_{1-1/(delta j)}^1 r**k v`` with ``j = j(k)``."""
    j = exponential_j(w, k)
    t_cut = min(1.0, 1.0 / (delta * j))
    return math.exp(log_moment(w, k, cfg) - log_tail_moment(w, k, t_cut, cfg))


def shift_ratio(w: WeightSpec, k: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``int r**(k - k**(1/(beta+1))) v / int r**k v``."""
    shift = k ** (1.0 / (w.beta + 1.0))
    return math.exp(log_moment(w, k - shift, cfg) - log_moment(w, k, cfg))


EXP_WEIGHTS = (WeightSpec.exponential(1.0, 1.0), WeightSpec.exponential(2.0, 0.5))


def suite_exponential(weights=EXP_WEIGHTS, k_lo: float = 100.0, k_hi: float = 1e4, points: int = 25,
                      factor: float = 2.0, cfg: QuadratureConfig = DEFAULT_CONFIG) -> list[CheckResult]:
    """Both exponential-weight constants stay within ``factor`` of their value at ``k_lo``."""
    ks = np.geomspace(k_lo, k_hi, points)
    out = []
    for name, func in (("tail_dominance", tail_dominance), ("exponent_shift", shift_ratio)):
        for w in weights:
            vals = np.array([func(w, float(k), cfg=cfg) for k in ks])
            rel = vals / vals[0]
            out.append(CheckResult(
                name, {"weight": w.spec_string, "k": [k_lo, k_hi], "points": points},
                {"fitted": float(vals[0]), "min_rel": float(rel.min()), "max_rel": float(rel.max())},
                bool(rel.max() <= factor and rel.min() >= 1.0 / factor)))
    return out


# ---------------------------------------------------------------------------
# discrete versus continuous suprema, doubling-exponent moments
# ---------------------------------------------------------------------------

def suite_sup_comparison(n_max: float = 1e4, stable_rel: float = 0.1) -> list[CheckResult]:
    """Ratio of the continuous supremum to the discrete one, stable as ``n_max`` doubles."""
    cases = [(SymbolSpec.inv_log(), None), (SymbolSpec.power_decay(0.5), None),
             (SymbolSpec.power_decay(0.5), 0.25), (SymbolSpec.power_decay(0.5), 0.5)]
    out = []
    for a, eps in cases:
        r1 = sup_comparison(a, 0.0, n_max, eps)["ratio"]
        r2 = sup_comparison(a, 0.0, 2 * n_max, eps)["ratio"]
        ok = 0 < r1 < math.inf and abs(r2 / r1 - 1.0) < stable_rel
        out.append(CheckResult("sup_comparison", {"symbol": a.spec_string, "epsilon": eps, "n_max": [n_max, 2 * n_max]},
                               {"ratio": [r1, r2]}, bool(ok)))
    return out


def doubling_constant(w: WeightSpec, k_max: int, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``max_{1 <= k <= k_max} int r**k v / int r**(2k) v``."""
    k = np.arange(1, k_max + 1, dtype=float)
    rule = MomentRule(w, cfg)
    return float(np.exp(np.max(rule.log_moments(k) - rule.log_moments(2 * k))))


def suite_doubling(w: WeightSpec, k_max: int = 5000, stable_rel: float = 0.05,
                  cfg: QuadratureConfig = DEFAULT_CONFIG) -> CheckResult:
    c1, c2 = doubling_constant(w, k_max, cfg), doubling_constant(w, 2 * k_max, cfg)
    return CheckResult("doubling_moments", {"weight": w.spec_string, "k_max": [k_max, 2 * k_max]},
                       {"constant": [c1, c2]}, bool(c2 <= (1 + stable_rel) * c1))


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

@dataclass
class VerifySummary:
    seed: int
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def run_verify(w: WeightSpec, seed: int = 0, trials: int = 200,
               cfg: QuadratureConfig = DEFAULT_CONFIG) -> VerifySummary:
    """All checks; the configured weight joins the monotonicity suite and, if
    normal, the doubling-moment check, and the exponential suite if exponential."""
    rng = np.random.default_rng(seed)
    summary = VerifySummary(seed)
    summary.checks.append(suite_partial_sums(rng, trials=trials))
    summary.checks.append(suite_modulation(rng, trials=trials))
    weights = {x.spec_string: x for x in (w, *DEFAULT_WEIGHTS)}
    summary.checks.append(suite_monotonicity(rng, tuple(weights.values()), cfg=cfg))
    exp_weights = {x.spec_string: x for x in EXP_WEIGHTS}
    if w.kind == "exponential":
        exp_weights.setdefault(w.spec_string, w)
    summary.checks.extend(suite_exponential(tuple(exp_weights.values()), cfg=cfg))
    summary.checks.extend(suite_sup_comparison())
    try:
        normal = check_normal(w).verdict == "consistent"
    except ToeplitzError:
        normal = False
    if normal:
        summary.checks.append(suite_doubling(w, cfg=cfg))
    return summary
