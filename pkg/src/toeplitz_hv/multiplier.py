"""The multiplier sequence ``gamma_n`` and the Toeplitz operator on Taylor coefficients.

``gamma_n = int r**(2n+1) v a dr / int r**(2n+1) v dr``.  Both integrals are
taken in the log domain relative to the peak of ``r**(2n+1) v``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DenominatorUnderflow, InvalidParams, RangeExceeded, SpecParseError
from .numerics import DEFAULT_CONFIG, QuadratureConfig, integrate_01_t
from .symbols import SymbolSpec
from .weights import MomentRule, WeightSpec, log_peak, peak_config


def _symbol_breaks_t(a: SymbolSpec) -> list[float]:
    return [1.0 - b for b in a.breakpoints if 0.0 < b < 1.0]


def gamma_exponent(w: WeightSpec, a: SymbolSpec, k: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``int r**k v a / int r**k v`` by adaptive quadrature."""
    if k < 0:
        raise InvalidParams("exponent must be non-negative")
    t_pk, s = log_peak(w, k)
    cfg = peak_config(w, k, t_pk, cfg)

    def g(t):
        e = np.exp(k * np.log1p(-t) + w.log_v_t(t) - s)
        return np.stack([a.eval_t(t) * e, e])

    num, den = integrate_01_t(g, cfg, breakpoints=[t_pk, *_symbol_breaks_t(a)])
    if not den > 0:
        raise DenominatorUnderflow(f"moment of order {k} vanished even after peak scaling")
    return float(num / den)


def gamma(w: WeightSpec, a: SymbolSpec, n: int, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``gamma_n``, the multiplier on the ``n``-th Taylor coefficient."""
    if n < 0:
        raise InvalidParams("n must be non-negative")
    return gamma_exponent(w, a, 2 * n + 1, cfg)


def moment_ratios(w: WeightSpec, a: SymbolSpec, exponents, cfg: QuadratureConfig = DEFAULT_CONFIG) -> np.ndarray:
    """``int r**k v a / int r**k v`` for many exponents on one fixed graded rule."""
    rule = MomentRule(w, cfg, breakpoints_t=_symbol_breaks_t(a))
    _, sums = rule.scaled_moments(exponents, factors=(a.eval_t(rule.t),))
    if np.any(sums[:, 0] <= 0):
        raise DenominatorUnderflow("a moment vanished on the fixed rule")
    return sums[:, 1] / sums[:, 0]


@dataclass(frozen=True)
class MultiplierSequence:
    """``gamma_0 .. gamma_N`` with the weight and symbol it came from."""

    gammas: np.ndarray
    weight_ref: str
    symbol_ref: str

    @property
    def n_max(self) -> int:
        return len(self.gammas) - 1

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["n", "gamma"])
            for n, g in enumerate(self.gammas):
                out.writerow([n, f"{g:.17g}"])


def gamma_sequence(w: WeightSpec, a: SymbolSpec, n_max: int,
                   cfg: QuadratureConfig = DEFAULT_CONFIG) -> MultiplierSequence:
    """``gamma_0 .. gamma_{n_max}`` evaluated together on the fixed graded rule."""
    if n_max < 0:
        raise InvalidParams("n_max must be non-negative")
    exps = 2.0 * np.arange(n_max + 1) + 1.0
    return MultiplierSequence(moment_ratios(w, a, exps, cfg), w.spec_string, a.spec_string)


def constant_sequence(value: float, n_max: int, ref: str = "constant") -> MultiplierSequence:
    return MultiplierSequence(np.full(n_max + 1, float(value)), ref, ref)


# ---------------------------------------------------------------------------
# coefficient functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientFunction:
    """Taylor coefficients ``h_0 .. h_M`` of a polynomial ``h(z)``."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=complex))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


def read_coeffs(path) -> CoefficientFunction:
    """Read a CSV with header ``n,re,im``; missing indices are zero."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise SpecParseError(f"cannot read coefficient file {path}: {exc}") from exc
    if not rows or set(rows[0]) != {"n", "re", "im"}:
        raise SpecParseError(f"{path}: expected header n,re,im")
    try:
        entries = {int(r["n"]): complex(float(r["re"]), float(r["im"])) for r in rows}
    except (TypeError, ValueError) as exc:
        raise SpecParseError(f"{path}: {exc}") from exc
    if min(entries) < 0:
        raise SpecParseError(f"{path}: negative coefficient index")
    coeffs = np.zeros(max(entries) + 1, dtype=complex)
    for n, c in entries.items():
        coeffs[n] = c
    return CoefficientFunction(coeffs)


def write_coeffs(h: CoefficientFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["n", "re", "im"])
        for n, c in enumerate(h.coeffs):
            out.writerow([n, f"{c.real:.17g}", f"{c.imag:.17g}"])


def apply_toeplitz(g: MultiplierSequence, h: CoefficientFunction) -> CoefficientFunction:
    """``T_a h = sum gamma_n h_n z**n``."""
    if h.degree > g.n_max:
        raise RangeExceeded(f"degree {h.degree} exceeds the multiplier range 0..{g.n_max}")
    return CoefficientFunction(np.asarray(g.gammas[: h.degree + 1]) * h.coeffs)


# ---------------------------------------------------------------------------
# monotonicity of moment ratios
# ---------------------------------------------------------------------------

@dataclass
class MonotonicityReport:
    grid: str
    n_max: int
    worst_margin: float
    worst_k: int
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_monotonicity(w: WeightSpec, a: SymbolSpec, n_max: int, grid: str = "consecutive",
                       cfg: QuadratureConfig = DEFAULT_CONFIG) -> MonotonicityReport:
    """Margins ``rho_k - rho_{k+1}`` of ``rho_k = int a r**k v / int r**k v``.

    ``grid='consecutive'`` uses ``k = 0..n_max``; ``grid='odd'`` uses the
    exponents ``2n+1`` of the multiplier sequence.  The check passes when the
    worst margin is at least ``-10 rel_tol`` times the largest ``|rho_k|``.
    """
    if not a.nonneg_nonincreasing:
        raise InvalidParams(f"{a.spec_string} is not declared nonnegative and non-increasing")
    if grid == "consecutive":
        exps = np.arange(n_max + 2, dtype=float)
    elif grid == "odd":
        exps = 2.0 * np.arange(n_max + 2) + 1.0
    else:
        raise InvalidParams(f"unknown grid {grid!r}")
    rho = moment_ratios(w, a, exps, cfg)
    margins = rho[:-1] - rho[1:]
    i = int(np.argmin(margins))
    tol = -10.0 * cfg.rel_tol * float(np.max(np.abs(rho)))
    return MonotonicityReport(grid, n_max, float(margins[i]), int(exps[i]), tol,
                              bool(margins[i] >= tol))


def beta_ratio(alpha: float, delta: float, n: int) -> float:
    """Closed form of ``gamma_n`` for ``v = (1-r)**alpha``, ``a = (1-r)**delta``."""
    from scipy.special import betaln

    return math.exp(betaln(2 * n + 2, alpha + delta + 1) - betaln(2 * n + 2, alpha + 1))
