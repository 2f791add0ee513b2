"""Radial weights ``v`` on ``[0, 1)``, their moments and maximizer radii.

Weights are evaluated in the variable ``t = 1 - r`` and in the log domain:
exponential weights underflow double precision long before ``r`` reaches 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq
from scipy.special import expit, log_expit

from .errors import InvalidParams, NonConvergence, OutOfDomain, SpecParseError
from .numerics import DEFAULT_CONFIG, QuadratureConfig, golden_section_max, graded_rule, integrate_01_t

KINDS = ("standard", "exponential", "slow_log", "tabulated")

# logit search window for maximizer radii: r = expit(u), t = expit(-u)
_U_LO, _U_HI = -700.0, 700.0
_U_SCAN = np.linspace(_U_LO, _U_HI, 561)


@dataclass(frozen=True)
class WeightSpec:
    kind: str
    alpha: float | None = None
    beta: float | None = None
    table: tuple[tuple[float, ...], tuple[float, ...]] | None = None
    source: str | None = None
    _interp: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParams(f"unknown weight kind {self.kind!r}")
        if self.kind in ("standard", "exponential"):
            if self.alpha is None or not self.alpha > 0:
                raise InvalidParams(f"{self.kind} weight needs alpha > 0")
        if self.kind == "exponential" and (self.beta is None or not self.beta > 0):
            raise InvalidParams("exponential weight needs beta > 0")
        if self.kind == "tabulated":
            object.__setattr__(self, "_interp", _build_table_interp(*self.table))

    @classmethod
    def standard(cls, alpha: float) -> "WeightSpec":
        return cls("standard", alpha=float(alpha))

    @classmethod
    def exponential(cls, alpha: float, beta: float) -> "WeightSpec":
        return cls("exponential", alpha=float(alpha), beta=float(beta))

    @classmethod
    def slow_log(cls) -> "WeightSpec":
        return cls("slow_log")

    @classmethod
    def tabulated(cls, r: Sequence[float], v: Sequence[float], source: str | None = None) -> "WeightSpec":
        return cls("tabulated", table=(tuple(map(float, r)), tuple(map(float, v))), source=source)

    @property
    def spec_string(self) -> str:
        if self.kind == "standard":
            return f"standard:alpha={self.alpha:.17g}"
        if self.kind == "exponential":
            return f"exp:alpha={self.alpha:.17g},beta={self.beta:.17g}"
        if self.kind == "slow_log":
            return "slowlog"
        return f"table:{self.source}" if self.source else "table:<inline>"

    def log_v_t(self, t):
        """``log v(1 - t)``; ``-inf`` where ``v`` vanishes numerically."""
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            if self.kind == "standard":
                return self.alpha * np.log(t)
            if self.kind == "exponential":
                return -self.alpha * np.power(t, -self.beta)
            if self.kind == "slow_log":
                return -np.log1p(-np.log(t))
            vals = self._interp(np.maximum(1.0 - t, self.table[0][0]))
            return np.where(vals > 0, np.log(np.where(vals > 0, vals, 1.0)), -np.inf)

    def log_v_logt(self, s):
        """``log v`` as a function of ``s = log(1 - r)``; exact for tiny ``1 - r``."""
        s = np.asarray(s, dtype=float)
        with np.errstate(over="ignore"):
            if self.kind == "standard":
                return self.alpha * s
            if self.kind == "exponential":
                return -self.alpha * np.exp(-self.beta * s)
            if self.kind == "slow_log":
                return -np.log1p(-s)
        return self.log_v_t(np.exp(s))

    def dlog_v_dt(self, t):
        """Derivative of ``log v(1 - t)`` with respect to ``t`` (non-negative)."""
        t = np.asarray(t, dtype=float)
        if self.kind == "standard":
            return self.alpha / t
        if self.kind == "exponential":
            return self.alpha * self.beta * np.power(t, -self.beta - 1.0)
        if self.kind == "slow_log":
            return 1.0 / (t * (1.0 - np.log(t)))
        r = np.maximum(1.0 - t, self.table[0][0])
        return -self._interp(r, 1) / self._interp(r)

    def __call__(self, r):
        return np.exp(self.log_v_t(1.0 - np.asarray(r, dtype=float)))


def _build_table_interp(r, v):
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    if r.ndim != 1 or len(r) < 2 or len(r) != len(v):
        raise SpecParseError("weight table needs at least two (r, v) rows")
    if np.any(np.diff(r) <= 0) or r[0] < 0 or r[-1] >= 1:
        raise SpecParseError("weight table radii must be strictly increasing in [0, 1)")
    if r[-1] < 1 - 1e-6:
        raise SpecParseError("weight table must reach r >= 1 - 1e-6")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise SpecParseError("weight table values must be positive and finite")
    if np.any(np.diff(v) > 0):
        raise SpecParseError("weight table values must be non-increasing")
    return PchipInterpolator(np.append(r, 1.0), np.append(v, 0.0), extrapolate=False)


def read_table(path: str | Path, value_column: str) -> tuple[list[float], list[float]]:
    """Read a two-column CSV with header ``r,<value_column>``."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["r", value_column]:
                raise SpecParseError(f"{path}: expected header 'r,{value_column}'")
            rows = [(float(row["r"]), float(row[value_column])) for row in reader]
    except OSError as exc:
        raise SpecParseError(f"cannot read table {path}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SpecParseError):
            raise
        raise SpecParseError(f"{path}: malformed row ({exc})") from exc
    return [r for r, _ in rows], [x for _, x in rows]


def _parse_params(body: str, expected: set[str], spec: str) -> dict[str, float]:
    out = {}
    for part in filter(None, body.split(",")):
        key, sep, val = part.partition("=")
        key = key.strip()
        if not sep or key not in expected or key in out:
            raise SpecParseError(f"bad parameter {part!r} in {spec!r}")
        try:
            out[key] = float(val)
        except ValueError:
            raise SpecParseError(f"parameter {key} in {spec!r} is not a number") from None
    if set(out) != expected:
        raise SpecParseError(f"{spec!r} needs parameters {sorted(expected)}")
    return out


def parse_weight(spec: str) -> WeightSpec:
    """Parse ``standard:alpha=..``, ``exp:alpha=..,beta=..``, ``slowlog`` or ``table:<path>``."""
    head, _, body = spec.strip().partition(":")
    try:
        if head == "standard":
            return WeightSpec.standard(**_parse_params(body, {"alpha"}, spec))
        if head == "exp":
            return WeightSpec.exponential(**_parse_params(body, {"alpha", "beta"}, spec))
        if head == "slowlog" and not body:
            return WeightSpec.slow_log()
        if head == "table" and body:
            r, v = read_table(body, "v")
            return WeightSpec.tabulated(r, v, source=body)
    except InvalidParams as exc:
        raise SpecParseError(str(exc)) from exc
    raise SpecParseError(f"unrecognized weight spec {spec!r}")


def eval_weight(w: WeightSpec, r: float) -> float:
    if not 0.0 <= r < 1.0:
        raise OutOfDomain(f"r = {r} is outside [0, 1)")
    return float(np.exp(w.log_v_t(1.0 - r)))


# ---------------------------------------------------------------------------
# maximizer radii
# ---------------------------------------------------------------------------

def _exponential_j(alpha: float, beta: float, m: float) -> float:
    """Unique ``j > 1`` with ``m = alpha*beta*(j**(beta+1) - j**beta)``, returned as ``log j``."""
    target = math.log(m) - math.log(alpha * beta)

    def h(u):
        return beta * u + math.log(math.expm1(u)) - target

    lo, hi = 1e-300, 1.0
    while h(hi) < 0:
        hi *= 2.0
        if hi > 1e6:
            raise NonConvergence(f"cannot bracket the maximizer equation for m = {m}")
    if h(lo) >= 0:
        return lo
    return brentq(h, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def max_point_t(w: WeightSpec, m: float) -> float:
    """``1 - r_m`` where ``r_m`` maximizes ``r**m * v(r)``."""
    if not m > 0:
        raise InvalidParams(f"max_point needs m > 0, got {m}")
    if w.kind == "exponential":
        return math.exp(-_exponential_j(w.alpha, w.beta, m))

    def phi(u):
        return float(m * log_expit(u) + w.log_v_t(expit(-u)))

    def slope(u):
        # d/du phi = t * (m - r * dlogv/dt)
        return float(m - expit(u) * w.dlog_v_dt(expit(-u)))

    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        vals = m * log_expit(_U_SCAN) + w.log_v_t(expit(-_U_SCAN))
        i = int(np.argmax(vals))  # first maximizer = smallest radius
        lo = _U_SCAN[max(i - 1, 0)]
        hi = _U_SCAN[min(i + 1, len(_U_SCAN) - 1)]
        u, _ = golden_section_max(phi, lo, hi, tol=1e-9)
        # function values only resolve the peak to ~sqrt(eps); polish on the slope
        a, b = max(lo, u - 1e-6), min(hi, u + 1e-6)
        sa, sb = slope(a), slope(b)
        if not (sa > 0 > sb):
            a, b, sa, sb = lo, hi, slope(lo), slope(hi)
        if sa > 0 > sb:
            u = brentq(slope, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return float(expit(-u))


def max_point(w: WeightSpec, m: float) -> float:
    """Radius ``r_m`` at which ``r**m v(r)`` attains its maximum."""
    return 1.0 - max_point_t(w, m)


def exponential_j(w: WeightSpec, k: float) -> float:
    """The ``j(k)`` solving ``k = alpha*beta*(j**(beta+1) - j**beta)``."""
    if w.kind != "exponential":
        raise InvalidParams("j(k) is defined for exponential weights only")
    return math.exp(_exponential_j(w.alpha, w.beta, k))


def log_peak(w: WeightSpec, m: float) -> tuple[float, float]:
    """``(t_m, log(r_m**m v(r_m)))``; for ``m = 0`` the peak is at ``r = 0``."""
    if m == 0:
        return 1.0, float(w.log_v_t(1.0))
    t = max_point_t(w, m)
    return t, float(m * math.log1p(-t) + w.log_v_t(t))


def peak_config(w: WeightSpec, k: float, t_pk: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> QuadratureConfig:
    """``cfg`` with ``rel_tol`` raised to the rounding floor of the peak-scaled integrand.

    ``k log r + log v - s`` is a difference of terms of size ``|k log r_m|``
    and ``|log v(r_m)|``, so the integrand carries relative noise of about
    ``eps`` times that size; asking for less makes bisection chase noise.
    """
    size = (abs(k * math.log1p(-t_pk)) if k else 0.0) + abs(float(w.log_v_t(t_pk)))
    floor = 64.0 * np.finfo(float).eps * size
    return cfg if floor <= cfg.rel_tol else replace(cfg, rel_tol=floor)


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------

def log_moment(w: WeightSpec, k: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``log`` of ``I_k = int_0^1 r**k v(r) dr`` by adaptive quadrature."""
    if k < 0:
        raise InvalidParams("moment exponent must be non-negative")
    t_pk, s = log_peak(w, k)
    cfg = peak_config(w, k, t_pk, cfg)

    def g(t):
        return np.exp(k * np.log1p(-t) + w.log_v_t(t) - s)

    return s + math.log(integrate_01_t(g, cfg, breakpoints=[t_pk]))


def moment(w: WeightSpec, k: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    return math.exp(log_moment(w, k, cfg))


class MomentRule:
    """Fixed graded rule evaluating many moments ``int r**k v g dr`` at once.

    Moments are produced as ``(scale, value)`` pairs meaning
    ``value * exp(scale)``, so neither underflow nor signed factors ``g``
    are a problem.  Nodes where ``v`` underflows even in the log domain are
    dropped.
    """

    def __init__(self, w: WeightSpec, cfg: QuadratureConfig = DEFAULT_CONFIG,
                 breakpoints_t=(), subpanels: int = 4, chunk: int = 512):
        t, q = graded_rule(cfg, breakpoints_t, subpanels)
        log_base = np.log(q) + w.log_v_t(t)
        keep = np.isfinite(log_base)
        self.weight = w
        self.t = t[keep]
        self.log_r = np.log1p(-self.t)
        self.log_base = log_base[keep]
        self.chunk = chunk

    def scaled_moments(self, exponents, factors=()):
        """For each exponent ``k`` return ``scale_k`` and the sums
        ``sum_i f(t_i) exp(k log r_i + log_base_i - scale_k)`` for ``f`` in
        ``(1, *factors)``; the first column is the plain moment."""
        exponents = np.atleast_1d(np.asarray(exponents, dtype=float))
        mat = np.column_stack([np.ones_like(self.t), *factors]) if factors else np.ones((len(self.t), 1))
        scales = np.empty(len(exponents))
        sums = np.empty((len(exponents), mat.shape[1]))
        for lo in range(0, len(exponents), self.chunk):
            k = exponents[lo:lo + self.chunk, None]
            logs = k * self.log_r[None, :] + self.log_base[None, :]
            s = logs.max(axis=1)
            scales[lo:lo + self.chunk] = s
            sums[lo:lo + self.chunk] = np.exp(logs - s[:, None]) @ mat
        return scales, sums

    def log_moments(self, exponents) -> np.ndarray:
        s, sums = self.scaled_moments(exponents)
        return s + np.log(sums[:, 0])


# ---------------------------------------------------------------------------
# condition checkers
# ---------------------------------------------------------------------------

@dataclass
class ConditionReport:
    condition_name: str
    scale: dict
    witness_values: dict
    verdict: str  # consistent | violated | inconclusive
    note: str = ""

    def to_dict(self) -> dict:
        return {"condition": self.condition_name, "scale": self.scale,
                "witness_values": self.witness_values, "verdict": self.verdict,
                "note": self.note}


def condition_B_ratios(w: WeightSpec, m: float, n: float) -> tuple[float, float]:
    """The two ratios of condition (B) for the pair ``(m, n)``:
    ``(r_m/r_n)**m v(r_m)/v(r_n)`` and ``(r_n/r_m)**n v(r_n)/v(r_m)``."""
    tm, tn = max_point_t(w, m), max_point_t(w, n)
    lrm, lrn = math.log1p(-tm), math.log1p(-tn)
    lvm, lvn = float(w.log_v_t(tm)), float(w.log_v_t(tn))
    return _exp(m * (lrm - lrn) + lvm - lvn), _exp(n * (lrn - lrm) + lvn - lvm)


def _exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def _grows(seq, rel=0.02) -> bool:
    seq = [x for x in seq if np.isfinite(x)]
    return len(seq) >= 2 and all(b > a + math.log1p(rel) for a, b in zip(seq, seq[1:]))


def check_condition_B(w: WeightSpec, b1: float, m_grid=None,
                      c_ladder: Sequence[float] = (1.0, 4.0, 16.0)) -> ConditionReport:
    """Finite-grid evidence for condition (B) at a given ``b1``.

    For every pair ``(m, n)`` in the grid with first ratio at most ``b1`` and
    ``m, n, |m - n| >= c`` the second ratio is recorded.  The scan is
    repeated on four nested sub-grids; if the recorded maxima keep growing
    (by more than 2% per level) the verdict is ``inconclusive``, otherwise
    ``consistent``.  A finite scan cannot refute (B), so ``violated`` is never
    produced.
    """
    if not b1 > 1:
        raise InvalidParams("b1 must exceed 1")
    m = np.asarray(np.logspace(0, 4, 200) if m_grid is None else m_grid, dtype=float)
    m = np.unique(m[m > 0])
    t = np.array([max_point_t(w, x) for x in m])
    lr, lv = np.log1p(-t), w.log_v_t(t)
    first = m[:, None] * (lr[:, None] - lr[None, :]) + lv[:, None] - lv[None, :]
    second = m[None, :] * (lr[None, :] - lr[:, None]) + lv[None, :] - lv[:, None]
    log_span = math.log(m[-1] / m[0]) if len(m) > 1 else 0.0
    tops = [m[0] * math.exp(q * log_span) for q in (0.25, 0.5, 0.75, 1.0)]
    attempts = []
    for c in c_ladder:
        ok = ((first <= math.log(b1)) & (m[:, None] >= c) & (m[None, :] >= c)
              & (np.abs(m[:, None] - m[None, :]) >= c))
        maxima = []
        for top in tops:
            sub = ok & (m[:, None] <= top * (1 + 1e-12)) & (m[None, :] <= top * (1 + 1e-12))
            maxima.append(float(second[sub].max()) if sub.any() else 0.0)
        pairs = int(ok.sum())
        attempts.append({"c": c, "pairs": pairs, "b2": _exp(maxima[-1]),
                         "level_maxima": [_exp(x) for x in maxima]})
        if not _grows(maxima):
            return ConditionReport(
                "B", {"b1": b1, "m_min": float(m[0]), "m_max": float(m[-1]), "grid_points": len(m)},
                attempts[-1], "consistent",
                "finite-grid evidence only" + ("; no pair met the premise" if pairs == 0 else ""))
    return ConditionReport(
        "B", {"b1": b1, "m_min": float(m[0]), "m_max": float(m[-1]), "grid_points": len(m)},
        {"attempts": attempts}, "inconclusive", "recorded maxima grow with the grid for every c")


def check_normal(w: WeightSpec, n_max: int = 1000, k_max: int = 8,
                 eps_margin: float = 0.05) -> ConditionReport:
    """Dyadic ratio conditions defining normal weights, scanned for ``n <= n_max``.

    The limsup over ``n`` is replaced by the maximum over the upper half of
    the scanned range.  Ratios are taken in ``s = log(1 - r)`` so that
    ``1 - 2**-n`` is exact for large ``n``.
    """
    if n_max < 8:
        raise InvalidParams("check_normal needs n_max >= 8")
    ln2 = math.log(2.0)
    n = np.arange(1, n_max + 1)
    lv = w.log_v_logt(-ln2 * np.arange(0, n_max + k_max + 2))
    finite = np.isfinite(lv)
    usable = int(np.argmin(finite)) if not finite.all() else len(lv)
    n_eff = min(n_max, usable - k_max - 2)
    if n_eff < 8:
        return ConditionReport("normal", {"n_max": n_max, "k_max": k_max}, {"usable_n": n_eff},
                               "inconclusive", "weight underflows before the scan is meaningful")
    n = n[:n_eff]
    q1 = lv[n] - lv[n + 1]  # log of v(1-2^-n)/v(1-2^-n-1)
    half = len(n) // 2
    head_max, tail = float(q1[:half].max()), q1[half:]
    scale = {"n_max": n_max, "n_scanned": int(n_eff), "k_max": k_max, "eps_margin": eps_margin}
    tail_grows = bool(np.all(np.diff(tail) > 0)) and float(tail[-1]) > head_max + math.log(1 + eps_margin)
    if tail_grows:
        j = int(np.argmax(q1 > q1[0] + math.log(1e3)))
        return ConditionReport("normal", scale,
                               {"failed": "first", "witness_n": int(n[j]), "log_ratio": float(q1[j]),
                                "ratio": _exp(float(q1[j])), "ratio_at_n1": _exp(float(q1[0]))},
                               "violated", "dyadic ratio v(1-2^-n)/v(1-2^-n-1) grows without bound")
    tail_n = n[half:]
    limsups = []
    for k in range(1, k_max + 1):
        limsups.append(_exp(float((lv[tail_n + k] - lv[tail_n]).max())))
    inf_k = min(limsups)
    witness = {"first_sup": _exp(float(q1.max())), "second_inf": inf_k,
               "argmin_k": int(np.argmin(limsups)) + 1, "limsup_by_k": limsups}
    if inf_k < 1 - eps_margin:
        return ConditionReport("normal", scale, witness, "consistent")
    witness["failed"] = "second"
    return ConditionReport("normal", scale, witness, "violated",
                           "inf_k limsup_n v(1-2^-n-k)/v(1-2^-n) is not below 1: decay too slow")


def check_condition_1_1(w: WeightSpec, epsilon: float, n_max: int = 10000,
                        cfg: QuadratureConfig = DEFAULT_CONFIG, stable_rel: float = 0.05) -> ConditionReport:
    """``sup_{n <= n_max} I_{n - n**eps} / I_n`` with log-domain moments.

    Consistent when the running supremum over the last quarter of the range
    grows by less than ``stable_rel``.
    """
    if not 0 < epsilon < 1:
        raise InvalidParams("epsilon must lie in (0, 1)")
    n = np.arange(1, n_max + 1, dtype=float)
    rule = MomentRule(w, cfg)
    log_ratio = rule.log_moments(n - n ** epsilon) - rule.log_moments(n)
    running = np.maximum.accumulate(log_ratio)
    q = max(len(n) * 3 // 4 - 1, 0)
    growth = _exp(float(running[-1] - running[q])) - 1.0
    witness = {"sup": _exp(float(running[-1])), "argmax_n": int(n[int(np.argmax(log_ratio))]),
               "running_sup_growth_last_quarter": growth}
    verdict = "consistent" if growth < stable_rel else "inconclusive"
    return ConditionReport("1.1", {"epsilon": epsilon, "n_max": n_max}, witness, verdict)
