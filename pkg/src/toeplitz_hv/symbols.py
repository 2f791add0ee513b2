"""Radial symbols ``a`` on ``[0, 1)`` and boundary-decay hypothesis checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.special import expit, logit

from .errors import InvalidParams, NotDifferentiable, SpecParseError
from .numerics import golden_section_max
from .weights import read_table

KINDS = ("power_decay", "inv_log", "log_cap", "truncated", "constant", "tabulated", "scaled_sum")
HYPOTHESES = ("1.1a", "1.2", "1.3", "1.3r", "1.3t", "1.4", "1.5")

# boundary scan: t = 1 - r = 10**-m, m = 1..12
SCAN_T = 10.0 ** -np.arange(1, 13)


@dataclass(frozen=True)
class SymbolSpec:
    kind: str
    delta: float | None = None
    c: float | None = None
    base: "SymbolSpec | None" = None
    s: float | None = None
    side: str | None = None
    table: tuple[tuple[float, ...], tuple[float, ...]] | None = None
    terms: tuple[tuple[float, "SymbolSpec"], ...] = ()
    source: str | None = None
    _interp: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParams(f"unknown symbol kind {self.kind!r}")
        if self.kind == "power_decay" and not (self.delta is not None and self.delta > 0):
            raise InvalidParams("power_decay needs delta > 0")
        if self.kind == "constant" and self.c is None:
            raise InvalidParams("constant symbol needs c")
        if self.kind == "truncated":
            if self.base is None or self.side not in ("lo", "hi") or not (0 < (self.s or 0) < 1):
                raise InvalidParams("truncated symbol needs a base, 0 < s < 1 and side lo|hi")
        if self.kind == "tabulated":
            r, a = (np.asarray(x, dtype=float) for x in self.table)
            if len(r) < 2 or len(r) != len(a) or np.any(np.diff(r) <= 0) or r[0] < 0 or r[-1] >= 1:
                raise SpecParseError("symbol table radii must be strictly increasing in [0, 1)")
            if not np.all(np.isfinite(a)):
                raise SpecParseError("symbol table values must be finite")
            object.__setattr__(self, "_interp", PchipInterpolator(r, a, extrapolate=False))

    # constructors ---------------------------------------------------------
    @classmethod
    def power_decay(cls, delta: float) -> "SymbolSpec":
        return cls("power_decay", delta=float(delta))

    @classmethod
    def inv_log(cls) -> "SymbolSpec":
        return cls("inv_log")

    @classmethod
    def log_cap(cls) -> "SymbolSpec":
        return cls("log_cap")

    @classmethod
    def constant(cls, c: float) -> "SymbolSpec":
        return cls("constant", c=float(c))

    @classmethod
    def truncated(cls, base: "SymbolSpec", s: float, side: str = "lo") -> "SymbolSpec":
        """``base * 1_[0,s]`` for ``side='lo'``, ``base * 1_[s,1]`` for ``side='hi'``."""
        return cls("truncated", base=base, s=float(s), side=side)

    @classmethod
    def tabulated(cls, r, a, source: str | None = None) -> "SymbolSpec":
        return cls("tabulated", table=(tuple(map(float, r)), tuple(map(float, a))), source=source)

    @classmethod
    def scaled_sum(cls, terms) -> "SymbolSpec":
        return cls("scaled_sum", terms=tuple((float(c), a) for c, a in terms))

    # evaluation -----------------------------------------------------------
    def eval_t(self, t):
        """``a(1 - t)`` for an array of ``t`` in ``(0, 1]``."""
        t = np.asarray(t, dtype=float)
        k = self.kind
        with np.errstate(divide="ignore"):
            if k == "power_decay":
                return np.power(t, self.delta)
            if k == "inv_log":
                return 1.0 / (1.0 - np.log(t))
            if k == "log_cap":
                return np.where(t >= 0.5, math.log(2.0), -np.log1p(-np.minimum(t, 0.5)))
            if k == "constant":
                return np.full_like(t, self.c)
        if k == "truncated":
            inside = (1.0 - t <= self.s) if self.side == "lo" else (1.0 - t >= self.s)
            return np.where(inside, self.base.eval_t(t), 0.0)
        if k == "tabulated":
            r0, r1 = self.table[0][0], self.table[0][-1]
            return self._interp(np.clip(1.0 - t, r0, r1))
        return sum(c * a.eval_t(t) for c, a in self.terms)

    def __call__(self, r):
        return self.eval_t(1.0 - np.asarray(r, dtype=float))

    def derivative_t(self, t: float) -> float:
        """``a'(r)`` at ``r = 1 - t``."""
        k = self.kind
        r = 1.0 - t
        if k == "power_decay":
            return -self.delta * t ** (self.delta - 1.0)
        if k == "inv_log":
            return -1.0 / (t * (1.0 - math.log(t)) ** 2)
        if k == "log_cap":
            if r == 0.5:
                raise NotDifferentiable("log_cap has a kink at r = 1/2")
            return 0.0 if r < 0.5 else -1.0 / r
        if k == "constant":
            return 0.0
        if k == "truncated":
            if r == self.s:
                raise NotDifferentiable(f"truncated symbol jumps at r = {self.s}")
            inside = r <= self.s if self.side == "lo" else r >= self.s
            return self.base.derivative_t(t) if inside else 0.0
        if k == "scaled_sum":
            return sum(c * a.derivative_t(t) for c, a in self.terms)
        h = min(1e-6, t / 10.0)
        return float(self.eval_t(t - h) - self.eval_t(t + h)) / (2.0 * h)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Radii where the symbol jumps or has a kink."""
        k = self.kind
        if k == "log_cap":
            return (0.5,)
        if k == "truncated":
            return tuple(sorted({self.s, *self.base.breakpoints}))
        if k == "scaled_sum":
            return tuple(sorted({b for _, a in self.terms for b in a.breakpoints}))
        if k == "tabulated":
            return self.table[0]
        return ()

    @property
    def smoothness_threshold(self) -> float:
        return max(self.breakpoints, default=0.0)

    def limit_at_one(self) -> float | None:
        k = self.kind
        if k in ("power_decay", "inv_log", "log_cap"):
            return 0.0
        if k == "constant":
            return self.c
        if k == "truncated":
            return 0.0 if self.side == "lo" else self.base.limit_at_one()
        if k == "tabulated":
            return self.table[1][-1]
        parts = [a.limit_at_one() for _, a in self.terms]
        return None if any(p is None for p in parts) else sum(c * p for (c, _), p in zip(self.terms, parts))

    @property
    def nonneg_nonincreasing(self) -> bool:
        """Declared shape, as required by the multiplier monotonicity check."""
        k = self.kind
        if k in ("power_decay", "inv_log", "log_cap"):
            return True
        if k == "constant":
            return self.c >= 0
        if k == "truncated":
            return self.side == "lo" and self.base.nonneg_nonincreasing
        if k == "tabulated":
            a = np.asarray(self.table[1])
            return bool(np.all(a >= 0) and np.all(np.diff(a) <= 0))
        return all(c >= 0 and a.nonneg_nonincreasing for c, a in self.terms)

    @property
    def spec_string(self) -> str:
        k = self.kind
        if k == "power_decay":
            return f"pow:delta={self.delta:.17g}"
        if k == "inv_log":
            return "invlog"
        if k == "log_cap":
            return "logcap"
        if k == "constant":
            return f"const:c={self.c:.17g}"
        if k == "truncated":
            return f"trunc:{self.base.spec_string},s={self.s:.17g},side={self.side}"
        if k == "tabulated":
            return f"table:{self.source}" if self.source else "table:<inline>"
        return "sum(" + ";".join(f"{c:.17g}*{a.spec_string}" for c, a in self.terms) + ")"


def parse_symbol(spec: str) -> SymbolSpec:
    """Parse ``pow:delta=..``, ``invlog``, ``logcap``, ``const:c=..``,
    ``trunc:<inner>,s=..,side=lo|hi`` or ``table:<path>`` (CSV ``r,a``)."""
    spec = spec.strip()
    head, _, body = spec.partition(":")
    try:
        if head == "pow":
            key, _, val = body.partition("=")
            if key == "delta":
                return SymbolSpec.power_decay(float(val))
        elif head == "invlog" and not body:
            return SymbolSpec.inv_log()
        elif head == "logcap" and not body:
            return SymbolSpec.log_cap()
        elif head == "const":
            key, _, val = body.partition("=")
            if key == "c":
                return SymbolSpec.constant(float(val))
        elif head == "trunc":
            inner, s_part, side_part = body.rsplit(",", 2)
            if s_part.startswith("s=") and side_part.startswith("side="):
                return SymbolSpec.truncated(parse_symbol(inner), float(s_part[2:]), side_part[5:])
        elif head == "table" and body:
            r, a = read_table(body, "a")
            return SymbolSpec.tabulated(r, a, source=body)
    except (ValueError, InvalidParams) as exc:
        if isinstance(exc, SpecParseError):
            raise
        raise SpecParseError(f"bad symbol spec {spec!r}: {exc}") from exc
    raise SpecParseError(f"unrecognized symbol spec {spec!r}")


def eval_symbol(a: SymbolSpec, r: float) -> float:
    return float(a(r))


def derivative(a: SymbolSpec, r: float) -> float:
    return a.derivative_t(1.0 - r)


# ---------------------------------------------------------------------------
# boundary hypotheses
# ---------------------------------------------------------------------------

@dataclass
class HypothesisReport:
    hypothesis: str
    scan_sup: float
    verdict: str  # holds | fails | inconclusive
    r_scan_max: float
    statistics: list[float]
    note: str = ""

    def to_dict(self) -> dict:
        return {"hypothesis": self.hypothesis, "scan_sup": self.scan_sup, "verdict": self.verdict,
                "r_scan_max": self.r_scan_max, "statistics": self.statistics, "note": self.note}


def _bounded_verdict(stat: np.ndarray) -> str:
    last = stat[-4:]
    if not np.all(np.isfinite(last)):
        return "fails"
    d = np.diff(last)
    if np.all(d <= 1e-12 * max(1.0, float(np.max(np.abs(last))))):
        return "holds"
    if np.all(d > 0):
        if d[1] <= 0.9 * d[0] and d[2] <= 0.9 * d[1]:
            return "holds"
        if d[1] >= 0.9 * d[0] and d[2] >= 0.9 * d[1]:
            return "fails"
    return "inconclusive"


def _vanishing_verdict(stat: np.ndarray) -> str:
    last = stat[-4:]
    if not np.all(np.isfinite(last)):
        return "fails"
    if np.all(last == 0):
        return "holds"
    d = np.diff(last)
    if np.all(d < 0):
        q = d[-1] / d[-2]
        limit = last[-1] + (d[-1] * q / (1 - q) if q < 1 else -np.inf)
        if limit <= 0.1 * last[0]:
            return "holds"
        return "inconclusive"
    if np.all(d >= 0) and last[-1] > 0:
        return "fails"
    return "inconclusive"


def _derivs(a: SymbolSpec) -> np.ndarray:
    return np.array([a.derivative_t(t) for t in SCAN_T])


def check_hypothesis(a: SymbolSpec, h: str, w_beta: float | None = None) -> HypothesisReport:
    """Evaluate one boundary hypothesis on the scan ``r = 1 - 10**-m``, ``m = 1..12``.

    Bounded-type statistics hold when the last four values are non-increasing
    or increasing with shrinking increments; vanishing-type statistics hold
    when they decrease toward an extrapolated limit near zero.
    """
    if h not in HYPOTHESES:
        raise InvalidParams(f"unknown hypothesis {h!r}; expected one of {HYPOTHESES}")
    if h in ("1.4", "1.5") and w_beta is None:
        raise InvalidParams(f"hypothesis ({h}) needs the exponential weight's beta")
    t = SCAN_T
    log_t = np.log(t)
    note = ""
    if h == "1.1a":
        d = _derivs(a)
        up, down = np.maximum(d, 0.0), np.maximum(-d, 0.0)
        v_up, v_down = _bounded_verdict(up), _bounded_verdict(down)
        if v_up == "holds" or v_down == "holds":
            verdict = "holds"
            stat, note = (up, "limsup a' bounded above") if v_up == "holds" else (down, "liminf a' bounded below")
        else:
            verdict = "fails" if v_up == v_down == "fails" else "inconclusive"
            stat = up
        return HypothesisReport(h, float(np.max(stat[-4:])), verdict, float(1 - t[-1]), stat.tolist(), note)
    if h in ("1.2", "1.3"):
        stat = np.abs(a.eval_t(t) * log_t)
    elif h in ("1.3r", "1.3t"):
        stat = np.abs(_derivs(a)) * t * log_t ** 2
    else:
        stat = np.abs(a.eval_t(t)) * np.power(t, -0.5 - w_beta / 4.0)
    if h in ("1.2", "1.3r", "1.4"):
        verdict, sup = _bounded_verdict(stat), float(np.max(stat[-4:]))
    else:
        verdict, sup = _vanishing_verdict(stat), float(stat[-1])
    return HypothesisReport(h, sup, verdict, float(1 - t[-1]), stat.tolist(), note)


# ---------------------------------------------------------------------------
# suprema
# ---------------------------------------------------------------------------

_T_CAP = 1e-12


def _sup_on(func, u_lo: float, u_hi: float, points: int = 801) -> float:
    u = np.linspace(u_lo, u_hi, points)
    vals = func(u)
    i = int(np.nanargmax(vals))
    lo, hi = u[max(i - 1, 0)], u[min(i + 1, points - 1)]
    _, best = golden_section_max(lambda x: float(func(np.array([x]))[0]), lo, hi, tol=1e-12)
    return max(best, float(np.nanmax(vals)))


def discrete_sup(a: SymbolSpec, n: float, delta: float = 0.0) -> float:
    """``sup_{delta <= r <= 1} |a(r)| r**n``.

    The value at ``r = 1`` uses ``a``'s limit there when it has one, else
    ``a`` at ``r = 1 - 1e-12``.
    """
    if not 0 <= delta < 1:
        raise InvalidParams("delta must lie in [0, 1)")
    if n < 1.0 / (1.0 - delta):
        raise InvalidParams(f"discrete_sup needs n >= 1/(1 - delta) = {1 / (1 - delta)}")

    def f(u):
        r, t = expit(u), expit(-u)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(a.eval_t(t))) + n * np.log(r)

    u_lo = -40.0 if delta == 0 else float(logit(delta))
    u_hi = float(logit(1 - _T_CAP))
    best = math.exp(_sup_on(f, u_lo, u_hi))
    lim = a.limit_at_one()
    end = abs(lim) if lim is not None else abs(float(a.eval_t(_T_CAP))) * (1 - _T_CAP) ** n
    start = abs(float(a(delta))) * delta ** n
    return max(best, end, start)


def boundary_sup(a: SymbolSpec, delta: float = 0.0, epsilon: float | None = None) -> float:
    """``sup_{delta <= r < 1} |a(r) log(1-r)|``, or ``|a(r)| / (1-r)**epsilon`` if given."""

    def f(u):
        t = expit(-u)
        with np.errstate(divide="ignore"):
            la = np.log(np.abs(a.eval_t(t)))
            if epsilon is None:
                return la + np.log(np.abs(np.log(t)))
            return la - epsilon * np.log(t)

    u_lo = -40.0 if delta == 0 else float(logit(delta))
    return math.exp(_sup_on(f, u_lo, 690.0, points=2001))


def sup_comparison(a: SymbolSpec, delta: float, n_max: float,
                       epsilon: float | None = None, points: int = 60) -> dict:
    """Both sides of the discrete/continuous supremum comparison.

    ``discrete`` is ``sup_n discrete_sup(a, n, delta) * log n`` (or ``n**eps``)
    over log-spaced ``n`` in ``[1/(1-delta), n_max]``; ``continuous`` is
    :func:`boundary_sup`.  Their ratio is what the two constants bracket.
    """
    n0 = max(1.0 / (1.0 - delta), 1.0 + 1e-9 if epsilon is None else 1.0)
    ns = np.geomspace(max(n0, 2.0 if epsilon is None else n0), n_max, points)
    factor = np.log(ns) if epsilon is None else ns ** epsilon
    disc = max(discrete_sup(a, float(n), delta) * float(f) for n, f in zip(ns, factor))
    cont = boundary_sup(a, delta, epsilon)
    return {"discrete": disc, "continuous": cont, "ratio": cont / disc if disc > 0 else math.inf,
            "n_max": float(n_max)}


def tail_variation(a: SymbolSpec, r: float, t_floor: float = 1e-300) -> float:
    """``int_r^1 |a'(s)| ds`` with the integral cut at ``1 - s = t_floor``."""
    t0 = 1.0 - r

    def g(x):
        t = math.exp(x)
        return abs(a.derivative_t(t)) * t

    val, _ = quad(g, math.log(t_floor), math.log(t0), limit=400, epsabs=0.0, epsrel=1e-10)
    return val
