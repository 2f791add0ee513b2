"""Trapezoidal frequency windows ``W_n`` and the L1 criterion built on them.

The window attached to block ``n`` keeps the frequencies
``[m_{n-1}] < k <= [m_{n+1}]`` with a weight rising linearly from 0 to 1 on
``([m_{n-1}], [m_n]]`` and falling back to 0 on ``([m_n], [m_{n+1}]]``.
Only non-negative frequencies occur, since the series being windowed is a
power series.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .blocks import BlockSequence, ratio_statistics
from .errors import DegenerateBlock, DivisionDegenerate, InvalidParams
from .multiplier import _symbol_breaks_t, moment_ratios
from .numerics import DEFAULT_CONFIG, CircleGrid, QuadratureConfig, integrate_01_t, l1_norm_block
from .symbols import SymbolSpec
from .weights import WeightSpec, log_moment, log_peak, peak_config

log = logging.getLogger(__name__)

DEFAULT_K_CAP = 200_000


# ---------------------------------------------------------------------------
# window coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WindowCoefficients:
    n: int
    support: np.ndarray
    beta: np.ndarray
    values: np.ndarray

    @property
    def k0(self) -> int:
        return int(self.support[0])


def block_floors(seq: BlockSequence, n: int) -> tuple[int, int, int]:
    """``([m_{n-1}], [m_n], [m_{n+1}])``, checked for collisions."""
    if n - 1 not in seq.labels or n + 1 not in seq.labels:
        raise InvalidParams(f"window {n} needs blocks {n - 1} and {n + 1}; sequence has {seq.labels[0]}..{seq.labels[-1]}")
    a, b, c = seq.floor(n - 1), seq.floor(n), seq.floor(n + 1)
    if a == b or b == c:
        raise DegenerateBlock(f"integer parts collide in window {n}: {a}, {b}, {c}")
    return a, b, c


def trapezoid(a: int, b: int, c: int) -> tuple[np.ndarray, np.ndarray]:
    """Support ``a < k <= c`` and the two-ramp weights."""
    k = np.arange(a + 1, c + 1)
    beta = np.where(k <= b, (k - a) / (b - a), (c - k) / (c - b))
    return k, beta


def window_coeffs(seq: BlockSequence, n: int, values) -> WindowCoefficients:
    """Window ``n`` applied to ``values``.

    ``values`` is either an array indexed by frequency or a callable taking
    an integer array of frequencies.
    """
    a, b, c = block_floors(seq, n)
    k, beta = trapezoid(a, b, c)
    vals = values(k) if callable(values) else np.asarray(values)[k]
    return WindowCoefficients(n, k, beta, beta * vals)


# ---------------------------------------------------------------------------
# per-window norms and bounds
# ---------------------------------------------------------------------------

@dataclass
class WindowNormRecord:
    n: int
    m_prev: float
    m_mid: float
    m_next: float
    l1_norm: float
    bound_3_1: float
    bound_3_2: float
    grid_points: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def gammas_upto(w: WeightSpec, a: SymbolSpec, k_max: int, cfg: QuadratureConfig = DEFAULT_CONFIG) -> np.ndarray:
    """``gamma_k`` (exponent ``2k+1``) for ``k = 0..k_max``."""
    return moment_ratios(w, a, 2.0 * np.arange(k_max + 1) + 1.0, cfg)


def _gammas_for(w, a, k_hi, gammas, cfg):
    if gammas is not None and len(gammas) > k_hi:
        return np.asarray(gammas)
    return gammas_upto(w, a, k_hi, cfg)


def window_l1(w: WeightSpec, a: SymbolSpec, seq: BlockSequence, n: int, gammas=None,
              grid_mult: float = 4, cfg: QuadratureConfig = DEFAULT_CONFIG) -> WindowNormRecord:
    """``int_0^{2pi} |W_n f_a| dphi`` together with both block bounds.

    ``gammas`` may hold precomputed ``gamma_k`` indexed by ``k``.  The modulus
    is unchanged by a frequency shift, so the window is synthesized on
    ``1 .. [m_{n+1}] - [m_{n-1}]`` and the starting grid sized for that span.
    """
    a0, _, c0 = block_floors(seq, n)
    g = _gammas_for(w, a, c0, gammas, cfg)
    win = window_coeffs(seq, n, g)
    grid = CircleGrid.for_degree(c0 - a0, grid_mult)
    l1 = l1_norm_block(win.values, 1, grid)
    return WindowNormRecord(n, seq.m(n - 1), seq.m(n), seq.m(n + 1), l1,
                            bound_3_1(w, a, seq, n, g, cfg), bound_3_2(w, a, seq, n, cfg),
                            grid.num_points)


def bound_3_1(w: WeightSpec, a: SymbolSpec, seq: BlockSequence, n: int, gammas=None,
              cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``log m_n * (|gamma_{[m_{n-1}]}| + sum |gamma_k - gamma_{k-1}|)`` over the window."""
    a0, _, c0 = block_floors(seq, n)
    g = _gammas_for(w, a, c0, gammas, cfg)[a0: c0 + 1]
    return math.log(seq.m(n)) * float(abs(g[0]) + np.sum(np.abs(np.diff(g))))


def _log_abs_moment(w: WeightSpec, a: SymbolSpec, k: float, cfg: QuadratureConfig) -> float:
    """``log int |a| r**k v dr``."""
    t_pk, s = log_peak(w, k)
    cfg = peak_config(w, k, t_pk, cfg)

    def g(t):
        return np.abs(a.eval_t(t)) * np.exp(k * np.log1p(-t) + w.log_v_t(t) - s)

    val = integrate_01_t(g, cfg, breakpoints=[t_pk, *_symbol_breaks_t(a)])
    return s + math.log(val) if val > 0 else -math.inf


def log_bound_3_2(w: WeightSpec, a: SymbolSpec, seq: BlockSequence, n: int,
                  cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``log`` of :func:`bound_3_2`."""
    a0, _, c0 = block_floors(seq, n)
    num = _log_abs_moment(w, a, 2 * a0 + 1, cfg)
    den = log_moment(w, 2 * c0 + 1, cfg)
    return math.log(math.log(seq.m(n))) + num - den


def bound_3_2(w: WeightSpec, a: SymbolSpec, seq: BlockSequence, n: int,
              cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``log m_n * int |a| r**(2[m_{n-1}]+1) v / int r**(2[m_{n+1}]+1) v``."""
    x = log_bound_3_2(w, a, seq, n, cfg)
    return math.exp(x) if x < 709.0 else math.inf


# ---------------------------------------------------------------------------
# sweeps and verdicts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Thresholds:
    stabilize: float = 1.1
    slope: float = -0.1
    decay: float = 0.25


@dataclass
class DiagnosisReport:
    records: list[WindowNormRecord]
    sup_norm: float
    trend_slope: float
    verdict_bounded: str
    verdict_compact: str
    skipped: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"records": [r.to_dict() for r in self.records], "sup_norm": self.sup_norm,
                "trend_slope": self.trend_slope, "verdict_bounded": self.verdict_bounded,
                "verdict_compact": self.verdict_compact, "skipped": list(self.skipped)}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["n", "m_prev", "m_mid", "m_next", "l1_norm", "bound31", "bound32"])
            for r in self.records:
                out.writerow([r.n] + [f"{x:.17g}" for x in
                                      (r.m_prev, r.m_mid, r.m_next, r.l1_norm, r.bound_3_1, r.bound_3_2)])


def default_n_range(seq: BlockSequence, k_cap: int = DEFAULT_K_CAP) -> range:
    """Windows ``labels[1] .. labels[-2]`` whose top frequency stays within ``k_cap``."""
    last = seq.labels[1]
    for n in seq.labels[1:-1]:
        if seq.floor(n + 1) <= k_cap:
            last = n
    return range(seq.labels[1], last + 1)


def trend_slope(ns, norms) -> float:
    """Least-squares slope of ``log norm`` against ``log n`` over the last half."""
    ns, norms = np.asarray(ns, dtype=float), np.asarray(norms, dtype=float)
    h = len(ns) // 2
    x, y = ns[h:], norms[h:]
    if len(x) < 2:
        return math.nan
    if np.any(y <= 0):
        return -math.inf
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def verdicts(norms, slope: float, th: Thresholds = Thresholds()) -> tuple[str, str]:
    """``(bounded, compact)`` verdicts from a norm sweep."""
    norms = np.asarray(norms, dtype=float)
    if len(norms) < 3:
        return "inconclusive", "inconclusive"
    cut = len(norms) - max(len(norms) // 3, 1)
    head, tail = norms[:cut].max(), norms[cut:].max()
    stable = tail <= th.stabilize * head
    if stable:
        bounded = "evidence_for"
    elif slope > -th.slope:
        bounded = "evidence_against"
    else:
        bounded = "inconclusive"
    if slope <= th.slope and norms[-1] <= th.decay * norms[0]:
        compact = "evidence_for"
    elif stable and abs(slope) < -th.slope and norms[-1] >= 0.5 * norms.max():
        compact = "evidence_against"
    else:
        compact = "inconclusive"
    return bounded, compact


def diagnose(w: WeightSpec, a: SymbolSpec, seq: BlockSequence, n_range=None,
             thresholds: Thresholds = Thresholds(), grid_mult: float = 4,
             cfg: QuadratureConfig = DEFAULT_CONFIG) -> DiagnosisReport:
    """Sweep :func:`window_l1` over ``n_range`` and judge boundedness and compactness.

    Bounded: the largest norm over the last third is at most ``stabilize``
    times the largest before it.  Compact: the log-log trend over the last
    half is at most ``slope`` and the last norm is at most ``decay`` times the
    first.  Windows whose integer parts collide are skipped.
    """
    ns = list(default_n_range(seq) if n_range is None else n_range)
    usable, skipped = [], []
    for n in ns:
        try:
            block_floors(seq, n)
            usable.append(n)
        except DegenerateBlock as exc:
            log.info("skipping window %d: %s", n, exc)
            skipped.append(n)
    if not usable:
        raise InvalidParams("no usable windows in the requested range")
    k_max = max(seq.floor(n + 1) for n in usable)
    g = gammas_upto(w, a, k_max, cfg)
    records = [window_l1(w, a, seq, n, g, grid_mult, cfg) for n in usable]
    norms = [r.l1_norm for r in records]
    slope = trend_slope(usable, norms)
    vb, vc = verdicts(norms, slope, thresholds)
    return DiagnosisReport(records, float(max(norms)), slope, vb, vc, skipped)


# ---------------------------------------------------------------------------
# envelope for symbols vanishing near the boundary
# ---------------------------------------------------------------------------

def vanishing_envelope(w: WeightSpec, a: SymbolSpec, seq: BlockSequence, s: float,
                       cfg: QuadratureConfig = DEFAULT_CONFIG) -> tuple[float, float]:
    """``(c2, q)`` with ``l1_norm(n) <= c2 * m_{n-1} * q**m_{n-1}`` for ``a = 0`` on ``[s, 1)``.

    Here ``q = 2s/(1+s)``.  ``c2`` is explicit: each ``|gamma_k|`` is at most
    ``C0 q**(2k+1)`` with ``C0 = int_0^s |a| v / int_{(1+s)/2}^1 v``, and the
    window has at most ``m_{n-1} * (spread + 1/m_1)`` terms, where ``spread``
    is the largest ``(m_{n+1} - m_{n-1}) / m_{n-1}``.
    """
    if not 0 < s < 1:
        raise InvalidParams("s must lie in (0, 1)")
    t_s, t_mid = 1.0 - s, (1.0 - s) / 2.0

    def num(t):
        return np.where(t >= t_s, np.abs(a.eval_t(t)) * np.exp(w.log_v_t(t)), 0.0)

    def den(t):
        return np.where(t <= t_mid, np.exp(w.log_v_t(t)), 0.0)

    c0 = integrate_01_t(num, cfg, [t_s, *_symbol_breaks_t(a)]) / integrate_01_t(den, cfg, [t_mid])
    spread = ratio_statistics(seq)["span_ratio"]
    c2 = 2.0 * math.pi * c0 * (spread + 1.0 / seq.indices[0])
    return c2, 2.0 * s / (1.0 + s)


# ---------------------------------------------------------------------------
# kernel norms and classical inequalities
# ---------------------------------------------------------------------------

def vdp_kernel_l1(seq: BlockSequence, n: int, grid_mult: float = 4) -> float:
    """Normalized circle mean ``(1/2pi) int |sum_k beta_k e^{ik phi}| dphi`` of window ``n``.

    The modulus is unchanged by a frequency shift, so the kernel is
    synthesized on ``1 .. c-a`` and the grid sized for that span.
    """
    a, b, c = block_floors(seq, n)
    _, beta = trapezoid(a, b, c)
    return l1_norm_block(beta, 1, CircleGrid.for_degree(c - a, grid_mult)) / (2.0 * math.pi)


def trapezoid_kernel_l1(a: int, b: int, c: int, density: int = 64, chunk: int = 1 << 20) -> float:
    """``int_0^{2pi} |sum_k beta_k e^{ik phi}| dphi`` from the closed form of the kernel.

    With ``A = 1/(b-a)``, ``C = 1/(c-b)`` and ``D_p(z) = 1 + z + ... + z**(p-1)``,
    the kernel is ``(A z**(a+1) D_{b-a}(z) - C z**(b+1) D_{c-b}(z)) / (1 - z)``.
    It is sampled at the midpoints of ``density * c`` equal arcs, away from
    ``z = 1``.  Independent of the FFT path.
    """
    if not a < b < c:
        raise InvalidParams("need a < b < c")
    m = int(density) * c
    p, q = b - a, c - b
    total = 0.0
    for lo in range(0, m, chunk):
        phi = 2.0 * math.pi * (np.arange(lo, min(lo + chunk, m)) + 0.5) / m
        half = np.sin(phi / 2.0)
        dp = np.exp(0.5j * (p - 1) * phi) * np.sin(p * phi / 2.0) / half
        dq = np.exp(0.5j * (q - 1) * phi) * np.sin(q * phi / 2.0) / half
        z = np.exp(1j * phi)
        # only |P| is needed, so the common factor z**(a+1) drops out
        num = dp / p - np.exp(1j * p * phi) * dq / q
        total += float(np.sum(np.abs(num / (1.0 - z))))
    return 2.0 * math.pi * total / m


def _l1(coeffs: np.ndarray, k_max: int | None = None) -> float:
    k_max = len(coeffs) - 1 if k_max is None else k_max
    return l1_norm_block(coeffs, 0, CircleGrid.for_degree(max(k_max, 1)))


def partial_sum_l1_ratio(coeffs, m: int) -> float:
    """``int |Q_m f| / (log m * int |f|)`` where ``Q_m`` keeps frequencies ``0..m``."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if m < 2:
        raise InvalidParams("m must be at least 2")
    full = _l1(coeffs)
    if full == 0:
        raise DivisionDegenerate("f vanishes identically")
    head = coeffs.copy()
    head[m + 1:] = 0
    return _l1(head, len(coeffs) - 1) / (math.log(m) * full)


def lemma32_ratio(b, alpha, n: int | None = None) -> float:
    """``int |g| / (log n * V(alpha) * int |f|)`` with ``f = sum b_k e^{ik phi}``,
    ``g = sum alpha_k b_k e^{ik phi}`` and ``V = |alpha_0| + sum |alpha_k - alpha_{k-1}|``."""
    b = np.asarray(b, dtype=complex)
    alpha = np.asarray(alpha, dtype=complex)
    if b.shape != alpha.shape:
        raise InvalidParams("b and alpha must have matching lengths")
    n = len(b) - 1 if n is None else n
    if n < 2:
        raise InvalidParams("n must be at least 2")
    var = abs(alpha[0]) + float(np.sum(np.abs(np.diff(alpha))))
    f = _l1(b)
    if f == 0 or var == 0:
        raise DivisionDegenerate("f vanishes or alpha has zero variation")
    return float(_l1(alpha * b) / (math.log(n) * var * f))
