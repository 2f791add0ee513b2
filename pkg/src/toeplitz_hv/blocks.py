"""Index sequences ``m_1 < m_2 < ...`` that define the window operators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import BlockOverflow, InvalidB, InvalidParams, NonConvergence
from .weights import WeightSpec, max_point_t

PROVENANCES = ("generic_induction", "exponential_closed_form", "normal_geometric")

BAND = 1.05
_MAX_BISECT = 200
_MAX_DOUBLINGS = 2000
# beyond this the maximizer radius is no longer resolved in double precision
_M_CAP = 1e150


@dataclass(frozen=True)
class BlockSequence:
    """Block indices with labels ``n`` and (when known) the radii ``r_{m_n}``.

    ``b`` is ``None`` for the closed-form builders, which do not use one.
    ``min_ratios`` holds the accepted value of the defining minimum for each
    generic step.
    """

    b: float | None
    labels: tuple[int, ...]
    indices: tuple[float, ...]
    radii: tuple[float, ...] | None
    provenance: str
    min_ratios: tuple[float, ...] = ()

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise InvalidParams(f"unknown provenance {self.provenance!r}")
        if len(self.labels) != len(self.indices):
            raise InvalidParams("labels and indices differ in length")
        if np.any(np.diff(self.indices) <= 0):
            raise InvalidParams("block indices must be strictly increasing")

    def __len__(self) -> int:
        return len(self.indices)

    def m(self, n: int) -> float:
        """``m_n`` by label."""
        return self.indices[self.labels.index(n)]

    def floor(self, n: int) -> int:
        """``[m_n]``, the integer part used by the windows."""
        return math.floor(self.m(n))

    def to_dict(self) -> dict:
        radii = self.radii or (None,) * len(self)
        return {"b": self.b, "provenance": self.provenance,
                "entries": [{"n": n, "m": m, "r": r} for n, m, r in zip(self.labels, self.indices, radii)]}


def _log_min_ratio(w: WeightSpec, m_prev: float, t_prev: float, m: float) -> tuple[float, float]:
    """``log M(m)`` and ``t_m`` for the step from ``m_prev``."""
    t = max_point_t(w, m)
    lr_prev, lr = math.log1p(-t_prev), math.log1p(-t)
    lv_prev, lv = float(w.log_v_t(t_prev)), float(w.log_v_t(t))
    a = m_prev * (lr_prev - lr) + lv_prev - lv
    b = m * (lr - lr_prev) + lv - lv_prev
    return min(a, b), t


def _first_index(w: WeightSpec) -> float:
    """Smallest ``m >= 1`` with ``r_m >= 1/2``."""
    if max_point_t(w, 1.0) <= 0.5:
        return 1.0
    hi = 2.0
    while max_point_t(w, hi) > 0.5:
        hi *= 2.0
        if hi > 1e300:
            raise NonConvergence("the maximizer radius never reaches 1/2")
    m = brentq(lambda x: max_point_t(w, x) - 0.5, hi / 2, hi, rtol=1e-14)
    # land on the admissible side of the root
    while max_point_t(w, m) > 0.5:
        m = math.nextafter(m, math.inf)
    return m


def build_blocks_generic(w: WeightSpec, b: float, count: int) -> BlockSequence:
    """Inductive construction: each step keeps the smaller defining ratio in ``[b, 1.05 b]``."""
    if not b > 2:
        raise InvalidB(f"b must exceed 2, got {b}")
    if count < 1:
        raise InvalidParams("count must be positive")
    lo_target, hi_target = math.log(b), math.log(BAND * b)
    m = _first_index(w)
    t = max_point_t(w, m)
    indices, radii, mins = [m], [1.0 - t], []
    for step in range(1, count):
        lo, hi = m, 2.0 * m
        for _ in range(_MAX_DOUBLINGS):
            if hi > _M_CAP:
                raise NonConvergence(f"{w.spec_string}: no bracket for step {step} below m = {_M_CAP:g}")
            val, _ = _log_min_ratio(w, m, t, hi)
            if val >= lo_target:
                break
            lo, hi = hi, 2.0 * hi
        else:
            raise NonConvergence(f"{w.spec_string}: no bracket for step {step} from m = {m}")
        if val <= hi_target:
            m_new, t_new = hi, max_point_t(w, hi)
        else:
            for _ in range(_MAX_BISECT):
                mid = 0.5 * (lo + hi)
                val, t_mid = _log_min_ratio(w, m, t, mid)
                if lo_target <= val <= hi_target:
                    m_new, t_new = mid, t_mid
                    break
                if val < lo_target:
                    lo = mid
                else:
                    hi = mid
            else:
                raise NonConvergence(f"{w.spec_string}: bisection stalled at step {step} (m = {m})")
        mins.append(math.exp(val))
        m, t = m_new, t_new
        indices.append(m)
        radii.append(1.0 - t)
    return BlockSequence(float(b), tuple(range(1, count + 1)), tuple(indices), tuple(radii),
                         "generic_induction", tuple(mins))


def exponential_block(alpha: float, beta: float, n: int) -> tuple[float, float]:
    """Closed-form ``(m_n, r_{m_n})`` for the exponential weight."""
    c = beta ** 2 * (beta / alpha) ** (1.0 / beta)
    m = c * n ** (2.0 + 2.0 / beta) - beta ** 2 * n ** 2
    r = 0.0 - math.expm1(math.log(alpha / (beta * n * n)) / beta)
    return m, r


def build_blocks_exponential(alpha: float, beta: float, count: int,
                             n_start: int | None = None) -> BlockSequence:
    """Closed-form blocks for ``v(r) = exp(-alpha/(1-r)**beta)``.

    By default the sequence starts at the first ``n`` with ``m_n >= 1`` and
    ``r_{m_n} > 0``; pass ``n_start`` to begin elsewhere.
    """
    if not (alpha > 0 and beta > 0):
        raise InvalidParams("alpha and beta must be positive")
    if count < 2:
        raise InvalidParams("count must be at least 2")
    if n_start is None:
        n_start = 1
        while True:
            m, r = exponential_block(alpha, beta, n_start)
            if m >= 1 and r > 0:
                break
            n_start += 1
    elif n_start < 1:
        raise InvalidParams("n_start must be positive")
    labels = tuple(range(n_start, n_start + count))
    pairs = [exponential_block(alpha, beta, n) for n in labels]
    if not all(math.isfinite(m) for m, _ in pairs):
        raise BlockOverflow("closed-form indices overflow")
    return BlockSequence(None, labels, tuple(m for m, _ in pairs), tuple(r for _, r in pairs),
                         "exponential_closed_form")


def build_blocks_normal(k: float, count: int, weight: WeightSpec | None = None) -> BlockSequence:
    """Geometric blocks ``m_n = 2**(k n)``, ``n = 1..count``; radii if a weight is given."""
    if not k > 0:
        raise InvalidParams("k must be positive")
    if count < 1:
        raise InvalidParams("count must be positive")
    if k * count >= 1024:
        raise BlockOverflow(f"2**({k}*{count}) exceeds the floating-point range")
    labels = tuple(range(1, count + 1))
    indices = tuple(2.0 ** (k * n) for n in labels)
    radii = None if weight is None else tuple(1.0 - max_point_t(weight, m) for m in indices)
    return BlockSequence(None, labels, indices, radii, "normal_geometric")


def ratio_statistics(seq: BlockSequence) -> dict:
    """Growth statistics of a block sequence.

    ``gap_ratio`` is ``sup (m_{n+1}-m_n)/(m_n-m_{n-1})``, ``index_ratio`` is
    ``sup m_{n+1}/m_n`` and ``span_ratio`` is ``sup (m_{n+1}-m_{n-1})/m_{n-1}``
    (infinite when some ``m_{n-1}`` is zero).
    """
    if len(seq) < 3:
        raise InvalidParams("ratio statistics need at least three blocks")
    m = np.asarray(seq.indices, dtype=float)
    gaps = np.diff(m)
    gap_ratios = gaps[1:] / gaps[:-1]
    with np.errstate(divide="ignore"):
        index_ratios = np.where(m[:-1] > 0, m[1:] / np.where(m[:-1] > 0, m[:-1], 1.0), np.inf)
        span = (m[2:] - m[:-2])
        span_ratios = np.where(m[:-2] > 0, span / np.where(m[:-2] > 0, m[:-2], 1.0), np.inf)
    return {"gap_ratio": float(gap_ratios.max()), "index_ratio": float(index_ratios.max()),
            "span_ratio": float(span_ratios.max()), "gap_ratios": gap_ratios.tolist()}


def verify_ratio_bound(seq: BlockSequence) -> float:
    """``max_n (m_{n+1} - m_n) / (m_n - m_{n-1})`` over the sequence."""
    return ratio_statistics(seq)["gap_ratio"]
