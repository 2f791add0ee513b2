"""Quadrature on [0, 1) and circle L1 norms.

Every integral in the package is taken over ``r`` in ``[0, 1)`` where the
integrands (moments of radial weights) concentrate their mass near ``r = 1``.
Internally all routines work in the complementary variable ``t = 1 - r``;
this keeps full relative precision for radii such as ``1 - 1e-14`` which are
not representable as ``r``.

Two quadrature routes are provided:

* :func:`integrate_01` / :func:`integrate_01_t`, an adaptive composite
  Gauss-Legendre rule on a geometrically graded mesh accumulating at
  ``t = 0``, with a tail stopping criterion.
* :func:`graded_rule`, a fixed node set on the same kind of mesh, used to
  evaluate thousands of moments at once in the log domain.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np
from scipy import fft as sp_fft

from .errors import GridTooLarge, InvalidDomain, InvalidParams, NonConvergence, UndersampledGrid

GAUSS_ORDER = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GAUSS_ORDER)
_MAX_DEPTH = 48

OVERSAMPLING_FACTOR = 4
OVERSAMPLING_SLACK = 64
# 2**26 complex samples take 1 GiB
MAX_GRID_POINTS = 1 << 26
L1_REL_TOL = 1e-8
L1_MAX_DOUBLINGS = 8
# a zero of p on the circle caps the rate at O(h**2); warn only beyond this
L1_WARN_TOL = 1e-6

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    max_subdivisions: int = 4000
    grading_ratio: float = 0.5
    min_panel_width: float = 1e-15

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise InvalidParams(f"rel_tol must be positive, got {self.rel_tol}")
        if not 0 < self.grading_ratio < 1:
            raise InvalidParams(f"grading_ratio must lie in (0, 1), got {self.grading_ratio}")
        if self.max_subdivisions < 1:
            raise InvalidParams("max_subdivisions must be >= 1")
        if not 0 < self.min_panel_width < 1:
            raise InvalidParams("min_panel_width must lie in (0, 1)")


DEFAULT_CONFIG = QuadratureConfig()


@dataclass(frozen=True)
class CircleGrid:
    """Equispaced angles ``2*pi*j/M``, ``j = 0..M-1``."""

    num_points: int

    def __post_init__(self):
        if self.num_points < 1:
            raise InvalidParams("num_points must be positive")

    @classmethod
    def for_degree(cls, k_max: int, mult: float = OVERSAMPLING_FACTOR) -> "CircleGrid":
        """Smallest FFT-friendly grid meeting the oversampling rule for ``k_max``."""
        if mult < OVERSAMPLING_FACTOR:
            raise InvalidParams(f"grid multiplier must be >= {OVERSAMPLING_FACTOR}")
        need = int(math.ceil(mult * k_max)) + OVERSAMPLING_SLACK
        if need > MAX_GRID_POINTS:
            raise GridTooLarge(f"frequency {k_max} needs {need} grid points (limit {MAX_GRID_POINTS})")
        return cls(sp_fft.next_fast_len(need))

    def admits(self, k_max: int) -> bool:
        return self.num_points >= OVERSAMPLING_FACTOR * k_max + OVERSAMPLING_SLACK

    @property
    def angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.num_points) / self.num_points


# ---------------------------------------------------------------------------
# adaptive quadrature
# ---------------------------------------------------------------------------

def _gauss_panel(g, lo, hi):
    half = 0.5 * (hi - lo)
    x = (0.5 * (hi + lo)) + half * _GL_X
    y = np.asarray(g(x), dtype=float)
    if not np.all(np.isfinite(y)):
        bad = x[~np.all(np.isfinite(np.atleast_2d(y)), axis=0)] if y.ndim > 1 else x[~np.isfinite(y)]
        raise InvalidDomain(f"integrand is not finite at t = {bad[0]!r} (r = {1 - bad[0]!r})")
    return half * (y @ _GL_W)


def _norm(v) -> float:
    return float(np.max(np.abs(v)))


def _refine(g, lo, hi, coarse, tol, rel, depth, budget):
    """Bisect until the split changes the panel by at most ``tol`` or by
    ``rel`` of its own size; the second test stops refinement at the noise
    floor of the integrand."""
    mid = 0.5 * (lo + hi)
    left = _gauss_panel(g, lo, mid)
    right = _gauss_panel(g, mid, hi)
    fine = left + right
    budget[0] -= 1
    if budget[0] < 0:
        raise NonConvergence("max_subdivisions exhausted during panel refinement")
    diff = _norm(fine - coarse)
    if diff <= tol or diff <= rel * _norm(fine) or depth >= _MAX_DEPTH or mid in (lo, hi):
        return fine
    return (_refine(g, lo, mid, left, 0.5 * tol, rel, depth + 1, budget)
            + _refine(g, mid, hi, right, 0.5 * tol, rel, depth + 1, budget))


def _geometric_levels(ratio: float, floor: float) -> Iterable[float]:
    t = 1.0
    while t > floor:
        t *= ratio
        yield max(t, 0.0)


def integrate_01_t(
    g: Callable[[np.ndarray], np.ndarray],
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    breakpoints: Iterable[float] = (),
):
    """Integrate ``g(t)`` over ``t`` in ``(0, 1]``, i.e. ``f(1 - t)`` over ``r``.

    ``g`` receives a 1-d array of ``t`` values and returns either an array of
    the same length or an array of shape ``(p, len(t))`` for a vector-valued
    integrand (all components share the mesh).  ``breakpoints`` are ``t``
    values that must be panel boundaries: jumps of the integrand and analytic
    peak locations.

    The mesh is ``1, rho, rho**2, ...`` merged with the breakpoints.  Panels
    are visited from ``t = 1`` toward ``t = 0``; the sweep stops once every
    breakpoint has been passed and a geometric extrapolation of the per-level
    contributions bounds the remaining tail below ``rel_tol`` of the total.
    Each panel is then refined by bisection against the same tolerance.
    """
    extras = sorted({float(b) for b in breakpoints if 0.0 < b < 1.0}, reverse=True)
    rho = cfg.grading_ratio
    panels: list[tuple[float, float, object]] = []
    level_sums: list[float] = []
    total = 0.0
    hi = 1.0
    levels = 0
    for geo in _geometric_levels(rho, cfg.min_panel_width):
        level = 0.0
        while extras and extras[0] > geo:
            b = extras.pop(0)
            if b < hi:
                val = _gauss_panel(g, b, hi)
                panels.append((b, hi, val))
                level = level + val
                hi = b
        val = _gauss_panel(g, geo, hi)
        panels.append((geo, hi, val))
        level = level + val
        total = total + level
        hi = geo
        level_sums.append(_norm(level))
        levels += 1
        if levels > cfg.max_subdivisions:
            raise NonConvergence(
                f"tail criterion not met after {cfg.max_subdivisions} graded panels")
        if extras or hi <= cfg.min_panel_width:
            continue
        scale = _norm(total)
        if scale == 0.0 or len(level_sums) < 3:
            continue
        a, b, c = level_sums[-3:]
        if a == b == c == 0.0:
            break
        if c < b < a:
            q = c / b
            if c * q / (1.0 - q) <= 0.1 * cfg.rel_tol * scale:
                break
    if hi > 0.0:
        panels.append((0.0, hi, _gauss_panel(g, 0.0, hi)))

    scale = _norm(sum(p[2] for p in panels))
    floor = cfg.rel_tol * scale / max(len(panels), 1)
    budget = [cfg.max_subdivisions]
    result = 0.0
    # smallest contributions first
    for lo, hi, val in reversed(panels):
        tol = max(cfg.rel_tol * _norm(val), floor)
        result = result + _refine(g, lo, hi, val, tol, cfg.rel_tol, 0, budget)
    if np.ndim(result) == 0:
        return float(result)
    return np.asarray(result)


def integrate_01(
    f: Callable[[np.ndarray], np.ndarray],
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    breakpoints: Iterable[float] = (),
):
    """Integrate ``f(r)`` over ``[0, 1)``; ``breakpoints`` are given as radii."""
    return integrate_01_t(lambda t: f(1.0 - t), cfg, [1.0 - b for b in breakpoints])


def graded_rule(
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    breakpoints: Iterable[float] = (),
    subpanels: int = 4,
) -> tuple[np.ndarray, np.ndarray]:
    """Fixed composite rule on ``t`` in ``[0, 1]`` as ``(nodes, weights)``.

    Each geometric level ``[rho**(j+1), rho**j]`` is split into ``subpanels``
    log-equal pieces, down to ``min_panel_width``; a last panel covers
    ``[0, min_panel_width]``.  ``breakpoints`` are ``t`` values inserted as
    extra panel boundaries.
    """
    n_levels = int(math.ceil(math.log(cfg.min_panel_width) / math.log(cfg.grading_ratio)))
    exps = np.arange(n_levels * subpanels + 1) / subpanels
    edges = cfg.grading_ratio ** exps
    extra = [float(b) for b in breakpoints if 0.0 < b < 1.0]
    edges = np.unique(np.concatenate([edges, extra, [0.0]]))
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    nodes = (0.5 * (hi + lo))[:, None] + half[:, None] * _GL_X[None, :]
    weights = half[:, None] * _GL_W[None, :]
    return nodes.ravel(), weights.ravel()


# ---------------------------------------------------------------------------
# one-dimensional search
# ---------------------------------------------------------------------------

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f: Callable[[float], float], lo: float, hi: float,
                       tol: float = 1e-13, max_iter: int = 400) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * max(1.0, abs(a), abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    else:
        raise NonConvergence(f"golden-section search did not converge on [{lo}, {hi}]")
    candidates = [(fc, c), (fd, d), (f(lo), lo), (f(hi), hi)]
    best = max(candidates, key=lambda p: p[0])
    return best[1], best[0]


def log_weighted_sum(log_terms: np.ndarray, weights: np.ndarray, axis: int = -1):
    """``log(sum(weights * exp(log_terms)))`` stabilized; weights may be signed.

    Returns ``(scale, value)`` with the sum equal to ``value * exp(scale)``,
    which keeps signed sums usable when the magnitudes underflow.
    """
    scale = np.max(log_terms, axis=axis, keepdims=True)
    scale = np.where(np.isfinite(scale), scale, 0.0)
    value = np.sum(weights * np.exp(log_terms - scale), axis=axis)
    return np.squeeze(scale, axis=axis), value


# ---------------------------------------------------------------------------
# circle L1 norms
# ---------------------------------------------------------------------------

def synthesize(coeffs: Mapping[int, complex], num_points: int) -> np.ndarray:
    """Samples of ``sum_k c_k exp(i k phi)`` at ``phi_j = 2 pi j / M`` via one FFT."""
    buf = np.zeros(num_points, dtype=complex)
    for k, c in coeffs.items():
        buf[int(k) % num_points] += c
    return sp_fft.ifft(buf) * num_points


def synthesize_block(values: np.ndarray, k0: int, num_points: int) -> np.ndarray:
    """Samples of ``sum_j values[j] exp(i (k0 + j) phi)`` on the ``M``-point grid."""
    buf = np.zeros(num_points, dtype=complex)
    idx = (k0 + np.arange(len(values))) % num_points
    np.add.at(buf, idx, values)
    return sp_fft.ifft(buf) * num_points


def _highest_frequency(coeffs: Mapping[int, complex]) -> int:
    live = [abs(int(k)) for k, c in coeffs.items() if c != 0]
    return max(live, default=0)


def _riemann_l1(samples: np.ndarray) -> float:
    return float(2 * np.pi * np.mean(np.abs(samples)))


def _refined_l1(sample, num_points: int, refine: bool) -> float:
    """Riemann sums on ``M, 2M, 4M, ...`` until two successive ones agree.

    Near-zeros of ``p`` close to the circle put kinks into ``|p|`` that a
    fixed oversampling factor does not resolve, so the starting grid is
    doubled until the relative change drops below ``L1_REL_TOL``.
    """
    value = _riemann_l1(sample(num_points))
    if not refine:
        return value
    m, change = num_points, 0.0
    for _ in range(L1_MAX_DOUBLINGS):
        if 2 * m > MAX_GRID_POINTS:
            break
        m *= 2
        finer = _riemann_l1(sample(m))
        change = abs(finer - value) / abs(finer) if finer else 0.0
        value = finer
        if change <= L1_REL_TOL:
            return value
    level = logging.WARNING if change > L1_WARN_TOL else logging.DEBUG
    log.log(level, "circle L1 norm: last doubling to %d points changed it by %.1e", m, change)
    return value


def l1_circle_norm(coeffs: Mapping[int, complex], grid: CircleGrid | None = None,
                   refine: bool = True) -> float:
    """``int_0^{2pi} |p(phi)| dphi`` for ``p = sum_k c_k e^{ik phi}``.

    The Riemann sum ``(2 pi / M) sum_j |p(phi_j)|`` starts on ``grid`` and is
    refined by grid doubling; ``refine=False`` returns the single sum on
    ``grid``.
    """
    k_max = _highest_frequency(coeffs)
    if grid is None:
        grid = CircleGrid.for_degree(k_max)
    if not grid.admits(k_max):
        raise UndersampledGrid(
            f"{grid.num_points} points cannot resolve frequency {k_max}; need at least "
            f"{OVERSAMPLING_FACTOR * k_max + OVERSAMPLING_SLACK}")
    return _refined_l1(lambda m: synthesize(coeffs, m), grid.num_points, refine)


def l1_norm_block(values: np.ndarray, k0: int, grid: CircleGrid | None = None,
                  refine: bool = True) -> float:
    """Array form of :func:`l1_circle_norm` for coefficients on ``k0, k0+1, ...``."""
    values = np.asarray(values, dtype=complex)
    k_max = max(abs(k0), abs(k0 + len(values) - 1)) if len(values) else 0
    if grid is None:
        grid = CircleGrid.for_degree(k_max)
    if not grid.admits(k_max):
        raise UndersampledGrid(
            f"{grid.num_points} points cannot resolve frequency {k_max}")
    return _refined_l1(lambda m: synthesize_block(values, k0, m), grid.num_points, refine)
