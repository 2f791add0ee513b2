"""Radial Toeplitz operators on weighted spaces of bounded holomorphic functions.

Weights and symbols are radial functions on ``[0, 1)``.  The operator acts
on Taylor coefficients through the moment ratios ``gamma_n``; its
boundedness and compactness are judged from the L1 norms of trapezoidal
frequency windows of the series ``sum gamma_n e^{in phi}``.
"""

from .blocks import (BlockSequence, build_blocks_exponential, build_blocks_generic, build_blocks_normal,
                     ratio_statistics, verify_ratio_bound)
from .errors import *  # noqa: F401,F403
from .multiplier import (CoefficientFunction, MultiplierSequence, apply_toeplitz, check_monotonicity, gamma,
                         gamma_sequence)
from .numerics import CircleGrid, QuadratureConfig, integrate_01, l1_circle_norm
from .symbols import SymbolSpec, check_hypothesis, derivative, discrete_sup, eval_symbol, parse_symbol
from .weights import (WeightSpec, check_condition_1_1, check_condition_B, check_normal, eval_weight, max_point,
                      moment, parse_weight)
from .window import (bound_3_1, bound_3_2, diagnose, lemma32_ratio, partial_sum_l1_ratio, vdp_kernel_l1,
                     window_coeffs, window_l1)

__version__ = "0.1.0"
