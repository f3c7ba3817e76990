"""Static lookup of reference asymptotic rates for standard tunings.

Rates are on ||x_t - x*|| as functions of kappa = mu/L, for the quadratic
class and for general smooth strongly convex functions.  Entries that are
open questions are None; the quadratic-optimal heavy-ball tuning has no
rate on the general class (it cycles).
"""

from __future__ import annotations

import math

from .quad_rates import FunctionClass


def reference_rates(c: FunctionClass) -> dict:
    """Known worst-case asymptotic rates at this class's condition ratio."""
    k = c.kappa
    sk = math.sqrt(k)
    return {
        "gd_step_1_over_L": {
            "quadratics": 1.0 - k,
            "smooth_strongly_convex": 1.0 - k,
        },
        "gd_step_2_over_L_plus_mu": {
            "quadratics": (1.0 - k) / (1.0 + k),
            "smooth_strongly_convex": (1.0 - k) / (1.0 + k),
        },
        "chebyshev": {
            "quadratics": (1.0 - sk) / (1.0 + sk),
            "smooth_strongly_convex": None,
        },
        "hb_quadratic_optimal": {
            "quadratics": (1.0 - sk) / (1.0 + sk),
            "smooth_strongly_convex": "cycles",
        },
        "nag": {
            "quadratics": 1.0 - sk,
            "smooth_strongly_convex": math.sqrt(1.0 - sk),
        },
        "information_theoretic_exact": {
            "quadratics": 1.0 - sk,
            "smooth_strongly_convex": 1.0 - sk,
        },
        "triple_momentum": {
            "quadratics": 1.0 - sk,
            "smooth_strongly_convex": 1.0 - sk,
        },
        "lower_bound": {
            "quadratics": (1.0 - sk) / (1.0 + sk),
            "smooth_strongly_convex": 1.0 - sk,
        },
    }
