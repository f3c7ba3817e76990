"""Shared oracles and fixtures.

The brute-force rate oracle evaluates the spectral radius of the 2x2
companion matrix over a lambda grid and is kept independent of the
closed-form implementation it checks.
"""

import numpy as np
import pytest

from hbcycles.quad_rates import FunctionClass, HbParams


def companion_spectral_radius(gamma, beta, lam):
    """Spectral radius of [[1+beta-gamma*lam, -beta], [1, 0]]."""
    half_trace = (1.0 + beta - gamma * lam) / 2.0
    disc = half_trace * half_trace - beta
    if disc >= 0.0:
        root = np.sqrt(disc)
        return max(abs(half_trace + root), abs(half_trace - root))
    return np.sqrt(beta)


def brute_force_rate(gamma, beta, mu, L, n_lambda=101):
    """Worst spectral radius over a lambda grid including both endpoints."""
    lams = np.linspace(mu, L, n_lambda)
    return max(companion_spectral_radius(gamma, beta, lam) for lam in lams)


def brute_force_rate_grid(gammas, betas, mu, L, n_lambda=101):
    """Vectorized brute-force oracle over broadcast (gamma, beta) arrays."""
    g = np.asarray(gammas, dtype=float)[..., None]
    b = np.asarray(betas, dtype=float)[..., None]
    lam = np.linspace(mu, L, n_lambda)
    half_trace = (1.0 + b - g * lam) / 2.0
    disc = half_trace**2 - b
    real = disc >= 0
    root = np.sqrt(np.where(real, disc, 0.0))
    radius = np.where(real,
                      np.maximum(np.abs(half_trace + root), np.abs(half_trace - root)),
                      np.sqrt(np.where(real, 1.0, np.maximum(b, 0.0))))
    return radius.max(axis=-1)


def central_difference_grad(value_fn, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (value_fn(x + e) - value_fn(x - e)) / (2.0 * h)
    return out


@pytest.fixture(scope="session")
def fig4_setup():
    """The standard period-7 demonstration point and its counterexample."""
    from hbcycles.rou_region import build_counterexample

    c = FunctionClass(0.005, 1.0)
    p = HbParams(3.5, 0.75)
    ce = build_counterexample(p, c, 7)
    return p, c, ce


@pytest.fixture(scope="session")
def interior_setup():
    """A strictly interior period-7 member (off the convergence-region edge)."""
    from hbcycles.rou_region import build_counterexample

    c = FunctionClass(0.005, 1.0)
    p = HbParams(3.3, 0.75)
    ce = build_counterexample(p, c, 7)
    return p, c, ce
