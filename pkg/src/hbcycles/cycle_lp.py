"""General cycle existence for heavy ball as a linear feasibility problem.

A K-periodic trajectory forces the gradient at every visited point (the
recursion can be inverted), and the existence of a smooth strongly convex
function with those gradients reduces to pairwise interpolation
inequalities.  Lifting to the Gram matrix of the centered points makes the
inequalities linear; averaging a solution over cyclic shifts makes the Gram
matrix circulant with zero function values; and decomposing circulant PSD
matrices into rank-2 harmonic blocks turns the whole question into a tiny
linear program in the nonnegative harmonic weights.  Feasible weights
reconstruct an explicit symmetric cycle in dimension K-1.

The lift matrices are derived programmatically from the gradient stencil
(transcribing closed-form entries would invite errors) and validated at
construction time against a direct vector-space evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quad_rates import FunctionClass, HbParams
from .simplex import solve_canonical

FEASIBILITY_TOL = 1e-9


def cycle_gradients(points: np.ndarray, p: HbParams) -> np.ndarray:
    """The unique gradients making heavy ball cycle over ``points``.

    Inverting the recursion with K-periodic indices gives
    g_t = ((1+beta) x_t - x_{t+1} - beta x_{t-1}) / gamma.
    """
    if p.gamma == 0.0:
        raise ZeroDivisionError("gamma must be nonzero to invert the recursion")
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        raise ValueError("need at least two points")
    ahead = np.roll(pts, -1, axis=0)
    behind = np.roll(pts, 1, axis=0)
    return ((1.0 + p.beta) * pts - ahead - p.beta * behind) / p.gamma


def interpolation_residuals(points, grads, values, c: FunctionClass) -> np.ndarray:
    """Pairwise interpolation residuals for the smooth strongly convex class.

    Entry (i, j) is

        f_j + <g_j, x_i - x_j> + ||g_i - g_j||^2 / (2L)
            + mu / (2(1-kappa)) ||x_i - g_i/L - x_j + g_j/L||^2 - f_i,

    nonpositive for all i != j exactly when some function in the class
    interpolates all triplets.  The diagonal is zero.
    """
    if c.mu >= c.ell:
        raise ValueError("interpolation residuals need mu < ell")
    x = np.asarray(points, dtype=float)
    g = np.asarray(grads, dtype=float)
    f = np.asarray(values, dtype=float)
    if not (len(x) == len(g) == len(f)):
        raise ValueError("points, grads and values must have equal length")
    if x.ndim == 1:
        x = x[:, None]
    if g.ndim == 1:
        g = g[:, None]

    dx = x[:, None, :] - x[None, :, :]          # x_i - x_j
    dg = g[:, None, :] - g[None, :, :]          # g_i - g_j
    z = x - g / c.ell
    dz = z[:, None, :] - z[None, :, :]
    lin = np.einsum("jd,ijd->ij", g, dx)
    quad_g = np.einsum("ijd,ijd->ij", dg, dg) / (2.0 * c.ell)
    quad_z = np.einsum("ijd,ijd->ij", dz, dz) * c.mu / (2.0 * (1.0 - c.kappa))
    return f[None, :] - f[:, None] + lin + quad_g + quad_z


@dataclass(frozen=True)
class LiftMatrix:
    """Gram-space form of one interpolation inequality (index pair (i, 0))."""

    i: int
    k: int
    m: np.ndarray  # (k, k) symmetric


def _gradient_stencil(k: int, i: int, p: HbParams) -> np.ndarray:
    """Coefficients of g_i over the cycle points (K-periodic indices)."""
    u = np.zeros(k)
    u[i % k] = (1.0 + p.beta) / p.gamma
    u[(i + 1) % k] -= 1.0 / p.gamma
    u[(i - 1) % k] -= p.beta / p.gamma
    return u


def _lift_matrix(k: int, i: int, j: int, p: HbParams, c: FunctionClass) -> np.ndarray:
    e = np.eye(k)
    ui = _gradient_stencil(k, i, p)
    uj = _gradient_stencil(k, j, p)
    v = e[i] - e[j]
    w = ui - uj
    z = (e[i] - ui / c.ell) - (e[j] - uj / c.ell)
    m = 0.5 * (np.outer(uj, v) + np.outer(v, uj))
    m += np.outer(w, w) / (2.0 * c.ell)
    m += np.outer(z, z) * c.mu / (2.0 * (1.0 - c.kappa))
    return m


def direct_lift_rhs(points: np.ndarray, p: HbParams, c: FunctionClass,
                    i: int, j: int = 0) -> float:
    """Interpolation right-hand side evaluated directly on a point sequence.

    Independent of the Gram lifting; used to validate the lift matrices.
    """
    pts = np.asarray(points, dtype=float)
    grads = cycle_gradients(pts, p)
    res = interpolation_residuals(pts, grads, np.zeros(len(pts)), c)
    return float(res[i, j])


def lift_matrices(p: HbParams, c: FunctionClass, k: int) -> list[LiftMatrix]:
    """Matrices M_{i,0} with <G, M_{i,0}> = interpolation RHS at zero values.

    ``G`` is the Gram matrix of the (centered) cycle points.  A mandatory
    construction-time self-test checks every matrix against the direct
    vector-space evaluation on a fixed random point sequence.
    """
    if p.gamma == 0.0:
        raise ZeroDivisionError("gamma must be nonzero")
    if c.mu >= c.ell:
        raise ValueError("lift matrices need mu < ell")
    if k < 2:
        raise ValueError(f"period must be >= 2, got {k}")
    mats = [LiftMatrix(i, k, _lift_matrix(k, i, 0, p, c)) for i in range(1, k)]

    rng = np.random.default_rng(12345)
    pts = rng.normal(size=(k, 3))
    centered = pts - pts.mean(axis=0)
    gram = centered @ centered.T
    for lm in mats:
        lifted = float(np.sum(gram * lm.m))
        direct = direct_lift_rhs(pts, p, c, lm.i, 0)
        scale = max(1.0, abs(direct))
        if abs(lifted - direct) > 1e-8 * scale:
            raise AssertionError(
                f"lift matrix self-test failed at i={lm.i}: {lifted} vs {direct}")
    return mats


def symmetrize_gram(g0: np.ndarray) -> np.ndarray:
    """Average a Gram matrix over simultaneous cyclic shifts of its indices.

    The result is circulant and inherits positive semidefiniteness and the
    lifted feasibility constraints (cyclically shifting a cycle is again a
    cycle, and the constraint set is convex).
    """
    g = np.asarray(g0, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.allclose(g, g.T, atol=1e-10 * max(1.0, np.abs(g).max())):
        raise ValueError("expected a symmetric matrix")
    k = g.shape[0]
    idx = np.arange(k)
    acc = np.zeros_like(g)
    for s in range(k):
        shifted = (idx + s) % k
        acc += g[np.ix_(shifted, shifted)]
    return acc / k


@dataclass(frozen=True)
class HarmonicGram:
    """Rank-<=2 circulant block: entries cos(2*pi*ell*|i-j|/k)."""

    ell: int
    k: int
    h: np.ndarray


def harmonic_gram(k: int, ell: int) -> HarmonicGram:
    """The ell-th harmonic Gram block of size k.

    For 1 <= ell <= floor(k/2); symmetric, circulant, PSD, zero row sums.
    At ell = k/2 (k even) it degenerates to the rank-1 checkerboard
    (-1)^|i-j|.
    """
    if not 1 <= ell <= k // 2:
        raise ValueError(f"need 1 <= ell <= k//2, got ell={ell}, k={k}")
    idx = np.arange(k)
    return HarmonicGram(ell, k, np.cos(2.0 * np.pi * ell * np.abs(idx[:, None] - idx[None, :]) / k))


def decompose_circulant(g: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Nonnegative harmonic weights nu with g = sum_ell nu_ell H_ell.

    ``g`` must be symmetric circulant with zero row sums; the weights come
    from the inverse DFT of the first row.  A weight below -tol means ``g``
    is not PSD-with-zero-row-sums and raises.
    """
    g = np.asarray(g, dtype=float)
    k = g.shape[0]
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError("expected a square matrix")
    first = g[0]
    scale = max(1.0, np.abs(first).max())
    idx = np.arange(k)
    expected = first[(idx[None, :] - idx[:, None]) % k]
    if not np.allclose(g, expected, atol=1e-9 * scale):
        raise ValueError("matrix is not circulant")
    if not np.allclose(g, g.T, atol=1e-9 * scale):
        raise ValueError("matrix is not symmetric")
    spectrum = np.fft.fft(first).real
    if abs(spectrum[0]) > 1e-7 * scale * k:
        raise ValueError("matrix must have zero row sums")

    m = k // 2
    nu = np.empty(m)
    for ell in range(1, m + 1):
        if k % 2 == 0 and ell == m:
            nu[ell - 1] = spectrum[ell] / k
        else:
            nu[ell - 1] = 2.0 * spectrum[ell] / k
    if np.any(nu < -tol * scale):
        raise ValueError(f"not decomposable with nonnegative weights: min nu = {nu.min()}")
    return np.maximum(nu, 0.0)


def reconstruct_symmetric_cycle(nu: np.ndarray, k: int) -> np.ndarray:
    """Explicit (K, K-1) cycle whose Gram matrix is sum_ell nu_ell H_ell.

    Block ell traces the ell-th harmonic circle with radius sqrt(nu_ell);
    for even K the last weight contributes a one-dimensional (+-1)^t block.
    """
    nu = np.asarray(nu, dtype=float)
    m = k // 2
    if nu.shape != (m,):
        raise ValueError(f"expected {m} weights for period {k}")
    t = np.arange(k)
    cols = []
    n_pairs = (k - 1) // 2
    for ell in range(1, n_pairs + 1):
        radius = math.sqrt(max(nu[ell - 1], 0.0))
        angle = 2.0 * np.pi * ell * t / k
        cols.append(radius * np.cos(angle))
        cols.append(radius * np.sin(angle))
    if k % 2 == 0:
        radius = math.sqrt(max(nu[m - 1], 0.0))
        cols.append(radius * (-1.0) ** t)
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class CycleCertificate:
    """Feasible harmonic weights and the symmetric cycle they reconstruct."""

    nu: np.ndarray      # (floor(K/2),) nonnegative, sums to 1
    gram: np.ndarray    # (K, K) = sum_ell nu_ell H_ell
    points: np.ndarray  # (K, K-1) cycle with Gram matrix ``gram``
    margin: float       # minimized constraint margin t* (<= tolerance)


def build_lp_matrix(p: HbParams, c: FunctionClass, k: int) -> np.ndarray:
    """Constraint matrix P with entries <M_{i,0}, H_ell>."""
    mats = lift_matrices(p, c, k)
    m = k // 2
    blocks = [harmonic_gram(k, ell).h for ell in range(1, m + 1)]
    out = np.empty((k - 1, m))
    for row, lm in enumerate(mats):
        for col, h in enumerate(blocks):
            out[row, col] = np.sum(lm.m * h)
    return out


def _solve_cycle_lp(p: HbParams, c: FunctionClass, k: int) -> tuple[float, np.ndarray]:
    """Margin t* and optimal weights of: min t s.t. P nu <= t, sum nu = 1, nu >= 0.

    The constraint matrix is divided by its largest magnitude before the
    solve (a single positive scalar, so the geometry is untouched) and the
    margin is scaled back; entries of P grow like 1/gamma^2 and would
    otherwise wreck the simplex tolerances at small step-sizes.
    """
    if k < 3:
        raise ValueError(f"period must be >= 3, got {k}")
    if c.mu >= c.ell:
        raise ValueError("cycle feasibility needs mu < ell")
    if p.gamma == 0.0:
        raise ZeroDivisionError("gamma must be nonzero")
    pm = build_lp_matrix(p, c, k)
    scale = max(float(np.abs(pm).max()), 1.0)
    pm = pm / scale
    n_rows, m = pm.shape
    # Variables: [nu (m), t+, t-, slack (n_rows)].
    n_var = m + 2 + n_rows
    a_eq = np.zeros((n_rows + 1, n_var))
    b_eq = np.zeros(n_rows + 1)
    a_eq[:n_rows, :m] = pm
    a_eq[:n_rows, m] = -1.0
    a_eq[:n_rows, m + 1] = 1.0
    a_eq[:n_rows, m + 2:] = np.eye(n_rows)
    a_eq[n_rows, :m] = 1.0
    b_eq[n_rows] = 1.0
    cost = np.zeros(n_var)
    cost[m] = 1.0
    cost[m + 1] = -1.0
    res = solve_canonical(cost, a_eq, b_eq)
    if res.status != "optimal":
        raise RuntimeError(
            f"LP solve failed: status={res.status} after {res.iterations} iterations "
            f"(period {k}, gamma={p.gamma}, beta={p.beta})")
    return scale * res.objective, res.x[:m]


def lp_margin(p: HbParams, c: FunctionClass, k: int) -> float:
    """Optimal margin t* of the period-``k`` cycle feasibility LP.

    Nonpositive (up to tolerance) exactly when a period-``k`` cycle exists.
    The sum-to-one normalization replaces the homogeneous nu != 0
    constraint; the problem is scale-invariant so nothing is lost.
    """
    margin, _ = _solve_cycle_lp(p, c, k)
    return margin


def lp_feasible(p: HbParams, c: FunctionClass, k: int,
                eps_feas: float = FEASIBILITY_TOL) -> CycleCertificate | None:
    """Cycle certificate at period ``k``, or None when the LP margin is positive.

    On success the certificate carries the normalized weights, the circulant
    Gram matrix they induce, and the reconstructed symmetric cycle in
    dimension K-1.
    """
    margin, raw = _solve_cycle_lp(p, c, k)
    if margin > eps_feas:
        return None
    nu = np.maximum(raw, 0.0)
    total = nu.sum()
    if total <= 0.0:
        return None
    nu /= total
    m = k // 2
    gram = sum(nu[ell - 1] * harmonic_gram(k, ell).h for ell in range(1, m + 1))
    points = reconstruct_symmetric_cycle(nu, k)
    return CycleCertificate(nu=nu, gram=gram, points=points, margin=margin)
