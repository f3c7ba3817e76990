"""Roots-of-unity cycling region and its explicit counterexample function.

Heavy ball with parameters (gamma, beta) admits a function in the smooth
strongly convex class on which it cycles forever over the K-th roots of
unity exactly when a quadratic polynomial in mu*gamma is nonpositive.  This
module provides that membership test, the union over periods K, the linear
operator M whose polygon conv{M x_t} defines the piecewise-quadratic
counterexample

    (L/2)||x||^2 - ((L-mu)/2) * dist(x, polygon)^2,

its exact gradient via closest-point projection onto the polygon, the
safety radius r_max of the locally quadratic neighborhoods around the cycle
points, and the grid scan showing the region's complement misses every
sublevel-set triangle of rate 1 - O(kappa).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .quad_rates import BOUNDARY_TOL, FunctionClass, HbParams, rate_grid, NO_CONVERGENCE

# Default cap for the membership search over periods; larger periods only
# matter very close to beta = 1.
DEFAULT_K_MAX = 100


@dataclass(frozen=True)
class RouCycle:
    """The K points (cos(2*pi*t/K), sin(2*pi*t/K)) and their rotation."""

    k: int
    theta: float
    points: np.ndarray    # (k, 2), unit vectors, t-th row at angle t*theta
    rotation: np.ndarray  # (2, 2), maps point t to point t+1 mod k


def rou_cycle(k: int) -> RouCycle:
    if k < 2:
        raise ValueError(f"period must be >= 2, got {k}")
    theta = 2.0 * math.pi / k
    t = np.arange(k)
    points = np.stack([np.cos(t * theta), np.sin(t * theta)], axis=1)
    rotation = np.array([[math.cos(theta), -math.sin(theta)],
                         [math.sin(theta), math.cos(theta)]])
    return RouCycle(k, theta, points, rotation)


def _poly_coeffs(beta: float, k: int, c: FunctionClass) -> tuple[float, float]:
    """(a, c0) of the membership quadratic (mu*gamma)^2 - 2a(mu*gamma) + c0."""
    kap = c.kappa
    ct = math.cos(2.0 * math.pi / k)
    a = beta - ct + kap * (1.0 - beta * ct)
    c0 = 2.0 * kap * (1.0 - ct) * (1.0 + beta * beta - 2.0 * beta * ct)
    return a, c0


def polynomial_value(gamma: float, beta: float, k: int, c: FunctionClass) -> float:
    """Value of the period-K membership quadratic at (gamma, beta)."""
    a, c0 = _poly_coeffs(beta, k, c)
    mg = c.mu * gamma
    return mg * mg - 2.0 * a * mg + c0


def beta_minus(k: int, c: FunctionClass) -> float:
    """Smallest momentum for which the period-K membership quadratic has roots.

    The rational closed form has a removable 0/0 where its denominator
    1 - 2*kappa + kappa^2 cos^2 crosses zero (e.g. kappa = 1/2 with K = 4);
    the equivalent gap expression takes over there.
    """
    kap = c.kappa
    ct = math.cos(2.0 * math.pi / k)
    num = (kap * ct * ct + (1.0 - kap) ** 2 * ct - kap
           + (1.0 - kap) * (1.0 - ct) * math.sqrt(2.0 * kap * (1.0 + ct)))
    den = 1.0 - 2.0 * kap + kap * kap * ct * ct
    if abs(den) < 1e-9:
        return beta_minus_alternative(k, c)
    return num / den


def beta_minus_alternative(k: int, c: FunctionClass) -> float:
    """Equivalent expression of ``beta_minus`` exposing the sqrt(kappa) gap.

    beta_minus(K) - cos(2*pi/K) factors as sqrt(kappa)(1 - cos) times a
    bounded ratio; useful as an independent cross-check of the closed form.
    """
    kap = c.kappa
    ct = math.cos(2.0 * math.pi / k)
    gap = (math.sqrt(kap) * (1.0 - ct)
           * ((1.0 + ct) * math.sqrt(kap) + math.sqrt(2.0 * (1.0 + ct)))
           / (1.0 + kap * ct + math.sqrt(2.0 * kap * (1.0 + ct))))
    return ct + gap


@dataclass(frozen=True)
class CycleQuadratic:
    """Coefficients and roots of the period-K membership quadratic.

    The quadratic in mu*gamma is (mu*gamma)^2 - 2*a*(mu*gamma) + c0 with
    half-discriminant b = sqrt(a^2 - c0).  ``b`` and the roots are None when
    the discriminant is negative (region empty at this beta).  Roots are
    reported in gamma units: gamma_minus = (a - b)/mu, gamma_plus = (a + b)/mu.
    """

    a: float
    b: float | None
    gamma_minus: float | None
    gamma_plus: float | None
    beta_minus: float


def membership_polynomial(beta: float, k: int, c: FunctionClass) -> CycleQuadratic:
    """Quadratic whose nonpositivity characterizes period-K cycling at ``beta``."""
    if k < 2:
        raise ValueError(f"period must be >= 2, got {k}")
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    a, c0 = _poly_coeffs(beta, k, c)
    disc = a * a - c0
    bm = beta_minus(k, c)
    if disc < 0.0:
        return CycleQuadratic(a, None, None, None, bm)
    b = math.sqrt(disc)
    return CycleQuadratic(a, b, (a - b) / c.mu, (a + b) / c.mu, bm)


def _in_cv_closure(gamma: float, beta: float, c: FunctionClass) -> bool:
    # Closure of the quadratic convergence region in gamma.  The upper edge
    # gamma = 2(1+beta)/L is included: the cycling construction is valid
    # there (the standard demonstration parameters sit exactly on it).
    return (0.0 <= beta < 1.0 and 0.0 < gamma
            and gamma <= 2.0 * (1.0 + beta) / c.ell + BOUNDARY_TOL)


def rou_member(p: HbParams, c: FunctionClass, k: int) -> bool:
    """Whether heavy ball at ``p`` cycles over the K roots of unity on the class.

    True iff ``p`` lies in (the closure of) the quadratic convergence region
    and the membership quadratic is <= 0.  Equality counts as membership.
    Negative momentum is rejected: the region is characterized for beta >= 0
    only.
    """
    if k < 2:
        raise ValueError(f"period must be >= 2, got {k}")
    if p.beta < 0.0:
        raise ValueError("cycling membership is only defined for beta >= 0")
    if not _in_cv_closure(p.gamma, p.beta, c):
        return False
    return polynomial_value(p.gamma, p.beta, k, c) <= 0.0


def rou_member_any(p: HbParams, c: FunctionClass,
                   k_max: int = DEFAULT_K_MAX) -> int | None:
    """Smallest period K in [3, k_max] whose cycling region contains ``p``."""
    if k_max < 3:
        raise ValueError(f"k_max must be >= 3, got {k_max}")
    if p.beta < 0.0:
        raise ValueError("cycling membership is only defined for beta >= 0")
    if not _in_cv_closure(p.gamma, p.beta, c):
        return None
    for k in range(3, k_max + 1):
        if polynomial_value(p.gamma, p.beta, k, c) <= 0.0:
            return k
    return None


def rou_member_any_lower_only(p: HbParams, c: FunctionClass,
                              k_max: int = DEFAULT_K_MAX) -> int | None:
    """One-sided variant of ``rou_member_any`` (gamma >= gamma_minus suffices).

    Valid when kappa <= ((3 - sqrt(5))/4)^2, where the union of the per-K
    bands collapses to single intervals reaching the region's right edge.
    Results must agree with the exhaustive two-sided test in that regime.
    """
    if k_max < 3:
        raise ValueError(f"k_max must be >= 3, got {k_max}")
    if p.beta < 0.0:
        raise ValueError("cycling membership is only defined for beta >= 0")
    if not _in_cv_closure(p.gamma, p.beta, c):
        return None
    for k in range(3, k_max + 1):
        # beta >= beta_minus(K) excludes the spurious branch where the
        # quadratic has two negative roots (region still empty).
        if p.beta < beta_minus(k, c):
            continue
        q = membership_polynomial(p.beta, k, c)
        if q.gamma_minus is not None and p.gamma >= q.gamma_minus:
            return k
    return None


def member_any_grid(gammas, betas, c: FunctionClass,
                    k_max: int = DEFAULT_K_MAX) -> np.ndarray:
    """Vectorized ``rou_member_any``: smallest member period per cell, 0 if none.

    Requires beta >= 0 everywhere on the grid.
    """
    g, b = np.broadcast_arrays(np.asarray(gammas, dtype=float),
                               np.asarray(betas, dtype=float))
    if np.any(b < 0.0):
        raise ValueError("cycling membership is only defined for beta >= 0")
    out = np.zeros(g.shape, dtype=np.int32)
    admissible = (g > 0) & (b < 1) & (g <= 2.0 * (1.0 + b) / c.ell + BOUNDARY_TOL)
    mg = c.mu * g
    kap = c.kappa
    for k in range(3, k_max + 1):
        undecided = admissible & (out == 0)
        if not undecided.any():
            break
        ct = math.cos(2.0 * math.pi / k)
        a = b - ct + kap * (1.0 - b * ct)
        c0 = 2.0 * kap * (1.0 - ct) * (1.0 + b * b - 2.0 * b * ct)
        val = mg * mg - 2.0 * a * mg + c0
        out[undecided & (val <= 0.0)] = k
    return out


@dataclass(frozen=True)
class CounterExample:
    """Counterexample geometry at a cycling parameter point.

    ``m`` is the linear operator whose images of the cycle points form the
    polygon; ``hull`` holds the K polygon vertices in counter-clockwise
    (cycle) order; ``r_max`` is the Euclidean radius of the guaranteed
    locally quadratic ball around each cycle point (0 on the region's
    boundary, positive inside).
    """

    k: int
    m: np.ndarray
    hull: np.ndarray
    r_max: float
    edges: np.ndarray = field(repr=False, default=None)
    _edge_sq: np.ndarray = field(repr=False, default=None)


def build_counterexample(p: HbParams, c: FunctionClass, k: int) -> CounterExample:
    """Operator M, polygon hull, and safety radius at a member point.

    Raises ValueError when ``p`` is not a period-``k`` member or the class is
    degenerate (mu = ell).  All K images M x_t are asserted to be in convex
    position: M maps the unit circle to an ellipse, so a violation means a
    degenerate operator.
    """
    if c.mu >= c.ell:
        raise ValueError("degenerate class mu = ell admits no counterexample")
    if not rou_member(p, c, k):
        raise ValueError(
            f"({p.gamma}, {p.beta}) is not a period-{k} member: "
            f"membership polynomial = {polynomial_value(p.gamma, p.beta, k, c):.6g} > 0")
    cyc = rou_cycle(k)
    rot = cyc.rotation
    m = ((1.0 + p.beta - c.mu * p.gamma) * np.eye(2) - rot - p.beta * rot.T) \
        / ((c.ell - c.mu) * p.gamma)
    hull = cyc.points @ m.T

    edges = np.roll(hull, -1, axis=0) - hull
    cross = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] \
        - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
    if not np.all(cross > 0.0):
        raise ValueError("degenerate operator: polygon vertices not in convex position")

    x0, x1 = cyc.points[0], cyc.points[1]
    v = m @ (x1 - x0)
    r_max = float(-np.dot((np.eye(2) - m) @ x0, v / np.linalg.norm(v)))

    return CounterExample(k=k, m=m, hull=hull, r_max=r_max,
                          edges=edges, _edge_sq=np.einsum("ij,ij->i", edges, edges))


def polygon_project_batch(ce: CounterExample, x: np.ndarray) -> np.ndarray:
    """Exact closest-point projections onto the polygon, batched.

    Case analysis over the K edges and K vertices (vertices arise from the
    clamped edge parameters); no iterative solver.  ``x`` has shape (n, 2).
    """
    rel = x[:, None, :] - ce.hull[None, :, :]
    cross = ce.edges[None, :, 0] * rel[:, :, 1] - ce.edges[None, :, 1] * rel[:, :, 0]
    inside = np.all(cross >= 0.0, axis=1)
    t = np.einsum("nkj,kj->nk", rel, ce.edges) / ce._edge_sq[None, :]
    np.clip(t, 0.0, 1.0, out=t)
    cand = ce.hull[None, :, :] + t[:, :, None] * ce.edges[None, :, :]
    d2 = np.einsum("nkj,nkj->nk", cand - x[:, None, :], cand - x[:, None, :])
    proj = cand[np.arange(len(x)), np.argmin(d2, axis=1)]
    proj[inside] = x[inside]
    return proj


def polygon_project(ce: CounterExample, x: np.ndarray) -> np.ndarray:
    """Exact closest point of ``x`` on the polygon."""
    return polygon_project_batch(ce, np.asarray(x, dtype=float)[None, :])[0]


def eval_counterexample(ce: CounterExample, c: FunctionClass,
                        x: np.ndarray) -> tuple[float, np.ndarray]:
    """Value and exact gradient of the piecewise-quadratic counterexample.

    value(x) = (L/2)||x||^2 - ((L-mu)/2) dist(x, hull)^2 and
    grad(x)  = L x - (L-mu)(x - proj(x)).  Inside the hull the distance term
    vanishes and the gradient is exactly L x; in the vertex regions the
    Hessian is mu*I.
    """
    x = np.asarray(x, dtype=float)
    proj = polygon_project(ce, x)
    gap = x - proj
    value = 0.5 * c.ell * float(x @ x) - 0.5 * (c.ell - c.mu) * float(gap @ gap)
    grad = c.ell * x - (c.ell - c.mu) * gap
    return value, grad


class CounterexampleFunction:
    """Callable value/gradient pair for the counterexample function."""

    def __init__(self, ce: CounterExample, c: FunctionClass):
        self.ce = ce
        self.fclass = c

    def value(self, x) -> float:
        return eval_counterexample(self.ce, self.fclass, x)[0]

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        proj = polygon_project(self.ce, x)
        return self.fclass.ell * x - (self.fclass.ell - self.fclass.mu) * (x - proj)

    def grad_batch(self, x: np.ndarray) -> np.ndarray:
        proj = polygon_project_batch(self.ce, x)
        return self.fclass.ell * x - (self.fclass.ell - self.fclass.mu) * (x - proj)


def incompatibility_scan(c: FunctionClass, big_c: float,
                         resolution: tuple[int, int] = (300, 300),
                         k_max: int = DEFAULT_K_MAX) -> bool:
    """Grid check that fast sublevel sets are swallowed by the cycling region.

    Scans a (gamma, beta) grid covering the sublevel set of rate
    (1 - C*kappa)/(1 + C*kappa) and reports True iff every grid point of that
    sublevel set belongs to some period's cycling region, i.e. the sublevel
    set does not intersect the region's complement.  Requires C > 50/3.
    """
    if big_c <= 50.0 / 3.0:
        raise ValueError(f"constant must exceed 50/3, got {big_c}")
    ck = big_c * c.kappa
    rho_target = (1.0 - ck) / (1.0 + ck)
    if rho_target <= 0.0:
        return True

    n_gamma, n_beta = resolution
    gammas = np.linspace(4.0 / c.ell / n_gamma, 4.0 / c.ell, n_gamma)
    betas = np.linspace(0.0, 1.0, n_beta, endpoint=False)
    g, b = np.meshgrid(gammas, betas, indexing="ij")
    rho, codes = rate_grid(g, b, c)
    in_sls = (codes != NO_CONVERGENCE) & (rho <= rho_target)
    if not in_sls.any():
        return True
    member = member_any_grid(g, b, c, k_max=k_max) > 0
    return not np.any(in_sls & ~member)
