"""Infinitely smooth counterexamples via mollifier convolution and dilation.

Convolving the piecewise-quadratic counterexample with a compactly
supported bump density keeps it in the smooth strongly convex class, makes
it C-infinity with a finite Hessian-Lipschitz constant, and (because the
gradient is linear on the support balls around the cycle points) leaves the
gradients on the cycle untouched, so the cycle survives.  Dilating by
lambda scales the cycle by lambda and divides every derivative of order
r >= 3 by lambda^{r-2}, defeating any prescribed Hessian-Lipschitz bound.

Quadrature is a fixed polar tensor grid (Gauss-Legendre radial, uniform
angular), chosen over adaptive schemes for determinism; the integrand is
smooth with compact support, so the fixed grid converges fast.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .hb_engine import run
from .quad_rates import FunctionClass, HbParams
from .rou_region import (
    CounterExample,
    CounterexampleFunction,
    rou_cycle,
    rou_member,
)


class QuadraturePrecisionWarning(UserWarning):
    """Raised as a warning when the quadrature mass defect exceeds tolerance."""


def _unit_bump_radial_mass() -> float:
    """integral over [0,1] of exp(-1/(1-r^2)) r dr, to near machine accuracy."""
    x, w = leggauss(256)
    r = 0.5 * (x + 1.0)
    return float(np.sum(0.5 * w * np.exp(-1.0 / (1.0 - r * r)) * r))


_UNIT_RADIAL_MASS = _unit_bump_radial_mass()
# Planar normalizer of the unit bump exp(-1/(1-|x|^2)) on the unit disc.
UNIT_BUMP_MASS = 2.0 * math.pi * _UNIT_RADIAL_MASS


@dataclass(frozen=True)
class Mollifier:
    """Smooth bump density with support in the epsilon-ball, unit mass, zero mean."""

    epsilon: float
    normalization: float  # planar integral of the un-normalized unit bump

    def density(self, y: np.ndarray) -> np.ndarray:
        """Density values at rows of ``y`` (zero outside the support)."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        s2 = np.einsum("ij,ij->i", y, y) / (self.epsilon * self.epsilon)
        out = np.zeros(len(y))
        inside = s2 < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - s2[inside]))
        out /= self.normalization * self.epsilon * self.epsilon
        return out


def make_mollifier(epsilon: float) -> Mollifier:
    if epsilon <= 0.0:
        raise ValueError(f"support radius must be positive, got {epsilon}")
    return Mollifier(epsilon, UNIT_BUMP_MASS)


@dataclass(frozen=True)
class SmoothedCounterExample:
    """Mollified counterexample with a fixed polar quadrature.

    Nodes and weights are precomputed at construction; ``mass_defect``
    records |quadrature(density) - 1| and is the error proxy attached to
    gradient evaluations.
    """

    base: CounterExample
    fclass: FunctionClass
    moll: Mollifier
    n_radial: int
    n_angular: int
    nodes: np.ndarray = field(repr=False, default=None)    # (n_r * n_a, 2)
    weights: np.ndarray = field(repr=False, default=None)  # (n_r * n_a,)
    mass_defect: float = 0.0

    def grad(self, x) -> np.ndarray:
        return smoothed_grad(self, x)

    def value(self, x) -> float:
        return smoothed_value(self, x)


def smooth_counterexample(ce: CounterExample, c: FunctionClass, epsilon: float,
                          n_radial: int = 64, n_angular: int = 64) -> SmoothedCounterExample:
    """Mollify the counterexample at support radius ``epsilon`` <= r_max.

    The radius cap keeps every support ball inside the locally quadratic
    neighborhood of its cycle point, which is what preserves the cycle.
    """
    if epsilon <= 0.0:
        raise ValueError(f"support radius must be positive, got {epsilon}")
    if epsilon > ce.r_max:
        raise ValueError(
            f"support radius {epsilon} exceeds the safety radius {ce.r_max}")
    moll = make_mollifier(epsilon)

    x, w = leggauss(n_radial)
    radii = 0.5 * (x + 1.0) * epsilon
    w_rad = 0.5 * epsilon * w
    angles = 2.0 * math.pi * np.arange(n_angular) / n_angular
    w_ang = 2.0 * math.pi / n_angular

    r_grid, a_grid = np.meshgrid(radii, angles, indexing="ij")
    nodes = np.stack([(r_grid * np.cos(a_grid)).ravel(),
                      (r_grid * np.sin(a_grid)).ravel()], axis=1)
    dens = moll.density(nodes)
    weights = dens * (r_grid * w_rad[:, None]).ravel() * w_ang
    mass_defect = float(abs(weights.sum() - 1.0))
    return SmoothedCounterExample(ce, c, moll, n_radial, n_angular,
                                  nodes, weights, mass_defect)


def smoothed_grad(sce: SmoothedCounterExample, x) -> np.ndarray:
    """Gradient of the mollified counterexample by quadrature.

    Computes integral of grad(x - y) * density(y) over the support ball; on
    the cycle points this reproduces the base gradient exactly up to the
    quadrature mass defect (the base gradient is linear on the support
    ball and the density has zero mean).
    """
    if sce.mass_defect > 1e-6:
        warnings.warn(
            f"quadrature mass defect {sce.mass_defect:.2e} exceeds 1e-6; "
            "increase the node counts", QuadraturePrecisionWarning, stacklevel=2)
    x = np.asarray(x, dtype=float)
    fn = CounterexampleFunction(sce.base, sce.fclass)
    grads = fn.grad_batch(x[None, :] - sce.nodes)
    return sce.weights @ grads


def smoothed_value(sce: SmoothedCounterExample, x) -> float:
    """Value of the mollified counterexample by the same quadrature."""
    x = np.asarray(x, dtype=float)
    pts = x[None, :] - sce.nodes
    fn = CounterexampleFunction(sce.base, sce.fclass)
    values = np.array([fn.value(pt) for pt in pts])
    return float(sce.weights @ values)


def cycle_check_smoothed(sce: SmoothedCounterExample, p: HbParams, k: int,
                         steps: int) -> float:
    """Max deviation from the cycle when iterating on the smoothed gradient.

    The deviation is pure quadrature noise (the smoothed and base gradients
    coincide on the cycle), reported rather than hidden.  Requires an
    interior member point (positive safety radius).
    """
    if not rou_member(p, sce.fclass, k) or sce.base.r_max <= 0.0:
        raise ValueError("smoothed cycle check needs an interior member point")
    cyc = rou_cycle(k)
    trace = run(lambda z: smoothed_grad(sce, z), p,
                cyc.points[0], cyc.points[1], steps)
    idx = np.arange(len(trace.iterates)) % k
    return float(np.max(np.linalg.norm(trace.iterates - cyc.points[idx], axis=1)))


@dataclass(frozen=True)
class DilatedFunction:
    """Rescaled function: value(x) = s^2 f(x/s), grad(x) = s grad_f(x/s).

    Hessians are unchanged; derivatives of order r scale by s^{2-r}, so a
    large scale shrinks the Hessian-Lipschitz constant proportionally.
    """

    inner_value: callable
    inner_grad: callable
    scale: float

    def value(self, x) -> float:
        return self.scale ** 2 * self.inner_value(np.asarray(x, float) / self.scale)

    def grad(self, x) -> np.ndarray:
        return self.scale * self.inner_grad(np.asarray(x, float) / self.scale)


def dilate(f, scale: float) -> DilatedFunction:
    """Dilation by ``scale`` > 0 of any object exposing value(x) and grad(x).

    If heavy ball cycles on f over a point set, it cycles on the dilation
    over the scaled set (from scaled starting points).
    """
    if scale <= 0.0:
        raise ValueError(f"scale must be positive, got {scale}")
    return DilatedFunction(f.value, f.grad, scale)


def third_derivative_estimate(grad_fn, points, h: float = 0.05,
                              directions: int = 8) -> float:
    """Divided-difference bound proxy for the Hessian-Lipschitz constant.

    Central second differences of the gradient along a fan of directions at
    each sample point; the maximum norm over samples divided by h is an
    empirical estimate, never claimed as the exact constant.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    best = 0.0
    for x in points:
        for j in range(directions):
            angle = math.pi * j / directions
            u = np.array([math.cos(angle), math.sin(angle)])
            second = (np.asarray(grad_fn(x + h * u))
                      - 2.0 * np.asarray(grad_fn(x))
                      + np.asarray(grad_fn(x - h * u))) / (h * h)
            best = max(best, float(np.linalg.norm(second)))
    return best
