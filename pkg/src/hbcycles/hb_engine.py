"""Heavy-ball iteration on arbitrary gradient oracles, plus robustness tools.

Simulation of the recursion, K-periodicity detection, empirical rate
estimation, and the perturbation harness: around a cycling counterexample
the residual obeys the linear dynamics of heavy ball on an isotropic
quadratic, so a companion-matrix decomposition P D P^{-1} with ||D|| < 1
yields explicit noise budgets under which perturbed runs provably stay in a
tube around the cycle.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .quad_rates import BOUNDARY_TOL, FunctionClass, HbParams
from .rou_region import CounterExample, CounterexampleFunction, rou_cycle


@dataclass
class SimTrace:
    """Iterates of one run: two initial points plus one row per step."""

    iterates: np.ndarray     # (steps + 2, d), shorter if truncated
    grad_calls: int
    params_used: np.ndarray  # (steps, 2): (gamma_t, beta_t) per update
    truncated: bool = False


def run(oracle, p: HbParams, x0, x1, steps: int) -> SimTrace:
    """Iterate x_{t+1} = x_t - gamma*oracle(x_t) + beta*(x_t - x_{t-1}).

    Deterministic given its inputs.  A non-finite oracle value truncates the
    trace and sets the ``truncated`` flag instead of raising.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    zs = np.empty((steps + 2, x0.shape[0]))
    zs[0], zs[1] = x0, x1
    params = np.tile([p.gamma, p.beta], (steps, 1))
    calls = 0
    for t in range(1, steps + 1):
        g = np.asarray(oracle(zs[t]), dtype=float)
        calls += 1
        if not np.all(np.isfinite(g)):
            return SimTrace(zs[:t + 1].copy(), calls, params[:t - 1], truncated=True)
        zs[t + 1] = zs[t] - p.gamma * g + p.beta * (zs[t] - zs[t - 1])
    return SimTrace(zs, calls, params)


def detect_cycle(trace: SimTrace, k: int, tol: float,
                 burn_in: int | None = None) -> tuple[bool, float]:
    """K-lag periodicity of the trace tail, guarded against converged runs.

    Compares tail iterates with their K-lagged predecessors (burn-in
    defaults to half the trace) and additionally requires the tail's
    bounding-box diagonal to reach ``tol``: a converged sequence is
    K-periodic for every K, so near-constant tails report False.
    Returns (is_cycle, max K-lag deviation).
    """
    zs = trace.iterates
    if len(zs) < 2 * k + 2:
        raise ValueError("trace too short for the requested period")
    if burn_in is None:
        burn_in = len(zs) // 2
    tail = zs[burn_in:]
    if len(tail) <= k:
        tail = zs[-(k + 1):]
    dev = float(np.max(np.linalg.norm(tail[k:] - tail[:-k], axis=1)))
    diameter = float(np.linalg.norm(tail.max(axis=0) - tail.min(axis=0)))
    return dev <= tol and diameter >= tol, dev


def estimate_rate(trace: SimTrace, reference) -> float:
    """Empirical contraction factor toward ``reference``.

    Least-squares slope of log ||(z_t, z_{t-1}) - (ref, ref)|| over the tail
    half of the trace, exponentiated.  The augmented state avoids the
    through-zero oscillation of single-iterate distances in the momentum
    regime.  Distances below 1e-300 stop the fit early (pre-underflow
    prefix only).
    """
    ref = np.atleast_1d(np.asarray(reference, dtype=float))
    zs = trace.iterates
    stacked = np.hstack([zs[1:] - ref, zs[:-1] - ref])
    # Rescale before squaring: the plain sum of squares underflows at half
    # the exponent range, well before the 1e-300 early-stop threshold.
    peak = np.max(np.abs(stacked), axis=1)
    safe = np.where(peak > 0.0, peak, 1.0)
    dist = peak * np.sqrt(np.sum((stacked / safe[:, None]) ** 2, axis=1))
    start = len(dist) // 2
    tail = dist[start:]
    cut = np.flatnonzero(tail < 1e-300)
    if cut.size:
        tail = tail[:cut[0]]
    if tail.size < 2 or np.any(tail <= 0.0):
        raise ValueError("tail distances must be strictly positive to fit a rate")
    t = np.arange(tail.size, dtype=float)
    slope = np.polyfit(t, np.log(tail), 1)[0]
    return float(math.exp(slope))


@dataclass(frozen=True)
class StabilityConstants:
    """Companion-matrix decomposition constants for the residual dynamics.

    ``kappa_p`` is 1/(||P|| * ||P^-1||) in (0, 1]; ``rho_d`` = ||D|| < 1.
    ``region_used`` records which decomposition applied: "Lazy" (real
    eigenvalues), "Robust" (complex pair), or "Boundary" (Jordan block with
    the epsilon trick).
    """

    kappa_p: float
    rho_d: float
    region_used: str
    p_matrix: np.ndarray = field(repr=False, default=None)
    d_matrix: np.ndarray = field(repr=False, default=None)


def _condition_constants(p_mat: np.ndarray) -> float:
    """kappa_P from the closed form tau - sqrt(tau^2 - 1), tau = tr(P^H P)/(2|det P|)."""
    h = p_mat.conj().T @ p_mat
    tau = float(np.trace(h).real) / (2.0 * abs(np.linalg.det(p_mat)))
    if tau <= 1.0:
        return 1.0
    return tau - math.sqrt(tau * tau - 1.0)


def stability_constants(p: HbParams, mu: float,
                        epsilon: float | None = None) -> StabilityConstants:
    """Decompose [[1+beta-mu*gamma, -beta], [1, 0]] as P D P^{-1}, ||D|| < 1.

    Real-diagonalizable, complex-conjugate, and defective (boundary) cases
    are handled separately; in the boundary case gamma = (1-sqrt(beta))^2/mu
    the Jordan block needs an epsilon in (0, (1-beta)/sqrt(beta)), defaulting
    to the midpoint (1-beta)/(2 sqrt(beta)).  Raises when the matrix does not
    contract.
    """
    gamma, beta = p.gamma, p.beta
    half_trace = (1.0 + beta - mu * gamma) / 2.0
    disc = half_trace * half_trace - beta

    if abs(disc) <= BOUNDARY_TOL:
        # Defective double eigenvalue +-sqrt(beta).
        if beta <= 0.0:
            raise ValueError("boundary decomposition needs beta > 0")
        sb = math.sqrt(beta)
        limit = (1.0 - beta) / sb
        if epsilon is None:
            epsilon = limit / 2.0
        if not 0.0 < epsilon < limit:
            raise ValueError(f"epsilon must lie in (0, {limit}), got {epsilon}")
        rho_d = sb * (epsilon / 2.0 + math.sqrt(1.0 + epsilon * epsilon / 4.0))
        if rho_d >= 1.0:
            raise ValueError(f"no contraction: rho_d = {rho_d} >= 1")
        p_mat = np.array([[sb, epsilon * sb / (1.0 + beta)],
                          [1.0, -beta * epsilon / (1.0 + beta)]])
        d_mat = sb * np.array([[1.0, epsilon], [0.0, 1.0]])
        return StabilityConstants(_condition_constants(p_mat), rho_d, "Boundary",
                                  p_mat, d_mat)

    if disc > 0.0:
        root = math.sqrt(disc)
        lam_hi, lam_lo = half_trace + root, half_trace - root
        rho_d = max(abs(lam_hi), abs(lam_lo))
        if rho_d >= 1.0:
            raise ValueError(f"no contraction: spectral radius = {rho_d} >= 1")
        p_mat = np.array([[lam_hi, lam_lo], [1.0, 1.0]])
        d_mat = np.diag([lam_hi, lam_lo])
        return StabilityConstants(_condition_constants(p_mat), rho_d, "Lazy",
                                  p_mat, d_mat)

    root = math.sqrt(-disc)
    lam = complex(half_trace, root)
    rho_d = abs(lam)  # = sqrt(beta)
    if rho_d >= 1.0:
        raise ValueError(f"no contraction: spectral radius = {rho_d} >= 1")
    p_mat = np.array([[lam, lam.conjugate()], [1.0, 1.0]], dtype=complex)
    d_mat = np.diag([lam, lam.conjugate()])
    return StabilityConstants(_condition_constants(p_mat), rho_d, "Robust",
                              p_mat, d_mat)


@dataclass(frozen=True)
class NoiseSpec:
    """Perturbation magnitudes for a run around a cycling counterexample.

    ``init_radius`` is a fraction of kappa_P * r_max applied jointly to the
    two starting points; the jitters and the gradient noise are absolute
    per-step bounds.  ``mode`` selects uniform random draws or the
    adversarial sign choice that maximizes instantaneous residual growth.
    """

    init_radius: float = 0.0
    gamma_jitter: float = 0.0
    beta_jitter: float = 0.0
    grad_noise: float = 0.0
    mode: str = "uniform-random"
    seed: int = 0

    def __post_init__(self):
        if min(self.init_radius, self.gamma_jitter,
               self.beta_jitter, self.grad_noise) < 0:
            raise ValueError("noise bounds must be nonnegative")
        if self.mode not in ("uniform-random", "adversarial-sign"):
            raise ValueError(f"unknown noise mode {self.mode!r}")


def noise_budget(p: HbParams, c: FunctionClass, ce: CounterExample,
                 epsilon: float | None = None) -> dict:
    """Maximal guaranteed-safe noise magnitudes around the cycle.

    The three tube conditions are
      1. sqrt(||d0||^2 + ||d1||^2) <= kappa_P * r_max,
      2. (4/gamma + mu kappa_P r_max)|dgamma| + (2 + 2 kappa_P r_max)|dbeta|
         <= (1 - rho_D) kappa_P r_max / 2,
      3. (4/L) ||dgrad|| <= (1 - rho_D) kappa_P r_max / 2.
    Returns the per-channel budgets (each assumes the shared budget of its
    condition is spent on that channel alone).
    """
    sc = stability_constants(p, c.mu, epsilon)
    slack = 0.5 * (1.0 - sc.rho_d) * sc.kappa_p * ce.r_max
    gamma_coeff = 4.0 / p.gamma + c.mu * sc.kappa_p * ce.r_max
    beta_coeff = 2.0 + 2.0 * sc.kappa_p * ce.r_max
    return {
        "kappa_p": sc.kappa_p,
        "rho_d": sc.rho_d,
        "init_norm": sc.kappa_p * ce.r_max,
        "param_budget": slack,
        "gamma_jitter": slack / gamma_coeff,
        "beta_jitter": slack / beta_coeff,
        "grad_noise": c.ell * slack / 4.0,
    }


@dataclass
class PerturbedRun:
    trace: SimTrace
    stayed_in_tube: bool
    residual_decay_rate: float | None


def _fit_decay(norms: np.ndarray) -> float | None:
    """Asymptotic slope of log(norms): fit the late clean-decay window.

    The early iterations mix both companion modes, and below ~1e-12 the
    residual hits the rounding floor of the attractive cycle, so the fit
    uses the late part of the window above that floor.
    """
    keep = np.flatnonzero(norms > 1e-12)
    if keep.size < 10:
        return None
    window = norms[:keep[-1] + 1]
    window = window[max(2, int(0.4 * window.size)):]
    if window.size < 5 or np.any(window <= 0.0):
        return None
    t = np.arange(window.size, dtype=float)
    slope = np.polyfit(t, np.log(window), 1)[0]
    return float(math.exp(slope))


def perturbed_run(ce: CounterExample, c: FunctionClass, p: HbParams, k: int,
                  noise: NoiseSpec, steps: int,
                  strict: bool = True) -> PerturbedRun:
    """Run heavy ball on the counterexample under bounded perturbations.

    Starts from the cycle's first two points displaced by a seeded random
    joint offset of norm init_radius * kappa_P * r_max, applies per-step
    parameter jitter and gradient noise, and reports whether every iterate
    stayed within r_max of its cycle point.  In strict mode the noise spec
    must satisfy the three guarantee conditions; the violated condition is
    named otherwise.  With parameter and gradient noise both zero the
    residual contraction factor is fitted and returned (it matches the rate
    of heavy ball on the isotropic mu-quadratic).
    """
    if ce.r_max <= 0.0:
        raise ValueError("perturbation analysis needs r_max > 0 (interior member)")
    budget = noise_budget(p, c, ce)
    if strict:
        if noise.init_radius > 1.0 + 1e-12:
            raise ValueError(
                "condition 1 violated: initial offset "
                f"{noise.init_radius} * kappa_P * r_max exceeds kappa_P * r_max")
        gamma_coeff = 4.0 / p.gamma + c.mu * budget["kappa_p"] * ce.r_max
        beta_coeff = 2.0 + 2.0 * budget["kappa_p"] * ce.r_max
        spend = gamma_coeff * noise.gamma_jitter + beta_coeff * noise.beta_jitter
        if spend > budget["param_budget"] * (1.0 + 1e-12):
            raise ValueError(
                f"condition 2 violated: parameter jitter spend {spend} exceeds "
                f"budget {budget['param_budget']}")
        if noise.grad_noise > budget["grad_noise"] * (1.0 + 1e-12):
            raise ValueError(
                f"condition 3 violated: gradient noise {noise.grad_noise} exceeds "
                f"budget {budget['grad_noise']}")

    rng = np.random.default_rng(noise.seed)
    cyc = rou_cycle(k)
    fn = CounterexampleFunction(ce, c)
    offset = rng.normal(size=4)
    offset *= noise.init_radius * budget["init_norm"] / np.linalg.norm(offset)
    z0 = cyc.points[0] + offset[:2]
    z1 = cyc.points[1] + offset[2:]

    zs = np.empty((steps + 2, 2))
    zs[0], zs[1] = z0, z1
    params = np.empty((steps, 2))
    adversarial = noise.mode == "adversarial-sign"
    for t in range(1, steps + 1):
        grad = fn.grad(zs[t])
        momentum = zs[t] - zs[t - 1]
        if adversarial:
            # Signs/directions chosen to grow the unperturbed next residual.
            base_next = zs[t] - p.gamma * grad + p.beta * momentum
            residual = base_next - cyc.points[(t + 1) % k]
            rnorm = np.linalg.norm(residual)
            direction = residual / rnorm if rnorm > 0 else np.array([1.0, 0.0])
            align_g = float(np.dot(grad, direction))
            align_m = float(np.dot(momentum, direction))
            dgamma = -noise.gamma_jitter * (1.0 if align_g >= 0 else -1.0)
            dbeta = noise.beta_jitter * (1.0 if align_m >= 0 else -1.0)
            dgrad = -noise.grad_noise * direction
        else:
            dgamma = rng.uniform(-noise.gamma_jitter, noise.gamma_jitter)
            dbeta = rng.uniform(-noise.beta_jitter, noise.beta_jitter)
            angle = rng.uniform(0.0, 2.0 * np.pi)
            radius = noise.grad_noise * math.sqrt(rng.uniform())
            dgrad = radius * np.array([math.cos(angle), math.sin(angle)])
        gamma_t = p.gamma + dgamma
        beta_t = p.beta + dbeta
        params[t - 1] = (gamma_t, beta_t)
        zs[t + 1] = zs[t] - gamma_t * (grad + dgrad) + beta_t * momentum

    trace = SimTrace(zs, steps, params)
    idx = np.arange(steps + 2) % k
    dev = np.linalg.norm(zs - cyc.points[idx], axis=1)
    stayed = bool(np.max(dev) <= ce.r_max * (1.0 + 1e-12))

    decay = None
    if noise.gamma_jitter == noise.beta_jitter == noise.grad_noise == 0.0:
        joint = np.sqrt(dev[1:] ** 2 + dev[:-1] ** 2)
        decay = _fit_decay(joint)
    return PerturbedRun(trace, stayed, decay)


def write_trace_csv(trace: SimTrace, path, cycle: np.ndarray | None = None) -> None:
    """Trace export: t, coordinates, distance to the cycle, per-step params.

    ``cycle`` (K, d), when given, fills the distance column with
    ||z_t - cycle[t mod K]||; it is empty otherwise.  The two initial rows
    carry no step parameters.
    """
    zs = trace.iterates
    d = zs.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", *(f"x{i}" for i in range(d)),
                         "dist_to_cycle", "gamma_t", "beta_t"])
        for t, z in enumerate(zs):
            if cycle is not None:
                dist = format(float(np.linalg.norm(z - cycle[t % len(cycle)])), ".17g")
            else:
                dist = ""
            if t >= 2 and t - 2 < len(trace.params_used):
                gamma_t = format(trace.params_used[t - 2, 0], ".17g")
                beta_t = format(trace.params_used[t - 2, 1], ".17g")
            else:
                gamma_t = beta_t = ""
            writer.writerow([t, *(format(v, ".17g") for v in z),
                             dist, gamma_t, beta_t])
