"""Parameterized simultaneous root-finding with stabilized trajectory recording.

The iteration family is a two-parameter damped Weierstrass update

    z_i <- z_i - W_i * (1 + beta * W_i) / (1 + alpha * W_i),

where W_i = f(z_i) / prod_{j != i} (z_i - z_j) is the Weierstrass correction
of a monic polynomial f.  At (alpha, beta) = (0, 0) this is exactly the
Durand-Kerner step.  The map is derivative-free, updates all root
approximations in parallel, and exposes a rich stability landscape over
(alpha, beta).  Any alternative map with the same signature can be plugged
into `run_trajectory` via the `step_fn` argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .seeds import grid_seed, rng_from, run_seed

INIT_STRATEGIES = ("near_root", "moderate", "random_box")


@dataclass(frozen=True)
class PolynomialProblem:
    """Monic polynomial with known roots (ground truth used for validation)."""

    degree: int
    roots: np.ndarray
    coefficients: np.ndarray

    @classmethod
    def from_roots(cls, roots: Sequence[complex]) -> "PolynomialProblem":
        roots = np.asarray(roots, dtype=np.complex128)
        if roots.size < 1:
            raise ConfigurationError("need at least one root")
        coeffs = np.array([1.0 + 0.0j])
        for r in roots:
            coeffs = np.convolve(coeffs, np.array([1.0, -r]))
        problem = cls(degree=roots.size, roots=roots, coefficients=coeffs)
        scale = max(1.0, float(np.abs(coeffs).max()))
        residual = np.abs(problem.evaluate(roots)).max()
        if residual >= 1e-10 * scale:
            raise ConfigurationError(
                f"root/coefficient mismatch: residual {residual:.3e}"
            )
        return problem

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        """Horner evaluation at a vector of points."""
        z = np.asarray(z, dtype=np.complex128)
        out = np.full_like(z, self.coefficients[0])
        for c in self.coefficients[1:]:
            out = out * z + c
        return out


def default_problem(degree: int = 7) -> PolynomialProblem:
    """Monic polynomial with roots at the n-th roots of unity."""
    k = np.arange(degree)
    return PolynomialProblem.from_roots(np.exp(2j * np.pi * k / degree))


@dataclass(frozen=True)
class IterationParams:
    alpha: float
    beta: float


@dataclass(frozen=True)
class StabilizationConfig:
    tail_floor_log: float = math.log(1e-14)
    divergence_bound: float = 1e8
    step_cap: float = 1e4
    guard_eps: float = 1e-12

    def __post_init__(self):
        if not (self.tail_floor_log < 0):
            raise ConfigurationError("tail_floor_log must be negative")
        if not (self.divergence_bound > self.step_cap > 0):
            raise ConfigurationError("need divergence_bound > step_cap > 0")
        if not (self.guard_eps > 0):
            raise ConfigurationError("guard_eps must be positive")

    @property
    def tail_floor(self) -> float:
        return math.exp(self.tail_floor_log)


@dataclass(frozen=True)
class StepFlags:
    diverged: bool


@dataclass
class Trajectory:
    step_norms: np.ndarray
    diverged: bool
    frozen_from: Optional[int] = None


@dataclass(frozen=True)
class GridPoint:
    i: int
    j: int
    alpha: float
    beta: float
    seed: int

    @property
    def params(self) -> IterationParams:
        return IterationParams(self.alpha, self.beta)


@dataclass(frozen=True)
class ParamGrid:
    """Uniform (alpha, beta) sweep; linspace inclusive of both endpoints."""

    alpha_range: tuple[float, float] = (-3.0, 5.0)
    beta_range: tuple[float, float] = (-2.0, 4.0)
    n_alpha: int = 60
    n_beta: int = 60
    global_seed: int = 0

    @property
    def alphas(self) -> np.ndarray:
        return np.linspace(self.alpha_range[0], self.alpha_range[1], self.n_alpha)

    @property
    def betas(self) -> np.ndarray:
        return np.linspace(self.beta_range[0], self.beta_range[1], self.n_beta)

    @property
    def n_points(self) -> int:
        return self.n_alpha * self.n_beta

    def point(self, i: int, j: int) -> GridPoint:
        return GridPoint(
            i=i,
            j=j,
            alpha=float(self.alphas[i]),
            beta=float(self.betas[j]),
            seed=grid_seed(self.global_seed, i, j),
        )

    def points(self):
        """All grid points in row-major (i, j) order."""
        for i in range(self.n_alpha):
            for j in range(self.n_beta):
                yield self.point(i, j)


def sample_initialization(
    strategy: str,
    problem: PolynomialProblem,
    rng: np.random.Generator,
    near_root_scale: float = 1e-2,
) -> np.ndarray:
    """Draw one starting vector (one value per root).

    near_root:  each true root plus a complex perturbation with real and
                imaginary parts uniform in [-scale, scale].
    moderate:   n points on the circle of radius 5 at angles 2*pi*(k-1)/n.
    random_box: real and imaginary parts uniform over [-10, 10].
    """
    n = problem.degree
    if strategy == "near_root":
        eps = rng.uniform(-1.0, 1.0, size=(2, n))
        return problem.roots + near_root_scale * (eps[0] + 1j * eps[1])
    if strategy == "moderate":
        k = np.arange(n)
        return 5.0 * np.exp(2j * np.pi * k / n)
    if strategy == "random_box":
        u = rng.uniform(-10.0, 10.0, size=(2, n))
        return u[0] + 1j * u[1]
    raise ConfigurationError(f"unknown initialization strategy: {strategy!r}")


def _separate_coincident(z: np.ndarray, eps: float) -> np.ndarray:
    """Nudge later duplicates apart so Weierstrass denominators stay nonzero."""
    for i in range(z.size):
        for j in range(i + 1, z.size):
            if abs(z[i] - z[j]) < eps:
                z[j] = z[j] + eps
    return z


def weierstrass_step(
    z: Sequence[complex],
    params: IterationParams,
    problem: PolynomialProblem,
    stab: StabilizationConfig,
    active: bool = False,
) -> tuple[np.ndarray, StepFlags]:
    """One damped-Weierstrass update of all iterates.

    `active` marks stabilization as already engaged for this trajectory; once
    engaged, every step is clamped to norm <= step_cap so recorded dynamics
    stay bounded.  Near-singular damping denominators (|1 + alpha*W| below
    guard_eps) fall back to the plain Durand-Kerner step.
    """
    z = np.array(z, dtype=np.complex128)
    n = z.size
    if n != problem.degree:
        raise ConfigurationError("iterate count must match polynomial degree")
    z = _separate_coincident(z, stab.guard_eps)

    fz = problem.evaluate(z)
    denom = np.empty(n, dtype=np.complex128)
    for i in range(n):
        d = z[i] - z
        d[i] = 1.0
        denom[i] = np.prod(d)

    with np.errstate(all="ignore"):
        w = fz / denom
        gate = 1.0 + params.alpha * w
        damp = (1.0 + params.beta * w) / gate
        delta = np.where(np.abs(gate) < stab.guard_eps, w, w * damp)
        z_next = z - delta

    bad = ~np.isfinite(z_next)
    if bad.any():
        z_next[bad] = z[bad]
        active = True
    if np.abs(z_next).max() > stab.divergence_bound:
        active = True
    if active:
        step = z_next - z
        nrm = np.linalg.norm(step)
        if nrm > stab.step_cap:
            z_next = z + step * (stab.step_cap / nrm)
    return z_next, StepFlags(diverged=active)


StepFn = Callable[
    [np.ndarray, IterationParams, PolynomialProblem, StabilizationConfig, bool],
    tuple[np.ndarray, StepFlags],
]


def run_trajectory(
    init: Sequence[complex],
    params: IterationParams,
    problem: PolynomialProblem,
    K: int,
    stab: StabilizationConfig,
    step_fn: StepFn = weierstrass_step,
) -> Trajectory:
    """Iterate K steps recording Euclidean step norms with a log-domain tail floor.

    Once a step norm falls to or below exp(tail_floor_log), the remaining
    entries are frozen at the floor value and iteration stops (the dynamics
    below numerical resolution carry no information).
    """
    if K < 1:
        raise ConfigurationError("K must be >= 1")
    floor = stab.tail_floor
    z = np.asarray(init, dtype=np.complex128)
    step_norms = np.empty(K, dtype=np.float64)
    diverged = False
    frozen_from: Optional[int] = None
    for k in range(K):
        z_next, flags = step_fn(z, params, problem, stab, diverged)
        diverged = flags.diverged
        s = float(np.linalg.norm(z_next - z))
        if not math.isfinite(s):
            s = stab.step_cap
            diverged = True
        if s <= floor:
            frozen_from = k
            step_norms[k:] = floor
            break
        step_norms[k] = s
        z = z_next
    return Trajectory(step_norms=step_norms, diverged=diverged, frozen_from=frozen_from)


def run_ensemble(
    point: GridPoint,
    problem: PolynomialProblem,
    n_runs: int,
    K: int,
    stab: StabilizationConfig,
    init_strategy: str = "random_box",
    step_fn: StepFn = weierstrass_step,
) -> list[Trajectory]:
    """Seeded ensemble for one grid point; run r is a pure function of (point.seed, r)."""
    if n_runs < 1:
        raise ConfigurationError("n_runs must be >= 1")
    params = point.params
    out = []
    for r in range(n_runs):
        rng = rng_from(run_seed(point.seed, r))
        init = sample_initialization(init_strategy, problem, rng)
        out.append(run_trajectory(init, params, problem, K, stab, step_fn=step_fn))
    return out
