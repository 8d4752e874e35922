"""Solver-level validation: per-iteration root errors and convergence order.

Simultaneous methods converge to the root set in an arbitrary label order, so
iterates are paired to the true roots by greedy minimal-distance assignment
before taking the maximum error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .seeds import STREAM_VALIDATION, mix64, rng_from
from .solver import (
    IterationParams,
    PolynomialProblem,
    StabilizationConfig,
    sample_initialization,
    weierstrass_step,
)


@dataclass
class ValidationRun:
    strategy: str
    errors: np.ndarray
    iterations_to_tol: Optional[int]
    observed_order: float


def max_root_error(z: Sequence[complex], roots: Sequence[complex]) -> float:
    """Maximum distance after greedily pairing iterates to distinct roots."""
    z = np.asarray(z, dtype=np.complex128)
    roots = np.asarray(roots, dtype=np.complex128)
    if z.size != roots.size:
        raise ValueError("iterates and roots must have equal length")
    n = z.size
    d = np.abs(z[:, None] - roots[None, :])
    remaining = d.copy()
    worst = 0.0
    for _ in range(n):
        flat = int(remaining.argmin())
        i, j = divmod(flat, n)
        worst = max(worst, float(d[i, j]))
        remaining[i, :] = np.inf
        remaining[:, j] = np.inf
    return worst


def empirical_order(errors: Sequence[float], floor: float = 1e-280) -> float:
    """Mean convergence order from successive error ratios.

    p_k = log(E[k+1]/E[k]) / log(E[k]/E[k-1]); triples touching values at or
    below `floor` are skipped as numerically meaningless.
    """
    e = np.asarray(errors, dtype=np.float64)
    if e.size < 3:
        raise ValueError("need at least 3 error values")
    if not (e > 0).all():
        raise ValueError("errors must be strictly positive")
    if not (np.diff(e) < 0).all():
        raise ValueError("errors must be strictly decreasing")
    orders = []
    for k in range(1, e.size - 1):
        triple = e[k - 1 : k + 2]
        if (triple <= floor).any():
            continue
        orders.append(math.log(e[k + 1] / e[k]) / math.log(e[k] / e[k - 1]))
    if not orders:
        raise ValueError("no usable triples above the floor")
    return float(np.mean(orders))


def _decreasing_prefix(errors: np.ndarray, min_error: float) -> np.ndarray:
    kept: list[float] = []
    for e in errors:
        if e <= min_error:
            break
        if kept and e >= kept[-1]:
            break
        kept.append(float(e))
    return np.asarray(kept)


def run_validation_suite(
    problem: PolynomialProblem,
    params: IterationParams,
    strategies: Sequence[str],
    K: int,
    tol: float = 1e-10,
    seed: int = 0,
    stab: StabilizationConfig | None = None,
    near_root_scale: float = 1e-2,
    min_error: float = 1e-13,
) -> list[ValidationRun]:
    """One seeded run per initialization strategy, recording E at every step.

    observed_order is estimated from the strictly decreasing error prefix
    above `min_error` (nan when fewer than three usable values remain).
    """
    if not strategies:
        raise ValueError("strategies must be nonempty")
    stab = stab or StabilizationConfig()
    runs = []
    for s_idx, strategy in enumerate(strategies):
        rng = rng_from(mix64(seed, STREAM_VALIDATION, s_idx))
        z = sample_initialization(strategy, problem, rng, near_root_scale)
        errors = [max_root_error(z, problem.roots)]
        diverged = False
        for _ in range(K):
            z, flags = weierstrass_step(z, params, problem, stab, diverged)
            diverged = flags.diverged
            errors.append(max_root_error(z, problem.roots))
        errors = np.asarray(errors)

        hits = np.nonzero(errors < tol)[0]
        iterations_to_tol = int(hits[0]) if hits.size else None

        prefix = _decreasing_prefix(errors, min_error)
        try:
            order = empirical_order(prefix)
        except ValueError:
            order = math.nan
        runs.append(
            ValidationRun(
                strategy=strategy,
                errors=errors,
                iterations_to_tol=iterations_to_tol,
                observed_order=order,
            )
        )
    return runs
