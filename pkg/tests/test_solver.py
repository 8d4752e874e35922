import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rootdiag.errors import ConfigurationError
from rootdiag.seeds import grid_seed, mix64, rng_from, run_seed
from rootdiag.solver import (
    GridPoint,
    IterationParams,
    ParamGrid,
    PolynomialProblem,
    StabilizationConfig,
    default_problem,
    run_ensemble,
    run_trajectory,
    sample_initialization,
    weierstrass_step,
)

STAB = StabilizationConfig()
QUADRATIC = PolynomialProblem.from_roots([1.0, -1.0])


def durand_kerner_oracle(z, problem):
    """Plain Durand-Kerner update, written independently of the solver."""
    z = np.asarray(z, dtype=complex)
    out = z.copy()
    for i in range(z.size):
        p = 0.0 + 0.0j
        for c in problem.coefficients:
            p = p * z[i] + c
        denom = 1.0 + 0.0j
        for j in range(z.size):
            if j != i:
                denom *= z[i] - z[j]
        out[i] = z[i] - p / denom
    return out


class TestPolynomialProblem:
    def test_monic_expansion(self):
        p = PolynomialProblem.from_roots([2.0, -3.0])
        # (z-2)(z+3) = z^2 + z - 6
        assert np.allclose(p.coefficients, [1.0, 1.0, -6.0])

    def test_roots_are_near_zeros(self):
        p = default_problem()
        scale = max(1.0, np.abs(p.coefficients).max())
        assert np.abs(p.evaluate(p.roots)).max() < 1e-10 * scale

    def test_degree_matches(self):
        assert default_problem(5).degree == 5


class TestSampleInitialization:
    def test_moderate_circle(self):
        p = default_problem(7)
        z = sample_initialization("moderate", p, rng_from(0))
        assert np.allclose(np.abs(z), 5.0)
        angles = np.angle(z)
        expected = 2 * np.pi * np.arange(7) / 7
        expected = np.angle(np.exp(1j * expected))
        assert np.allclose(angles, expected)

    def test_random_box_bounds(self):
        p = default_problem(7)
        for seed in range(20):
            z = sample_initialization("random_box", p, rng_from(seed))
            assert (np.abs(z.real) <= 10).all() and (np.abs(z.imag) <= 10).all()

    def test_near_root_zero_perturbation(self):
        p = default_problem(7)
        z = sample_initialization("near_root", p, rng_from(3), near_root_scale=0.0)
        assert np.array_equal(z, p.roots)

    def test_near_root_scale(self):
        p = default_problem(7)
        z = sample_initialization("near_root", p, rng_from(3))
        assert (np.abs(z - p.roots) <= 1e-2 * math.sqrt(2) + 1e-15).all()

    def test_unknown_strategy(self):
        with pytest.raises(ConfigurationError):
            sample_initialization("bogus", default_problem(), rng_from(0))


class TestWeierstrassStep:
    def test_hand_example_quadratic(self):
        z_next, flags = weierstrass_step(
            [2.0, -2.0], IterationParams(0.0, 0.0), QUADRATIC, STAB
        )
        assert np.allclose(z_next, [1.25, -1.25])
        assert not flags.diverged

    def test_roots_are_fixed_points(self):
        for alpha, beta in [(0.0, 0.0), (-3.0, 4.0), (5.0, -2.0), (1.7, 0.3)]:
            z_next, _ = weierstrass_step(
                QUADRATIC.roots, IterationParams(alpha, beta), QUADRATIC, STAB
            )
            assert np.array_equal(z_next, QUADRATIC.roots)

    def test_durand_kerner_reduction(self):
        p = default_problem(7)
        rng = rng_from(11)
        for _ in range(50):
            z = rng.uniform(-3, 3, 7) + 1j * rng.uniform(-3, 3, 7)
            ours, _ = weierstrass_step(z, IterationParams(0.0, 0.0), p, STAB)
            oracle = durand_kerner_oracle(z, p)
            assert np.abs(ours - oracle).max() < 1e-12

    def test_coincident_iterates_survive(self):
        z = np.array([1.0 + 0j, 1.0 + 0j, 0.5 + 0j])
        p = PolynomialProblem.from_roots([2.0, -1.0, 0.25])
        z_next, _ = weierstrass_step(z, IterationParams(0.1, 0.2), p, STAB)
        assert np.isfinite(z_next).all()

    def test_guard_fallback_is_plain_step(self):
        # alpha tuned so 1 + alpha*W vanishes below guard_eps for iterate 0
        w0 = 0.75
        alpha = -1.0 / w0
        z_next, _ = weierstrass_step(
            [2.0, -2.0], IterationParams(alpha, 0.0), QUADRATIC, STAB
        )
        # fallback: plain Durand-Kerner on that component
        assert z_next[0] == pytest.approx(1.25)

    def test_adversarial_alpha_diverges_then_clamps(self):
        # |1 + alpha*W| ~ 1e-9: above the guard, so the damped step explodes
        w0 = 0.75
        alpha = -(1.0 + 1e-9) / w0
        traj = run_trajectory(
            [2.0, -2.0], IterationParams(alpha, 0.0), QUADRATIC, 10, STAB
        )
        assert traj.diverged
        assert (traj.step_norms <= STAB.step_cap).all()
        assert np.isfinite(traj.step_norms).all()


class TestRunTrajectory:
    def test_roots_freeze_immediately(self):
        for alpha, beta in [(0.0, 0.0), (4.9, -1.9)]:
            traj = run_trajectory(
                QUADRATIC.roots, IterationParams(alpha, beta), QUADRATIC, 6, STAB
            )
            assert traj.frozen_from == 0
            assert np.array_equal(traj.step_norms, np.full(6, STAB.tail_floor))

    def test_hand_chain(self):
        traj = run_trajectory([2.0, -2.0], IterationParams(0.0, 0.0), QUADRATIC, 3, STAB)
        assert traj.step_norms[0] == pytest.approx(math.sqrt(0.5625 * 2), abs=1e-9)

    def test_length_and_nonnegative(self):
        traj = run_trajectory([2.0, -2.0], IterationParams(0.3, 0.1), QUADRATIC, 25, STAB)
        assert traj.step_norms.size == 25
        assert (traj.step_norms >= 0).all()
        assert np.isfinite(traj.step_norms).all()

    def test_frozen_tail_constant(self):
        traj = run_trajectory([1.1, -0.9], IterationParams(0.0, 0.0), QUADRATIC, 60, STAB)
        assert traj.frozen_from is not None
        tail = traj.step_norms[traj.frozen_from :]
        assert np.array_equal(tail, np.full(tail.size, STAB.tail_floor))


class TestRunEnsemble:
    def test_single_run_matches_trajectory(self):
        grid = ParamGrid(n_alpha=3, n_beta=3, global_seed=5)
        point = grid.point(1, 1)
        p = default_problem()
        ens = run_ensemble(point, p, 1, 20, STAB)
        rng = rng_from(run_seed(point.seed, 0))
        init = sample_initialization("random_box", p, rng)
        solo = run_trajectory(init, point.params, p, 20, STAB)
        assert np.array_equal(ens[0].step_norms, solo.step_norms)

    def test_deterministic_rerun(self):
        grid = ParamGrid(n_alpha=3, n_beta=3, global_seed=5)
        point = grid.point(0, 2)
        p = default_problem()
        a = run_ensemble(point, p, 4, 30, STAB)
        b = run_ensemble(point, p, 4, 30, STAB)
        for ta, tb in zip(a, b):
            assert np.array_equal(ta.step_norms, tb.step_norms)
            assert ta.diverged == tb.diverged

    def test_distinct_points_distinct_inits(self):
        p = default_problem()
        s1 = grid_seed(42, 0, 0)
        s2 = grid_seed(42, 0, 1)
        assert s1 != s2
        i1 = sample_initialization("random_box", p, rng_from(run_seed(s1, 0)))
        i2 = sample_initialization("random_box", p, rng_from(run_seed(s2, 0)))
        assert not np.allclose(i1, i2)


class TestParamGrid:
    def test_linspace_values(self):
        grid = ParamGrid()
        point = grid.point(2, 45)
        assert point.alpha == pytest.approx(-3 + 2 * 8 / 59)
        assert point.beta == pytest.approx(-2 + 45 * 6 / 59)
        assert point.alpha == pytest.approx(-2.7288, abs=1e-4)
        assert point.beta == pytest.approx(2.5763, abs=1e-4)

    def test_seed_is_pure_function(self):
        grid = ParamGrid(global_seed=9)
        assert grid.point(3, 4).seed == grid.point(3, 4).seed == grid_seed(9, 3, 4)

    def test_point_count(self):
        assert ParamGrid().n_points == 3600


@settings(max_examples=25, deadline=None)
@given(
    alpha=st.floats(-3, 5, allow_nan=False),
    beta=st.floats(-2, 4, allow_nan=False),
)
def test_fixed_point_invariance_property(alpha, beta):
    p = default_problem(5)
    traj = run_trajectory(p.roots, IterationParams(alpha, beta), p, 4, STAB)
    assert traj.frozen_from == 0
    assert np.array_equal(traj.step_norms, np.full(4, STAB.tail_floor))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**63 - 1))
def test_seed_mixing_stable(seed):
    assert mix64(seed, 1, 2) == mix64(seed, 1, 2)
    assert mix64(seed, 1, 2) != mix64(seed, 2, 1)
