"""Batch pseudoinverse, ridge oracle and online recursive solver."""

import numpy as np
import pytest

from skim.solver import (
    OnlineSolver,
    pseudoinverse,
    residual_norm,
    solve_batch,
    solve_ridge,
)


def penrose_defects(a, a_pinv):
    """Max-norm violations of the four Penrose identities."""
    return (
        np.abs(a @ a_pinv @ a - a).max(),
        np.abs(a_pinv @ a @ a_pinv - a_pinv).max(),
        np.abs((a @ a_pinv).T - a @ a_pinv).max(),
        np.abs((a_pinv @ a).T - a_pinv @ a).max(),
    )


def random_matrix(rng, shape, rank=None):
    m, k = shape
    if rank is None:
        return rng.standard_normal((m, k))
    return rng.standard_normal((m, rank)) @ rng.standard_normal((rank, k))


class TestPseudoinverse:
    def test_identity(self):
        np.testing.assert_allclose(pseudoinverse(np.eye(3)), np.eye(3), atol=1e-14)

    def test_diagonal_inverts_nonzeros(self):
        a = np.diag([2.0, 0.0])
        np.testing.assert_allclose(
            pseudoinverse(a), np.diag([0.5, 0.0]), atol=1e-15
        )

    def test_penrose_conditions_random_wide(self):
        rng = np.random.default_rng(7)
        a = random_matrix(rng, (5, 40))
        assert max(penrose_defects(a, pseudoinverse(a))) < 1e-8

    @pytest.mark.parametrize("shape,rank", [
        ((30, 10), None),   # tall
        ((10, 30), None),   # wide
        ((20, 20), None),   # square
        ((20, 30), 7),      # rank-deficient
        ((25, 12), 4),      # rank-deficient tall
    ])
    def test_penrose_conditions_across_shapes(self, shape, rank):
        rng = np.random.default_rng(hash((shape, rank)) % 2**32)
        for _ in range(20):
            a = random_matrix(rng, shape, rank)
            assert max(penrose_defects(a, pseudoinverse(a))) < 1e-8

    def test_zero_matrix(self):
        a = np.zeros((4, 6))
        np.testing.assert_array_equal(pseudoinverse(a), np.zeros((6, 4)))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            pseudoinverse(np.array([[1.0, np.nan]]))

    def test_explicit_cutoff_drops_small_directions(self):
        a = np.diag([1.0, 1e-9])
        p = pseudoinverse(a, tol=1e-6)
        np.testing.assert_allclose(p, np.diag([1.0, 0.0]), atol=1e-12)


class TestSolveBatch:
    def test_identity_activations(self):
        rng = np.random.default_rng(1)
        y = rng.standard_normal((3, 5))
        np.testing.assert_allclose(solve_batch(np.eye(5), y), y, atol=1e-12)

    def test_planted_solution_recovery(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((10, 200))  # full row rank a.s.
        w0 = rng.standard_normal((3, 10))
        w = solve_batch(a, w0 @ a)
        assert np.linalg.norm(w - w0) / np.linalg.norm(w0) < 1e-8

    def test_zero_targets_give_zero_weights(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((8, 50))
        np.testing.assert_allclose(
            solve_batch(a, np.zeros((2, 50))), np.zeros((2, 8)), atol=1e-12
        )

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            solve_batch(np.zeros((3, 10)), np.zeros((1, 11)))

    def test_residual_optimality(self):
        rng = np.random.default_rng(4)
        a = random_matrix(rng, (12, 60), rank=8)
        y = rng.standard_normal((2, 60))
        w = solve_batch(a, y)
        best = residual_norm(w, a, y)
        for _ in range(100):
            delta = rng.standard_normal(w.shape) * rng.uniform(1e-4, 1.0)
            assert best <= residual_norm(w + delta, a, y) + 1e-9


class TestSolveRidge:
    def test_identity_limit(self):
        rng = np.random.default_rng(5)
        y = rng.standard_normal((2, 6))
        w = solve_ridge(np.eye(6), y, reg=1e-12)
        np.testing.assert_allclose(w, y, atol=1e-9)

    def test_planted_recovery_small_reg(self):
        rng = np.random.default_rng(6)
        a = rng.standard_normal((15, 400))
        w0 = rng.standard_normal((2, 15))
        w = solve_ridge(a, w0 @ a, reg=1e-10)
        assert np.linalg.norm(w - w0) / np.linalg.norm(w0) < 1e-6

    def test_huge_reg_shrinks_to_zero(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((6, 40))
        y = rng.standard_normal((2, 40))
        w = solve_ridge(a, y, reg=1e12)
        assert np.abs(w).max() < 1e-9

    def test_reg_must_be_positive(self):
        with pytest.raises(ValueError):
            solve_ridge(np.eye(2), np.eye(2), reg=0.0)


class TestOnlineSolver:
    def test_initial_state(self):
        state = OnlineSolver(3, 1, reg=1.0)
        np.testing.assert_array_equal(state.inverse_correlation, np.eye(3))
        np.testing.assert_array_equal(state.weights, np.zeros((1, 3)))
        assert state.samples_seen == 0

    def test_initial_state_scales_with_reg(self):
        state = OnlineSolver(80, 1, reg=1e-6)
        np.testing.assert_allclose(state.inverse_correlation, 1e6 * np.eye(80))

    def test_reg_zero_rejected(self):
        with pytest.raises(ValueError):
            OnlineSolver(2, 2, reg=0.0)

    def test_zero_column_only_counts(self):
        state = OnlineSolver(4, 2, reg=1.0)
        p0 = state.inverse_correlation.copy()
        state.update(np.zeros(4), np.ones(2))
        assert state.samples_seen == 1
        np.testing.assert_array_equal(state.weights, np.zeros((2, 4)))
        np.testing.assert_array_equal(state.inverse_correlation, p0)

    def test_single_update_hand_computed(self):
        # P=I, a=(1,0), y=1: gain=(0.5,0), W row -> (0.5, 0)
        state = OnlineSolver(2, 1, reg=1.0)
        state.update(np.array([1.0, 0.0]), np.array([1.0]))
        np.testing.assert_allclose(state.weights, [[0.5, 0.0]], atol=1e-15)
        np.testing.assert_allclose(
            state.inverse_correlation, [[0.5, 0.0], [0.0, 1.0]], atol=1e-15
        )

    def test_full_pass_matches_ridge_oracle(self):
        rng = np.random.default_rng(8)
        for reg in [1e-2, 1e-6]:
            a = rng.standard_normal((20, 500))
            y = rng.standard_normal((3, 500))
            state = OnlineSolver(20, 3, reg=reg).fit(a, y)
            oracle = solve_ridge(a, y, reg)
            diff = np.linalg.norm(state.weights - oracle) / np.linalg.norm(oracle)
            assert diff < 1e-6

    def test_tiny_reg_approaches_batch(self):
        rng = np.random.default_rng(9)
        a = rng.standard_normal((20, 500))
        y = rng.standard_normal((1, 500))
        state = OnlineSolver(20, 1, reg=1e-8).fit(a, y)
        batch = solve_batch(a, y)
        assert np.linalg.norm(state.weights - batch) / np.linalg.norm(batch) < 1e-5

    def test_column_permutation_changes_little(self):
        rng = np.random.default_rng(10)
        a = rng.standard_normal((15, 300))
        y = rng.standard_normal((2, 300))
        w1 = OnlineSolver(15, 2, reg=1e-4).fit(a, y).weights
        perm = rng.permutation(300)
        w2 = OnlineSolver(15, 2, reg=1e-4).fit(a[:, perm], y[:, perm]).weights
        assert np.linalg.norm(w1 - w2) / np.linalg.norm(w1) < 1e-6

    def test_inverse_correlation_stays_symmetric(self):
        rng = np.random.default_rng(11)
        state = OnlineSolver(10, 1, reg=1e-3)
        for _ in range(200):
            state.update(rng.standard_normal(10), rng.standard_normal(1))
        p = state.inverse_correlation
        assert np.abs(p - p.T).max() < 1e-9

    def test_dimension_checks(self):
        state = OnlineSolver(3, 1, reg=1.0)
        with pytest.raises(ValueError):
            state.update(np.zeros(4), np.zeros(1))
        with pytest.raises(ValueError):
            state.update(np.zeros(3), np.zeros(2))
        with pytest.raises(ValueError):
            state.update(np.array([np.nan, 0, 0]), np.zeros(1))
