"""Alignment search vs the exhaustive oracle, plus path-distance properties."""

import numpy as np
import pytest

from alas.masalign import (
    AlignmentPath,
    EnumerationBudgetError,
    InfeasiblePathError,
    brute_force_mas,
    mas,
    path_distance,
)


class TestForcedPaths:
    def test_single_row_takes_row_sum(self, rng):
        s = rng.uniform(-1, 1, size=(1, 6))
        path = mas(s)
        assert path.indices.tolist() == [0] * 6
        assert path.score == pytest.approx(s.sum(), abs=0)

    def test_square_matrix_forces_diagonal(self, rng):
        s = rng.uniform(-1, 1, size=(5, 5))
        path = mas(s)
        assert path.indices.tolist() == [0, 1, 2, 3, 4]
        assert path.score == pytest.approx(np.trace(s), rel=1e-12)

    def test_hand_two_by_three(self):
        path = brute_force_mas(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 1.0]]))
        assert path.indices.tolist() == [0, 1, 1]
        assert path.score == 3.0
        assert mas(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 1.0]])).indices.tolist() == [0, 1, 1]

    def test_one_by_three_oracle(self):
        path = brute_force_mas(np.array([[0.3, -0.2, 0.9]]))
        assert path.indices.tolist() == [0, 0, 0]

    def test_constant_matrix_tie_rule_prefers_stay(self):
        # all paths tie; backtracking keeps the top row as long as possible,
        # so advances happen as early as possible
        s = np.zeros((3, 6))
        expected = [0, 1, 2, 2, 2, 2]
        assert mas(s).indices.tolist() == expected
        assert brute_force_mas(s).indices.tolist() == expected


class TestErrors:
    def test_infeasible_when_fewer_columns(self):
        with pytest.raises(InfeasiblePathError):
            mas(np.zeros((4, 3)))
        with pytest.raises(InfeasiblePathError):
            brute_force_mas(np.zeros((4, 3)))

    def test_empty_matrix(self):
        with pytest.raises(ValueError, match="nonempty"):
            mas(np.zeros((0, 4)))

    def test_non_finite_rejected(self):
        s = np.zeros((2, 3))
        s[0, 0] = np.inf
        with pytest.raises(ValueError, match="finite"):
            mas(s)

    def test_budget_exceeded(self):
        with pytest.raises(EnumerationBudgetError):
            brute_force_mas(np.zeros((16, 40)), budget=1000)


class TestOracleEquivalence:
    def test_random_4x7(self, rng):
        for _ in range(300):
            s = rng.uniform(-1, 1, size=(4, 7))
            got, want = mas(s), brute_force_mas(s)
            assert got.indices.tolist() == want.indices.tolist()
            assert got.score == want.score

    def test_random_5x9(self, rng):
        for _ in range(300):
            s = rng.uniform(-1, 1, size=(5, 9))
            got, want = mas(s), brute_force_mas(s)
            assert got.indices.tolist() == want.indices.tolist()
            assert got.score == want.score

    def test_integer_ties_agree(self, rng):
        # exactly representable values produce real ties, exercising the
        # stay-preference rule on both sides
        for _ in range(300):
            s = rng.integers(0, 3, size=(3, 6)).astype(float)
            got, want = mas(s), brute_force_mas(s)
            assert got.indices.tolist() == want.indices.tolist()
            assert got.score == want.score


class TestPathProperties:
    def test_path_invariants_hold(self, rng):
        for _ in range(200):
            n_rows = int(rng.integers(1, 6))
            n_cols = int(rng.integers(n_rows, 12))
            path = mas(rng.uniform(-1, 1, size=(n_rows, n_cols)))
            idx = path.indices
            assert idx[0] == 0
            assert idx[-1] == n_rows - 1
            assert set(np.diff(idx)) <= {0, 1}
            assert len(idx) == n_cols

    def test_shift_invariance(self, rng):
        for _ in range(100):
            s = rng.uniform(-1, 1, size=(4, 8))
            base = mas(s).indices
            for shift in (-2.5, 0.75, 10.0):
                assert mas(s + shift).indices.tolist() == base.tolist()

    def test_monotone_improvement(self, rng):
        # raising similarities along the chosen path never changes it
        for _ in range(100):
            s = rng.uniform(-1, 1, size=(3, 7))
            path = mas(s)
            boosted = s.copy()
            boosted[path.indices, np.arange(s.shape[1])] += rng.uniform(0.1, 2.0)
            assert mas(boosted).indices.tolist() == path.indices.tolist()


class TestPathDistance:
    def test_identical_paths(self):
        assert path_distance([0, 1, 2], [0, 1, 2]) == 0.0

    def test_single_step_deviation(self):
        assert path_distance([0, 0, 1, 1], [0, 1, 1, 1]) == 0.25

    def test_worst_case_linear(self):
        assert path_distance([0, 0, 0, 0, 0], [0, 1, 2, 3, 4]) == 2.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="lengths"):
            path_distance([0, 1], [0, 1, 2])

    def test_pseudometric(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 20))
            a, b, c = (rng.integers(0, 10, size=n) for _ in range(3))
            assert path_distance(a, b) == path_distance(b, a)
            assert path_distance(a, a) == 0.0
            if not np.array_equal(a, b):
                assert path_distance(a, b) > 0.0
            assert path_distance(a, c) <= path_distance(a, b) + path_distance(b, c) + 1e-12


class TestAlignmentPathValidation:
    def test_must_start_at_zero(self):
        with pytest.raises(ValueError, match="row 0"):
            AlignmentPath(np.array([1, 2]), 0.0)

    def test_steps_bounded(self):
        with pytest.raises(ValueError, match="steps"):
            AlignmentPath(np.array([0, 2]), 0.0)
