import itertools

import numpy as np
import pytest

from tilekit.core import LikelihoodField, Tiling, check_nonoverlap, log_joint_score
from tilekit.evaluate import (
    brute_force_map,
    classification_error,
    greedy_match,
    hamming,
    relative_cost,
)


class TestHamming:
    def test_identical(self):
        labels = np.array([[1, 0], [0, 2]])
        assert hamming(labels, labels) == 0.0

    def test_binarization_hides_renaming(self):
        assert hamming([[1, 0], [0, 0]], [[2, 0], [0, 0]]) == 0.0

    def test_quarter(self):
        assert hamming([[1, 0], [0, 0]], [[0, 0], [0, 0]]) == 0.25

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        a = rng.integers(0, 3, size=(6, 6))
        b = rng.integers(0, 3, size=(6, 6))
        assert hamming(a, b) == hamming(b, a)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            hamming([[1]], [[1, 0]])


class TestGreedyMatch:
    def test_identity_matching(self):
        labels = np.array([[1, 1, 0], [0, 2, 2], [0, 0, 3]])
        m = greedy_match(labels, labels)
        assert m.pairs == ((1, 1), (2, 2), (3, 3))
        assert m.unmatched_truth == () and m.unmatched_pred == ()

    def test_relabeled_tile(self):
        truth = np.array([[1, 1], [0, 0]])
        pred = np.array([[2, 2], [0, 0]])
        m = greedy_match(truth, pred)
        assert m.pairs == ((1, 2),)

    def test_tie_break_prefers_smallest_labels(self):
        # Overlap counts are 5 in every cell of the 2x2 table.
        truth = np.repeat([[1], [2]], 10, axis=1)
        pred = np.tile([1] * 5 + [2] * 5, (2, 1))
        m = greedy_match(truth, pred)
        assert m.pairs == ((1, 1), (2, 2))

    def test_one_to_one(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            a = rng.integers(0, 4, size=(5, 5))
            b = rng.integers(0, 4, size=(5, 5))
            m = greedy_match(a, b)
            lefts = [u for u, _ in m.pairs]
            rights = [v for _, v in m.pairs]
            assert len(set(lefts)) == len(lefts)
            assert len(set(rights)) == len(rights)


class TestClassificationError:
    def test_identical(self):
        labels = np.array([[1, 0], [0, 2]])
        assert classification_error(labels, labels) == 0.0

    def test_matching_absorbs_renaming(self):
        truth = np.array([[1, 1], [0, 0]])
        pred = np.array([[2, 2], [0, 0]])
        assert classification_error(truth, pred) == 0.0

    def test_unmatched_pred_tiles_count_as_errors(self):
        truth = np.zeros((2, 2), dtype=int)
        pred = np.array([[1, 0], [0, 0]])
        assert classification_error(truth, pred) == 0.25

    def test_at_least_hamming(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            a = rng.integers(0, 4, size=(4, 6))
            b = rng.integers(0, 4, size=(4, 6))
            assert classification_error(a, b) >= hamming(a, b) - 1e-12


class TestRelativeCost:
    def test_zero_for_identical(self):
        f = LikelihoodField(np.ones((3, 3)), np.zeros((3, 3)))
        t = Tiling([[1, 1, 0]], [[0, 1, 1]])
        assert relative_cost(t, t, f) == 0.0

    def test_positive_when_missing_planted_tile(self):
        lam = np.full((4, 4), -1.0)
        lam[:2, :2] = 3.0
        f = LikelihoodField(lam, np.zeros((4, 4)))
        truth = Tiling([[1, 1, 0, 0]], [[1, 1, 0, 0]])
        assert relative_cost(Tiling.empty(4, 4), truth, f) > 0

    def test_can_be_negative_when_noise_flips_a_row(self):
        # The planted tile contains a row the noise turned against it, so
        # the exhaustive optimum codes the data cheaper than the truth.
        lam = np.full((5, 5), -2.0)
        lam[0, :3] = 2.0
        lam[1, :3] = -3.0  # planted row, ruined by noise
        f = LikelihoodField(lam, np.zeros((5, 5)))
        truth = Tiling([[1, 1, 0, 0, 0]], [[1, 1, 1, 0, 0]])
        best = brute_force_map(f, 1)
        assert log_joint_score(best, f) > log_joint_score(truth, f)
        assert relative_cost(best, truth, f) < 0


class TestBruteForce:
    def test_hand_instance(self):
        f = LikelihoodField([[3.0, 3.0], [-3.0, -3.0]], np.zeros((2, 2)))
        best = brute_force_map(f, 1)
        assert best.row_members.tolist() == [[1, 0]]
        assert best.col_members.tolist() == [[1, 1]]

    def test_all_negative_selects_empty(self):
        f = LikelihoodField(np.full((2, 3), -1.0), np.zeros((2, 3)))
        assert brute_force_map(f, 2).tile_count == 0

    def test_matches_exhaustive_reference(self):
        # Independent oracle: enumerate all indicator pairs directly.
        rng = np.random.default_rng(21)
        for _ in range(10):
            lam = rng.choice([-2.0, 2.0], size=(2, 2))
            f = LikelihoodField(lam, np.zeros((2, 2)))
            best_score = -np.inf
            for bits in itertools.product((0, 1), repeat=6):
                rows = np.array([bits[0:2], bits[2:4]], dtype=np.uint8)[:1]
                cols = np.array([bits[4:6]], dtype=np.uint8)
                t = Tiling(np.array([bits[0:2]], np.uint8), cols)
                if check_nonoverlap(t):
                    best_score = max(best_score, log_joint_score(t, f))
            got = brute_force_map(f, 1)
            assert log_joint_score(got, f) == pytest.approx(best_score)

    def test_upper_bounds_solvers(self):
        from tilekit.core import SolverParams
        from tilekit.icm import run_icm
        from tilekit.sumprod import run_sum_product

        rng = np.random.default_rng(31)
        params = SolverParams(rng_seed=0)
        for _ in range(10):
            f = LikelihoodField(rng.choice([-2.0, 2.0], size=(3, 3)), np.zeros((3, 3)))
            bound = log_joint_score(brute_force_map(f, 2), f)
            assert log_joint_score(run_icm(f, 2, params), f) <= bound + 1e-9
            assert log_joint_score(run_sum_product(f, 2, params), f) <= bound + 1e-9

    def test_guard_rejects_large_instances(self):
        f = LikelihoodField(np.zeros((10, 10)), np.zeros((10, 10)))
        with pytest.raises(ValueError):
            brute_force_map(f, 2)
