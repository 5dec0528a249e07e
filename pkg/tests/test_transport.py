import math

import numpy as np
import pytest

from trailercut.core import EngineParams
from trailercut.transport import (
    KL_SATURATION_VALUE,
    loss_finetune,
    loss_infonce,
    loss_kl,
    loss_sinkhorn,
    sinkhorn_project,
    soft_target_from_iou,
)


def reference_sinkhorn(scores, tau, iters):
    """Straightforward reimplementation used as the oracle."""
    M = np.exp(np.asarray(scores, dtype=np.float64) / tau)
    J, I = M.shape
    for _ in range(iters):
        M = M / M.sum(axis=1, keepdims=True)
        M = M * ((J / I) / M.sum(axis=0, keepdims=True))
    return M


class TestSinkhornProject:
    def test_uniform_fixed_point(self):
        t = sinkhorn_project(np.zeros((2, 2)), tau_s=1.0, iters=1)
        assert np.allclose(t.values, [[0.5, 0.5], [0.5, 0.5]])
        assert t.row_residual == pytest.approx(0.0, abs=1e-15)
        assert t.col_residual == pytest.approx(0.0, abs=1e-15)

    def test_hand_computed_single_pass(self):
        scores = np.array([[math.log(2), 0.0], [0.0, math.log(2)]])
        t = sinkhorn_project(scores, tau_s=1.0, iters=1)
        assert np.allclose(t.values, [[2 / 3, 1 / 3], [1 / 3, 2 / 3]], atol=1e-12)
        assert t.row_residual < 1e-12 and t.col_residual < 1e-12

    def test_matches_reference_on_random_matrices(self, rng):
        for _ in range(20):
            scores = rng.normal(scale=2.0, size=(3, 5))
            ours = sinkhorn_project(scores, tau_s=0.7, iters=50)
            ref = reference_sinkhorn(scores, 0.7, 50)
            assert np.allclose(ours.values, ref, atol=1e-12)
            assert ours.row_residual < 1e-6
            assert abs(ours.values.sum(axis=0) - 3 / 5).max() < 1e-6

    def test_shift_invariance(self, rng):
        scores = rng.normal(size=(4, 6))
        a = sinkhorn_project(scores, tau_s=0.5, iters=8).values
        b = sinkhorn_project(scores + 7.3, tau_s=0.5, iters=8).values
        assert np.allclose(a, b, atol=1e-10)

    def test_large_scores_do_not_overflow(self):
        scores = np.array([[900.0, -900.0], [-900.0, 900.0]])
        t = sinkhorn_project(scores, tau_s=0.5, iters=3)
        assert np.all(np.isfinite(t.values))

    def test_zero_iters_returns_plain_exponential(self):
        scores = np.array([[0.0, 1.0]])
        t = sinkhorn_project(scores, tau_s=1.0, iters=0)
        assert np.allclose(t.values, [[1.0, math.e]])

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            sinkhorn_project(np.array([[np.inf, 0.0]]), 1.0, 1)
        with pytest.raises(ValueError):
            sinkhorn_project(np.zeros((2, 2)), 0.0, 1)
        with pytest.raises(ValueError):
            sinkhorn_project(np.zeros((2, 2)), 1.0, -1)


class TestSoftTargetFromIoU:
    def test_half_overlap(self):
        target = soft_target_from_iou([(0.0, 2.0)], [(0.0, 1.0)])
        # single shot: row renormalizes the raw IoU of 1/2 to 1
        assert target.shape == (1, 1)
        assert target[0, 0] == pytest.approx(1.0)

    def test_disjoint_is_zero(self):
        target = soft_target_from_iou([(5.0, 6.0)], [(0.0, 1.0)])
        assert target[0, 0] == 0.0

    def test_row_renormalization(self):
        target = soft_target_from_iou([(0.0, 1.0), (1.0, 3.0)], [(0.0, 2.0)])
        assert np.allclose(target, [[3 / 5, 2 / 5]])

    def test_raw_iou_value(self):
        # before renormalization the IoU itself is intersection/union
        target = soft_target_from_iou([(0.0, 2.0), (10.0, 11.0)], [(0.0, 1.0)])
        assert np.allclose(target, [[1.0, 0.0]])

    def test_rejects_degenerate_interval(self):
        with pytest.raises(ValueError, match="start >= end"):
            soft_target_from_iou([(1.0, 1.0)], [(0.0, 1.0)])


class TestLossKL:
    def test_zero_on_matched_distributions(self, rng):
        scores = rng.normal(size=(3, 4))
        z = scores - scores.max(axis=1, keepdims=True)
        target = np.exp(z) / np.exp(z).sum(axis=1, keepdims=True)
        assert loss_kl(scores, target, tau_t=1.0) == pytest.approx(0.0, abs=1e-12)

    def test_uniform_target_constant_scores(self):
        assert loss_kl(np.zeros((2, 3)), np.full((2, 3), 1 / 3), 2.0) == pytest.approx(0.0)

    def test_hand_value(self):
        expected = 0.5 * math.log(0.5 / 0.75) + 0.5 * math.log(0.5 / 0.25)
        got = loss_kl(np.zeros((1, 2)), np.array([[0.75, 0.25]]), tau_t=1.0)
        assert got == pytest.approx(expected, abs=1e-12)

    def test_saturates_on_target_zeros(self):
        target = np.array([[1.0, 0.0]])
        with pytest.warns(RuntimeWarning, match="saturated"):
            value = loss_kl(np.zeros((1, 2)), target, tau_t=1.0)
        assert value == KL_SATURATION_VALUE

    def test_rejects_non_distribution_target(self):
        with pytest.raises(ValueError, match="sum to 1"):
            loss_kl(np.zeros((1, 2)), np.array([[0.9, 0.3]]), 1.0)

    def test_non_negative(self, rng):
        for _ in range(25):
            scores = rng.normal(size=(2, 5))
            raw = rng.uniform(0.1, 1.0, size=(2, 5))
            target = raw / raw.sum(axis=1, keepdims=True)
            assert loss_kl(scores, target, tau_t=0.7) >= 0.0


class TestLossInfoNCE:
    def test_single_pair_is_zero(self):
        assert loss_infonce(np.array([[1.0, 0.0]]), np.array([[0.0, 2.0]]), 1.0) == 0.0

    def test_orthonormal_pair(self):
        expected = -math.log(math.e / (math.e + 1.0))
        got = loss_infonce(np.eye(2), np.eye(2), temperature=1.0)
        assert got == pytest.approx(expected, abs=1e-12)

    def test_swapped_rows_score_worse(self):
        audio = np.eye(2)
        matched = loss_infonce(audio, np.eye(2), 1.0)
        swapped = loss_infonce(audio, np.eye(2)[::-1], 1.0)
        assert swapped > matched

    def test_permutation_invariance(self, rng):
        audio = rng.normal(size=(5, 7))
        visual = rng.normal(size=(5, 7))
        perm = rng.permutation(5)
        assert loss_infonce(audio, visual, 0.5) == pytest.approx(
            loss_infonce(audio[perm], visual[perm], 0.5), abs=1e-12)

    def test_rejects_zero_row(self):
        with pytest.raises(ValueError, match="zero norm"):
            loss_infonce(np.zeros((2, 3)), np.ones((2, 3)), 1.0)


class TestLossSinkhorn:
    def test_scalar_matrix_is_zero(self):
        assert loss_sinkhorn(np.array([[3.0]]), 0.5, 3) == pytest.approx(0.0, abs=1e-12)

    def test_constant_matrix_is_zero(self):
        assert loss_sinkhorn(np.full((3, 3), 2.0), 1.0, 3) == pytest.approx(0.0, abs=1e-12)

    def test_matches_reference(self):
        scores = np.array([[2.0, 0.0], [0.0, 2.0]])
        target = reference_sinkhorn(scores, 1.0, 3)
        target = target / target.sum(axis=1, keepdims=True)
        z = scores - scores.max(axis=1, keepdims=True)
        p = np.exp(z) / np.exp(z).sum(axis=1, keepdims=True)
        expected = np.mean(np.sum(p * np.log(p / target), axis=1))
        assert loss_sinkhorn(scores, 1.0, 3) == pytest.approx(expected, abs=1e-9)


class TestLossFinetune:
    def base_inputs(self, rng):
        scores = rng.normal(size=(3, 4))
        raw = rng.uniform(0.2, 1.0, size=(3, 4))
        target = raw / raw.sum(axis=1, keepdims=True)
        audio = rng.normal(size=(3, 6))
        visual = rng.normal(size=(3, 6))
        return scores, target, audio, visual

    def test_weights_zero_out_terms(self, rng):
        scores, target, audio, visual = self.base_inputs(rng)
        params = EngineParams(lambda_sink=0.0, lambda_con=0.0)
        result = loss_finetune(scores, target, params, audio, visual)
        assert result.total == pytest.approx(result.kl, abs=1e-12)

    def test_linear_combination(self, rng):
        scores, target, audio, visual = self.base_inputs(rng)
        params = EngineParams(lambda_sink=0.1, lambda_con=0.5)
        result = loss_finetune(scores, target, params, audio, visual)
        assert result.total == pytest.approx(
            result.kl + 0.1 * result.sinkhorn + 0.5 * result.infonce, abs=1e-12)

    def test_component_values_match_standalone(self, rng):
        scores, target, audio, visual = self.base_inputs(rng)
        params = EngineParams()
        result = loss_finetune(scores, target, params, audio, visual)
        assert result.kl == pytest.approx(loss_kl(scores, target, params.target_temperature))
        assert result.sinkhorn == pytest.approx(
            loss_sinkhorn(scores, params.sinkhorn_temperature, params.sinkhorn_iters))
        assert result.infonce == pytest.approx(
            loss_infonce(audio, visual, params.temperature))
