"""Sinkhorn structured targets, soft IoU targets, and loss evaluators.

These are pure evaluators (no gradients, no training loop): they exist
to build structured alignment targets and to verify loss arithmetic.

Normalization convention for non-square J x I matrices: rows are scaled
to sum to 1 and columns to sum to J / I, the balanced extension of a
doubly-stochastic target that preserves total mass J.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import EngineParams

# Reported instead of +inf when a KL target has zero mass where the
# prediction is positive.
KL_SATURATION_VALUE = 1e12


@dataclass(frozen=True)
class SinkhornTarget:
    """Result of projecting a score matrix toward balanced marginals."""

    values: np.ndarray  # J x I, non-negative
    iterations_run: int
    row_residual: float  # max |row sum - 1| after the final step
    col_residual: float  # max |col sum - J/I| after the final step


def sinkhorn_project(scores: np.ndarray, tau_s: float, iters: int) -> SinkhornTarget:
    """Exponentiate ``scores / tau_s`` and alternate row/column scaling.

    Each iteration applies row normalization (rows to 1) followed by
    column normalization (columns to J/I).  Rows are exp-stabilized by
    subtracting the row max, which the first row normalization cancels,
    so results match the unstabilized recurrence exactly.  Adding any
    constant to all of ``scores`` leaves the output unchanged for the
    same reason.
    """
    S = np.asarray(scores, dtype=np.float64)
    if S.ndim != 2:
        raise ValueError("scores must be a 2-D matrix")
    if not np.all(np.isfinite(S)):
        raise ValueError("scores must be finite")
    if tau_s <= 0:
        raise ValueError("tau_s must be positive")
    if iters < 0:
        raise ValueError("iters must be >= 0")
    J, I = S.shape
    col_target = J / I

    if iters == 0:
        M = np.exp(S / tau_s)
    else:
        M = np.exp(S / tau_s - np.max(S / tau_s, axis=1, keepdims=True))
        for _ in range(iters):
            M = M / M.sum(axis=1, keepdims=True)
            M = M * (col_target / M.sum(axis=0, keepdims=True))

    row_residual = float(np.max(np.abs(M.sum(axis=1) - 1.0)))
    col_residual = float(np.max(np.abs(M.sum(axis=0) - col_target)))
    return SinkhornTarget(values=M, iterations_run=iters,
                          row_residual=row_residual, col_residual=col_residual)


def _intervals(pairs, name: str) -> np.ndarray:
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty list of (start, end) pairs")
    if np.any(arr[:, 0] >= arr[:, 1]):
        raise ValueError(f"{name} contains an interval with start >= end")
    return arr


def soft_target_from_iou(shot_intervals, bar_intervals) -> np.ndarray:
    """Temporal-IoU soft targets: rows are bars, columns are shots.

    Non-overlapping pairs are exactly zero.  Rows with any overlap are
    renormalized to sum to 1; rows with no overlap stay all-zero.
    """
    shots = _intervals(shot_intervals, "shot_intervals")
    bars = _intervals(bar_intervals, "bar_intervals")
    inter_lo = np.maximum(bars[:, None, 0], shots[None, :, 0])
    inter_hi = np.minimum(bars[:, None, 1], shots[None, :, 1])
    inter = np.clip(inter_hi - inter_lo, 0.0, None)
    union = (bars[:, 1] - bars[:, 0])[:, None] + (shots[:, 1] - shots[:, 0])[None, :] - inter
    iou = np.where(inter > 0, inter / union, 0.0)
    row_sums = iou.sum(axis=1, keepdims=True)
    # all-zero rows stay all-zero
    return iou / np.where(row_sums > 0, row_sums, 1.0)


def _row_softmax(scores: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    z = scores / temperature
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _mean_row_kl(p: np.ndarray, q: np.ndarray) -> float:
    """Mean over rows of KL(p_row || q_row), saturating on q zeros."""
    if np.any((q <= 0) & (p > 0)):
        warnings.warn(
            "KL divergence saturated: target has zero mass where the "
            "prediction is positive", RuntimeWarning, stacklevel=3)
        return KL_SATURATION_VALUE
    safe_p = np.where(p > 0, p, 1.0)
    safe_q = np.where(p > 0, q, 1.0)
    per_row = np.sum(np.where(p > 0, p * (np.log(safe_p) - np.log(safe_q)), 0.0), axis=1)
    return float(np.mean(per_row))


def loss_kl(scores: np.ndarray, target: np.ndarray, tau_t: float) -> float:
    """Mean row-wise KL(softmax(scores / tau_t) || target).

    ``target`` rows must be probability distributions.  The convention
    0 * log 0 = 0 applies; a target zero under positive prediction mass
    makes the divergence infinite and is reported as
    ``KL_SATURATION_VALUE`` with a RuntimeWarning.
    """
    S = np.asarray(scores, dtype=np.float64)
    Q = np.asarray(target, dtype=np.float64)
    if S.shape != Q.shape or S.ndim != 2:
        raise ValueError("scores and target must be matrices of the same shape")
    if tau_t <= 0:
        raise ValueError("tau_t must be positive")
    if np.any(Q < 0):
        raise ValueError("target rows must be probability distributions")
    bad = np.where(np.abs(Q.sum(axis=1) - 1.0) > 1e-6)[0]
    if bad.size:
        raise ValueError(f"target row {bad[0] + 1} does not sum to 1")
    return _mean_row_kl(_row_softmax(S, tau_t), Q)


def _unit_rows(mat: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(mat, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix")
    norms = np.linalg.norm(arr, axis=1)
    zero = np.where(norms == 0)[0]
    if zero.size:
        raise ValueError(f"{name} row {zero[0] + 1} has zero norm")
    return arr / norms[:, None]


def loss_infonce(pooled_audio: np.ndarray, pooled_visual: np.ndarray,
                 temperature: float) -> float:
    """Symmetric InfoNCE over L2-normalized pooled representations.

    Half the mean row-wise cross-entropy plus half the mean column-wise
    cross-entropy, both with diagonal labels.  A single pair gives 0.
    """
    A = _unit_rows(pooled_audio, "pooled_audio")
    V = _unit_rows(pooled_visual, "pooled_visual")
    if A.shape != V.shape:
        raise ValueError("pooled matrices must have identical shapes")
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    sims = A @ V.T / temperature
    diag = np.arange(sims.shape[0])

    def _ce(logits: np.ndarray) -> float:
        z = logits - logits.max(axis=1, keepdims=True)
        log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        return float(-np.mean(log_probs[diag, diag]))

    return 0.5 * (_ce(sims) + _ce(sims.T))


def loss_sinkhorn(scores: np.ndarray, tau_s: float, iters: int) -> float:
    """KL of the raw-score row softmax against the Sinkhorn target.

    The projected target rows are renormalized to probability
    distributions before the divergence is taken.
    """
    S = np.asarray(scores, dtype=np.float64)
    target = sinkhorn_project(S, tau_s, iters).values
    target = target / target.sum(axis=1, keepdims=True)
    return _mean_row_kl(_row_softmax(S), target)


class FinetuneLoss(NamedTuple):
    total: float
    kl: float
    sinkhorn: float
    infonce: float


def loss_finetune(scores: np.ndarray, gt_target: np.ndarray, params: EngineParams,
                  pooled_audio: np.ndarray, pooled_visual: np.ndarray) -> FinetuneLoss:
    """Weighted combination of the three fine-tuning loss terms."""
    kl = loss_kl(scores, gt_target, params.target_temperature)
    sink = loss_sinkhorn(scores, params.sinkhorn_temperature, params.sinkhorn_iters)
    info = loss_infonce(pooled_audio, pooled_visual, params.temperature)
    total = kl + params.lambda_sink * sink + params.lambda_con * info
    return FinetuneLoss(total=total, kl=kl, sinkhorn=sink, infonce=info)
