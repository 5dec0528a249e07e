"""Evaluation metrics for predicted trailers against ground truth.

Three computed dimensions: selection (set overlap, soft matching, and a
Frechet distance over shot feature distributions), ordering (edit
distance, pairwise order agreement on the overlap, rank correlation),
and composition (feature-trajectory DTW).  Perceptual scoring needs
external models and is deliberately absent; reports say so.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .core import ElasticAlignment


def set_metrics(pred: set, gt: set) -> tuple[float, float]:
    """(F1, IoU) between predicted and ground-truth shot index sets."""
    pred = set(pred)
    gt = set(gt)
    if not gt:
        raise ValueError("ground-truth set must be non-empty")
    inter = len(pred & gt)
    f1 = 2.0 * inter / (len(pred) + len(gt)) if pred or gt else 0.0
    iou = inter / len(pred | gt)
    return f1, iou


def _max_index_matching(pred: list[int], gt: list[int], window: int) -> int:
    """Maximum one-to-one matching size where |pred_i - gt_j| <= window."""
    match_of_gt = [-1] * len(gt)

    def augment(u: int, seen: list[bool]) -> bool:
        for v in range(len(gt)):
            if not seen[v] and abs(pred[u] - gt[v]) <= window:
                seen[v] = True
                if match_of_gt[v] == -1 or augment(match_of_gt[v], seen):
                    match_of_gt[v] = u
                    return True
        return False

    size = 0
    for u in range(len(pred)):
        if augment(u, [False] * len(gt)):
            size += 1
    return size


def soft_f1_at_k(pred: list[int], gt: list[int], window: int) -> float:
    """F1 with near-miss credit: indices within ``window`` can match.

    Matching is one-to-one and maximal; ``window = 0`` reduces to exact
    multiset F1.  Monotone non-decreasing in ``window``.
    """
    if window < 0:
        raise ValueError("window must be >= 0")
    gt = list(gt)
    pred = list(pred)
    if not gt:
        raise ValueError("ground-truth list must be non-empty")
    if not pred:
        return 0.0
    matches = _max_index_matching(pred, gt, window)
    return 2.0 * matches / (len(pred) + len(gt))


def chamfer(pred: set, gt: set) -> float:
    """Symmetric mean nearest-neighbor distance in shot-index units."""
    pred = sorted(set(pred))
    gt = sorted(set(gt))
    if not pred or not gt:
        raise ValueError("both index sets must be non-empty")
    p = np.asarray(pred, dtype=np.float64)
    g = np.asarray(gt, dtype=np.float64)
    d_pg = np.abs(p[:, None] - g[None, :]).min(axis=1).mean()
    d_gp = np.abs(g[:, None] - p[None, :]).min(axis=1).mean()
    return 0.5 * float(d_pg + d_gp)


def _mean_and_cov(feats: np.ndarray, shrinkage: float) -> tuple[np.ndarray, np.ndarray]:
    mu = feats.mean(axis=0)
    centered = feats - mu
    # sample covariance; single-point sets get the zero matrix
    cov = centered.T @ centered / max(feats.shape[0] - 1, 1)
    return mu, cov + shrinkage * np.eye(feats.shape[1])


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((mat + mat.T) / 2.0)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def fsd(pred_features: np.ndarray, gt_features: np.ndarray,
        shrinkage: float = 1e-6) -> tuple[float, float, float]:
    """Frechet distance between Gaussians fit to two shot feature sets.

    Returns (fsd, mean_term, cov_term).  The mean term flags the wrong
    type of content, the covariance term the wrong diversity.  The trace
    term uses the symmetric product form with eigenvalues clipped at
    zero, the standard stabilization for small, near-singular sets;
    ``shrinkage`` adds that multiple of the identity to both
    covariances.
    """
    P = np.atleast_2d(np.asarray(pred_features, dtype=np.float64))
    G = np.atleast_2d(np.asarray(gt_features, dtype=np.float64))
    if P.shape[0] < 1 or G.shape[0] < 1:
        raise ValueError("both feature sets must be non-empty")
    if P.shape[1] != G.shape[1] or P.shape[1] == 0:
        raise ValueError("feature sets must share a positive dimension")
    mu_p, cov_p = _mean_and_cov(P, shrinkage)
    mu_g, cov_g = _mean_and_cov(G, shrinkage)
    mean_term = float(np.sum((mu_p - mu_g) ** 2))
    root_p = _psd_sqrt(cov_p)
    inner = root_p @ cov_g @ root_p
    vals = np.clip(np.linalg.eigvalsh((inner + inner.T) / 2.0), 0.0, None)
    cov_term = float(np.trace(cov_p) + np.trace(cov_g) - 2.0 * np.sum(np.sqrt(vals)))
    total = max(mean_term + cov_term, 0.0)
    return total, mean_term, cov_term


def levenshtein(pred: list[int], gt: list[int]) -> int:
    """Edit distance with unit insert/delete/substitute costs."""
    a, b = list(pred), list(gt)
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        current = [i] + [0] * len(b)
        for j, y in enumerate(b, start=1):
            current[j] = min(previous[j] + 1,
                             current[j - 1] + 1,
                             previous[j - 1] + (x != y))
        previous = current
    return previous[-1]


def alignment_accuracy(pred: list[int], gt: list[int]) -> float:
    """Pairwise order agreement on the overlap subsequence.

    Both sequences are restricted to their common shots; the result is
    the fraction of unordered common-shot pairs whose relative order
    agrees.  Fewer than two common shots is degenerate and scores 1.0.
    Duplicate indices are resolved by first occurrence.
    """
    pos_pred = {}
    for idx, s in enumerate(pred):
        pos_pred.setdefault(s, idx)
    pos_gt = {}
    for idx, s in enumerate(gt):
        pos_gt.setdefault(s, idx)
    common = sorted(set(pos_pred) & set(pos_gt))
    if len(common) < 2:
        return 1.0
    agree = 0
    total = 0
    for ai in range(len(common)):
        for bi in range(ai + 1, len(common)):
            a, b = common[ai], common[bi]
            total += 1
            if (pos_pred[a] < pos_pred[b]) == (pos_gt[a] < pos_gt[b]):
                agree += 1
    return agree / total


def kendall_tau(pred: list[int]) -> float:
    """Rank correlation between cut order and chronological shot order.

    Ground-truth free: +1 when the trailer presents shots in movie
    order, -1 when fully reversed.  Sequences shorter than two are
    degenerate and return 0.
    """
    seq = list(pred)
    if len(seq) != len(set(seq)):
        raise ValueError("shot indices must be distinct")
    if len(seq) < 2:
        return 0.0
    tau = stats.kendalltau(np.arange(len(seq)), np.asarray(seq)).statistic
    return float(tau)


def sdtw(pred_features: np.ndarray, gt_features: np.ndarray) -> float:
    """Dynamic time warping over feature trajectories with cosine cost.

    Per-step cost is ``1 - cosine``; the standard match/insert/delete
    recurrence applies with no step weighting and the total path cost is
    divided by the summed trajectory lengths.
    """
    P = np.atleast_2d(np.asarray(pred_features, dtype=np.float64))
    G = np.atleast_2d(np.asarray(gt_features, dtype=np.float64))
    for name, M in (("pred_features", P), ("gt_features", G)):
        norms = np.linalg.norm(M, axis=1)
        zero = np.where(norms == 0)[0]
        if zero.size:
            raise ValueError(f"{name} row {zero[0] + 1} has zero norm")
    Pn = P / np.linalg.norm(P, axis=1, keepdims=True)
    Gn = G / np.linalg.norm(G, axis=1, keepdims=True)
    cost = 1.0 - np.clip(Pn @ Gn.T, -1.0, 1.0)
    n, m = cost.shape
    D = np.empty((n, m))
    D[0, 0] = cost[0, 0]
    for i in range(1, n):
        D[i, 0] = D[i - 1, 0] + cost[i, 0]
    for j in range(1, m):
        D[0, j] = D[0, j - 1] + cost[0, j]
    for i in range(1, n):
        for j in range(1, m):
            D[i, j] = cost[i, j] + min(D[i - 1, j - 1], D[i - 1, j], D[i, j - 1])
    return float(D[-1, -1] / (n + m))


def beat_align(cut_times: list[float], bar_boundaries: list[float],
               tolerance: float = 0.1) -> float:
    """Fraction of cut instants within ``tolerance`` seconds of a bar
    boundary.

    Extension metric: named upstream but never defined, so it is kept
    out of the core report and out of acceptance.
    """
    cuts = np.asarray(cut_times, dtype=np.float64)
    bounds = np.asarray(bar_boundaries, dtype=np.float64)
    if cuts.size == 0:
        raise ValueError("no cut instants given")
    if bounds.size == 0:
        raise ValueError("no bar boundaries given")
    dists = np.abs(cuts[:, None] - bounds[None, :]).min(axis=1)
    return float(np.mean(dists <= tolerance))


@dataclass(frozen=True)
class TrailerPrediction:
    """A shot sequence as cut, with features aligned row-for-row."""

    shot_sequence: tuple[int, ...]
    features: np.ndarray
    alignment: ElasticAlignment | None = None

    def __post_init__(self):
        seq = tuple(int(s) for s in self.shot_sequence)
        object.__setattr__(self, "shot_sequence", seq)
        feats = np.asarray(self.features, dtype=np.float64)
        object.__setattr__(self, "features", feats)
        if not seq:
            raise ValueError("shot sequence must be non-empty")
        if any(s < 1 for s in seq):
            raise ValueError("shot indices are 1-based and must be >= 1")
        if feats.ndim != 2 or feats.shape[0] != len(seq):
            raise ValueError("features must have one row per sequence entry")


@dataclass(frozen=True)
class ReportParams:
    top_k: int = 5  # prefix length for F1@K / window for SoftF1@K
    fsd_shrinkage: float = 1e-6
    levenshtein_on_overlap: bool = False  # variant: LD on the overlap subsequence

    def __post_init__(self):
        if self.top_k < 0:
            raise ValueError("top_k must be >= 0")
        if self.fsd_shrinkage < 0:
            raise ValueError("fsd_shrinkage must be >= 0")


@dataclass(frozen=True)
class MetricReport:
    selection: dict
    ordering: dict
    composition: dict
    flags: tuple[str, ...] = ()
    omitted: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "selection": dict(self.selection),
            "ordering": dict(self.ordering),
            "composition": dict(self.composition),
            "flags": list(self.flags),
            "omitted": dict(self.omitted),
        }


def _overlap_subsequence(seq: list[int], common: set[int]) -> list[int]:
    return [s for s in seq if s in common]


def full_report(pred: TrailerPrediction, gt: TrailerPrediction,
                params: ReportParams = ReportParams()) -> MetricReport:
    """Compute every supported metric for one prediction/GT pair."""
    if pred.features.shape[1] != gt.features.shape[1]:
        raise ValueError("prediction and ground truth feature widths differ")
    pred_seq = list(pred.shot_sequence)
    gt_seq = list(gt.shot_sequence)
    pred_set, gt_set = set(pred_seq), set(gt_seq)
    flags: list[str] = []

    f1, iou = set_metrics(pred_set, gt_set)
    head = pred_seq[:params.top_k]
    f1_at_k = set_metrics(set(head), gt_set)[0] if head else 0.0
    soft = soft_f1_at_k(pred_seq, gt_seq, params.top_k)
    fsd_total, fsd_mean, fsd_cov = fsd(pred.features, gt.features,
                                       shrinkage=params.fsd_shrinkage)
    selection = {
        "f1": f1,
        "f1_at_k": f1_at_k,
        "iou": iou,
        "soft_f1_at_k": soft,
        "chamfer": chamfer(pred_set, gt_set),
        "fsd": fsd_total,
        "fsd_mean_term": fsd_mean,
        "fsd_cov_term": fsd_cov,
    }

    common = pred_set & gt_set
    if params.levenshtein_on_overlap:
        ld = levenshtein(_overlap_subsequence(pred_seq, common),
                         _overlap_subsequence(gt_seq, common))
    else:
        ld = levenshtein(pred_seq, gt_seq)
    if len(common) < 2:
        flags.append("alignment_accuracy degenerate: fewer than 2 overlapping shots")
    if len(pred_seq) < 2:
        flags.append("kendall_tau degenerate: sequence shorter than 2")
        tau = 0.0
    else:
        tau = kendall_tau(pred_seq)
    ordering = {
        "levenshtein": ld,
        "alignment_accuracy": alignment_accuracy(pred_seq, gt_seq),
        "kendall_tau": tau,
    }

    composition = {"sdtw": sdtw(pred.features, gt.features)}

    omitted = {
        "perceptual": "not computed: requires an external vision-language rater",
        "aesthetic_quality": "not computed: requires an external aesthetic predictor",
    }
    return MetricReport(selection=selection, ordering=ordering,
                        composition=composition, flags=tuple(flags), omitted=omitted)
