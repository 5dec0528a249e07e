"""Spoiler-region exclusion, shot importance, and candidate masking.

The guard is fully deterministic: spoiler-prone regions are cut by time
fraction (the final stretch of the movie and the opening logo region),
importance combines visual distinctiveness with a mid-film position
weight, and free-text instructions arrive here only as precomputed
keyword embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CandidateMask, InfeasibleError, ShotTable


@dataclass(frozen=True)
class GuardParams:
    tail_fraction: float = 0.15  # final stretch excluded as spoiler-prone
    head_fraction: float = 0.02  # opening-logo region, time-based approximation
    knn_k: int = 5  # neighbors used for distinctiveness
    keyword_threshold: float = 0.25  # cosine floor for keyword matching

    def __post_init__(self):
        if not 0 <= self.tail_fraction < 1 or not 0 <= self.head_fraction < 1:
            raise ValueError("fractions must lie in [0, 1)")
        if self.head_fraction + self.tail_fraction >= 1:
            raise ValueError("head_fraction + tail_fraction must be < 1")
        if self.knn_k < 1:
            raise ValueError("knn_k must be >= 1")


def safe_mask(shots: ShotTable, params: GuardParams = GuardParams()) -> np.ndarray:
    """Per-shot admissibility: 0 inside a spoiler-prone region, else 1.

    A shot is masked when it starts inside the final ``tail_fraction``
    of the movie or ends inside the opening ``head_fraction``.
    """
    tail_start = (1.0 - params.tail_fraction) * shots.movie_duration
    head_end = params.head_fraction * shots.movie_duration
    banned = (shots.start_times >= tail_start) | (shots.end_times <= head_end)
    return np.where(banned, 0.0, 1.0)


def shot_importance(shots: ShotTable, params: GuardParams = GuardParams()) -> np.ndarray:
    """Importance in [0, 1] from visual distinctiveness and position.

    Distinctiveness is the mean cosine distance to the k nearest
    neighbor shots in feature space.  The position weight peaks at 40%
    of the runtime and falls off linearly, so both the setup and the
    spoiler-heavy ending are down-weighted; this is a documented
    heuristic, not a calibrated quantity.  The product is max-normalized
    (an all-zero product stays all-zero).
    """
    n = shots.count
    if n == 1:
        return np.ones(1)
    norms = np.linalg.norm(shots.features, axis=1)
    safe_norms = np.where(norms > 0, norms, 1.0)
    unit = shots.features / safe_norms[:, None]
    cos = np.clip(unit @ unit.T, -1.0, 1.0)
    dist = 1.0 - cos
    np.fill_diagonal(dist, np.inf)
    k = min(params.knn_k, n - 1)
    nearest = np.sort(dist, axis=1)[:, :k]
    distinctiveness = nearest.mean(axis=1)

    mid = (shots.start_times + 0.5 * shots.durations) / shots.movie_duration
    position = np.clip(1.0 - np.abs(mid - 0.4) / 0.6, 0.0, 1.0)

    p = distinctiveness * position
    peak = p.max()
    if peak > 0:
        p = p / peak
    return p


def build_candidate_mask(mask: np.ndarray, bar_count: int) -> CandidateMask:
    """Broadcast the per-shot safe mask to a bar x shot candidate mask.

    Entries are admissible when the safe mask exceeds 0.5; rows are
    identical by construction.  Raises when every shot is masked, since
    no alignment can exist.
    """
    m = np.asarray(mask, dtype=np.float64)
    if m.ndim != 1:
        raise ValueError("safe mask must be a vector")
    if np.any(m < 0) or np.any(m > 1):
        raise ValueError("safe mask entries must lie in [0, 1]")
    if bar_count < 1:
        raise ValueError("bar_count must be >= 1")
    admissible = m > 0.5
    if not admissible.any():
        raise InfeasibleError("infeasible: empty candidate pool (every shot masked)")
    values = np.tile(admissible.astype(np.uint8), (bar_count, 1))
    return CandidateMask(values=values, safe_mask=m)


def refine_mask_with_keywords(mask: CandidateMask, shot_features: np.ndarray,
                              keyword_embeddings: np.ndarray, threshold: float,
                              mode: str = "require") -> tuple[CandidateMask, np.ndarray | None]:
    """Narrow or bias the candidate mask using keyword embeddings.

    ``require`` keeps a shot admissible only if its best cosine
    similarity to any keyword reaches ``threshold``; raising the
    threshold never adds shots back.  ``boost`` leaves the mask alone
    and returns a per-shot bonus vector (best similarity clipped to
    [0, 1]) for the caller to feed through the importance channel.
    """
    if mode not in ("require", "boost"):
        raise ValueError(f"unknown keyword mode {mode!r}")
    feats = np.asarray(shot_features, dtype=np.float64)
    kw = np.asarray(keyword_embeddings, dtype=np.float64)
    if kw.ndim != 2 or kw.shape[0] < 1:
        raise ValueError("keyword_embeddings must be a non-empty 2-D matrix")
    if feats.ndim != 2 or feats.shape[1] != kw.shape[1]:
        raise ValueError("keyword embedding width must match shot feature width")
    if feats.shape[0] != mask.values.shape[1]:
        raise ValueError("shot feature rows must match the mask's shot count")

    feat_norms = np.linalg.norm(feats, axis=1)
    kw_norms = np.linalg.norm(kw, axis=1)
    denom = np.outer(np.where(feat_norms > 0, feat_norms, 1.0),
                     np.where(kw_norms > 0, kw_norms, 1.0))
    sims = (feats @ kw.T) / denom
    best = sims.max(axis=1)

    if mode == "boost":
        return mask, np.clip(best, 0.0, 1.0)

    keep = best >= threshold
    values = mask.values * keep.astype(np.uint8)[None, :]
    empty = np.where(values.sum(axis=1) == 0)[0]
    if empty.size:
        raise InfeasibleError(
            f"keyword requirement empties the candidate set for bar {empty[0] + 1}")
    return CandidateMask(values=values, safe_mask=mask.safe_mask), None
