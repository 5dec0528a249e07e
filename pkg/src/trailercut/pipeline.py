"""End-to-end alignment pipeline over a loaded bundle.

Wires the deterministic stages together: energy resolution, the safety
guard, candidate masking, keyword refinement, score computation or
passthrough, prior fusion, and beam selection.  The CLI and the
synthetic-instance verifier both run through here so their behavior
cannot drift apart.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bundle import Bundle
from .core import EngineParams
from .features import compute_shot_dynamics
from .guard import GuardParams, build_candidate_mask, refine_mask_with_keywords, safe_mask, shot_importance
from .scoring import alignment_scores, fuse_scores
from .selection import SelectionResult, SimilarityIndex, exhaustive_select, select

KEYWORD_MODES = ("off", "require", "boost")
SELECTORS = ("beam", "exhaustive")


@dataclass(frozen=True)
class AlignmentOutcome:
    selection: SelectionResult
    energy: np.ndarray
    dynamics: np.ndarray
    importance: np.ndarray
    scores_origin: str  # "score_matrix" | "embeddings"
    notes: tuple[str, ...] = ()
    diagnostics: dict = field(default_factory=dict)


def run_alignment(bundle: Bundle, params: EngineParams = EngineParams(),
                  guard_params: GuardParams = GuardParams(), *,
                  guard: bool = True, keyword_mode: str = "off",
                  top_m_mode: str = "rank_after_exclusion",
                  selector: str = "beam",
                  similarity: SimilarityIndex | None = None) -> AlignmentOutcome:
    """Run the full selection pipeline on a bundle."""
    if keyword_mode not in KEYWORD_MODES:
        raise ValueError(f"keyword_mode must be one of {KEYWORD_MODES}")
    if selector not in SELECTORS:
        raise ValueError(f"selector must be one of {SELECTORS}")
    shots, bars = bundle.shots, bundle.bars
    notes = list(bundle.notes)

    if guard:
        mask_vec = safe_mask(shots, guard_params)
        importance = shot_importance(shots, guard_params)
    else:
        mask_vec = np.ones(shots.count)
        importance = np.zeros(shots.count)
    mask = build_candidate_mask(mask_vec, bars.count)

    if keyword_mode != "off":
        if bundle.keyword_embeddings is None:
            raise ValueError("keyword mode requested but the bundle has no keyword embeddings")
        mask, bonus = refine_mask_with_keywords(
            mask, shots.features, bundle.keyword_embeddings,
            threshold=guard_params.keyword_threshold, mode=keyword_mode)
        if bonus is not None:
            importance = importance + bonus
            notes.append("keyword boost added to the importance channel")

    if bundle.frame_features is not None:
        dynamics = compute_shot_dynamics(bundle.frame_features)
    else:
        dynamics = np.zeros(shots.count)
        notes.append("no frame features in bundle; shot dynamics default to zero "
                     "(energy-dynamics prior disabled)")

    if bundle.score_matrix is not None:
        raw_scores = np.asarray(bundle.score_matrix, dtype=np.float64)
        scores_origin = "score_matrix"
    else:
        if bars.features is None:
            raise ValueError("bundle has neither a score matrix nor music features")
        if bars.features.shape[1] != shots.feature_dim:
            raise ValueError(
                f"cannot score from embeddings: audio width {bars.features.shape[1]} "
                f"differs from visual width {shots.feature_dim} (supply a score matrix)")
        raw_scores = alignment_scores(bars.features, shots.features, params.temperature)
        scores_origin = "embeddings"

    fused = fuse_scores(raw_scores, mask, bars.energy, dynamics, importance,
                        params.lambda_energy, params.lambda_importance)
    if selector == "beam":
        result = select(fused, bars, shots, params, similarity=similarity,
                        top_m_mode=top_m_mode)
    else:
        result = exhaustive_select(fused, bars, shots, params, similarity=similarity)
    return AlignmentOutcome(
        selection=result,
        energy=bars.energy,
        dynamics=dynamics,
        importance=importance,
        scores_origin=scores_origin,
        notes=tuple(notes),
        diagnostics={"guard": guard, "keyword_mode": keyword_mode,
                     "beam_stats": result.beam_stats},
    )
