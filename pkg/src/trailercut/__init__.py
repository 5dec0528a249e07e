"""Elastic bar-to-shot alignment engine and trailer evaluation metrics."""

from .core import (
    EXCLUDED,
    BarTrack,
    CandidateMask,
    ElasticAlignment,
    EngineParams,
    InfeasibleError,
    ShotTable,
    validate_alignment,
)
from .features import AudioSamples, compute_bar_energy, compute_shot_dynamics, uniform_bar_grid
from .scoring import FusedScores, alignment_scores, fuse_scores
from .guard import GuardParams, build_candidate_mask, refine_mask_with_keywords, safe_mask, shot_importance
from .selection import (
    SelectionResult,
    SimilarityIndex,
    TransitionScore,
    cut_bonus,
    duration_feasible,
    exhaustive_select,
    precompute_similarity,
    select,
    transition_score,
)
from .transport import (
    KL_SATURATION_VALUE,
    FinetuneLoss,
    SinkhornTarget,
    loss_finetune,
    loss_infonce,
    loss_kl,
    loss_sinkhorn,
    sinkhorn_project,
    soft_target_from_iou,
)
from .metrics import (
    MetricReport,
    ReportParams,
    TrailerPrediction,
    alignment_accuracy,
    beat_align,
    chamfer,
    fsd,
    full_report,
    kendall_tau,
    levenshtein,
    sdtw,
    set_metrics,
    soft_f1_at_k,
)
from .bundle import Bundle, load_bundle, save_bundle
from .cutlist import CutList, CutSegment, emit_cutlist, read_cutlist
from .pipeline import AlignmentOutcome, run_alignment
from .synth import SynthInstance, synth_instance

__version__ = "0.1.0"
