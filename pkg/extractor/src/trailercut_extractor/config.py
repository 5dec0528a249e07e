"""Extraction configuration."""

from __future__ import annotations

from dataclasses import dataclass, field

# Pinned encoder identifiers; recorded in every emitted manifest so a
# bundle is reproducible from its inputs alone.
VISUAL_ENCODER_ID = "toy-vis/gray16-hist-rp1024-v1"
AUDIO_ENCODER_ID = "toy-aud/logspec64-rp512-v1"
KEYWORD_ENCODER_ID = "toy-text/tri-hash-v1"


@dataclass(frozen=True)
class ExtractionConfig:
    movie_path: str
    audio_path: str
    output_path: str

    visual_encoder: str = VISUAL_ENCODER_ID
    audio_encoder: str = AUDIO_ENCODER_ID
    visual_dim: int = 1024  # raw visual embedding width
    audio_dim: int = 512  # raw audio embedding width
    shared_dim: int = 512  # both modalities are projected here for scoring
    projection_seed: int = 7
    expected_sample_rate: int = 48000  # rate used for generated test media

    frames_per_shot: int = 3  # uniform samples pooled into the shot feature

    # shot boundary detection
    shot_threshold: float = 0.35  # frame-descriptor distance that opens a cut
    min_shot_seconds: float = 0.5

    # bar segmentation: energy novelty by default, fixed grid as fallback
    bar_mode: str = "novelty"  # novelty | uniform
    bpm: float = 120.0
    beats_per_bar: int = 4
    min_bar_seconds: float = 1.0
    max_bar_seconds: float = 6.0

    keywords: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.frames_per_shot < 1:
            raise ValueError("frames_per_shot must be >= 1")
        if self.bar_mode not in ("novelty", "uniform"):
            raise ValueError("bar_mode must be 'novelty' or 'uniform'")
        if min(self.visual_dim, self.audio_dim, self.shared_dim) < 1:
            raise ValueError("embedding dims must be >= 1")
        if self.min_bar_seconds <= 0 or self.max_bar_seconds <= self.min_bar_seconds:
            raise ValueError("need 0 < min_bar_seconds < max_bar_seconds")


class ExtractionError(RuntimeError):
    """Failure with the pipeline stage named."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage!r}: {message}")
        self.stage = stage
