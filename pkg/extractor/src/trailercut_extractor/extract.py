"""End-to-end extraction: movie/music pair to a feature bundle."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .audio import detect_bars_novelty, read_wav, uniform_bars
from .bundle_writer import write_bundle
from .config import KEYWORD_ENCODER_ID, ExtractionConfig, ExtractionError
from .encoders import AudioEncoder, SharedProjection, VisualEncoder, embed_keywords
from .video import detect_shots, sample_frame_indices, scan_video


def extract(config: ExtractionConfig) -> Path:
    """Run the full adapter; returns the bundle directory path."""
    if not Path(config.movie_path).is_file():
        raise ExtractionError("video-decode", f"movie file missing: {config.movie_path}")
    if not Path(config.audio_path).is_file():
        raise ExtractionError("audio-decode", f"audio file missing: {config.audio_path}")

    scan = scan_video(config.movie_path)
    shots = detect_shots(scan, config.shot_threshold, config.min_shot_seconds)
    if not shots:
        raise ExtractionError("shot-detection", "no shots found")

    samples, rate = read_wav(config.audio_path)
    duration = samples.size / rate
    if config.bar_mode == "uniform":
        boundaries = uniform_bars(duration, config.bpm, config.beats_per_bar)
    else:
        boundaries = detect_bars_novelty(samples, rate, config.min_bar_seconds,
                                         config.max_bar_seconds)
    if len(boundaries) < 2:
        raise ExtractionError("bar-segmentation", "no bars found")

    visual = VisualEncoder(config.visual_dim, config.projection_seed)
    audio = AudioEncoder(config.audio_dim, config.projection_seed)
    shared = SharedProjection(config.visual_dim, config.audio_dim,
                              config.shared_dim, config.projection_seed)

    frame_features: list[np.ndarray] = []
    shot_rows = []
    for start, end in shots:
        indices = sample_frame_indices(start, end, config.frames_per_shot)
        raw = visual.encode(scan.descriptors[indices])
        projected = shared.project_visual(raw).astype("<f4")
        frame_features.append(projected)
        pooled = projected.astype(np.float64).mean(axis=0)
        norm = np.linalg.norm(pooled)
        shot_rows.append(pooled / norm if norm > 0 else pooled)
    movie_features = np.array(shot_rows, dtype="<f4")

    waveforms = []
    sample_bounds = np.rint(boundaries * rate).astype(np.int64)
    for left, right in zip(sample_bounds, sample_bounds[1:]):
        waveforms.append(samples[left:right])
    raw_audio = audio.encode(waveforms, rate)
    music_features = shared.project_audio(raw_audio).astype("<f4")

    keyword_rows = None
    if config.keywords:
        keyword_rows = embed_keywords(list(config.keywords), config.shared_dim).astype("<f4")

    fps = scan.fps
    shot_starts = np.array([start / fps for start, _ in shots])
    shot_durations = np.array([(end - start) / fps for start, end in shots])

    meta = {
        "generator": "trailercut-extractor",
        "visual_encoder": config.visual_encoder,
        "audio_encoder": config.audio_encoder,
        "keyword_encoder": KEYWORD_ENCODER_ID if config.keywords else None,
        "raw_visual_dim": config.visual_dim,
        "raw_audio_dim": config.audio_dim,
        "shared_dim": config.shared_dim,
        "projection_seed": config.projection_seed,
        "frames_per_shot": config.frames_per_shot,
        "frame_pooling": "mean",
        "bar_mode": config.bar_mode,
        "shot_threshold": config.shot_threshold,
        "source_fps": fps,
        "source_sample_rate": rate,
        "movie_file": Path(config.movie_path).name,
        "audio_file": Path(config.audio_path).name,
    }
    return write_bundle(
        config.output_path,
        movie_features=movie_features,
        shot_durations=shot_durations,
        shot_start_times=shot_starts,
        movie_duration=scan.duration,
        bar_boundaries=boundaries,
        music_features=music_features,
        frame_features=frame_features,
        audio_samples=samples.astype("<f4"),
        sample_rate=rate,
        keyword_embeddings=keyword_rows,
        meta=meta,
    )
