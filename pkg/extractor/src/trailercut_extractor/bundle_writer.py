"""Writer for the feature-bundle directory format.

Implements the on-disk contract directly (JSON manifest plus raw
little-endian float32 payloads, atomic writes) rather than importing
the consumer package, so the format itself stays the only coupling
between the two components.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def _atomic_write(path: Path, data: bytes):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _write_f32(path: Path, arr: np.ndarray):
    _atomic_write(path, np.ascontiguousarray(arr, dtype="<f4").tobytes())


def write_bundle(path, *, movie_features: np.ndarray, shot_durations: np.ndarray,
                 shot_start_times: np.ndarray, movie_duration: float,
                 bar_boundaries: np.ndarray, music_features: np.ndarray,
                 frame_features: list[np.ndarray], audio_samples: np.ndarray,
                 sample_rate: int, keyword_embeddings: np.ndarray | None,
                 meta: dict) -> Path:
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    I, d_v = movie_features.shape
    J = len(bar_boundaries) - 1

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "movie": {
            "shot_count": I,
            "feature_dim": d_v,
            "durations": [float(x) for x in shot_durations],
            "start_times": [float(x) for x in shot_start_times],
            "movie_duration": float(movie_duration),
            "files": {"features": "movie_features.f32"},
        },
        "music": {
            "bar_count": J,
            "feature_dim": int(music_features.shape[1]),
            "bar_boundaries": [float(x) for x in bar_boundaries],
            "files": {"features": "music_features.f32"},
        },
        "arrays": {
            "frame_features": {
                "file": "frame_features.f32",
                "frame_counts": [int(f.shape[0]) for f in frame_features],
            },
            "audio_samples": {
                "file": "audio_samples.f32",
                "sample_count": int(audio_samples.size),
                "sample_rate": int(sample_rate),
            },
        },
        "meta": meta,
    }
    _write_f32(directory / "movie_features.f32", movie_features)
    _write_f32(directory / "music_features.f32", music_features)
    _write_f32(directory / "frame_features.f32", np.concatenate(frame_features, axis=0))
    _write_f32(directory / "audio_samples.f32", audio_samples)
    if keyword_embeddings is not None:
        manifest["arrays"]["keyword_embeddings"] = {
            "file": "keyword_embeddings.f32",
            "count": int(keyword_embeddings.shape[0]),
        }
        _write_f32(directory / "keyword_embeddings.f32", keyword_embeddings)

    payload = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    _atomic_write(directory / "manifest.json", payload.encode("utf-8"))
    return directory
