"""Feature-bundle directory format: JSON manifest plus raw f32 arrays.

A bundle is a directory with a ``manifest.json`` and one binary file
per large array.  Binaries are raw little-endian 32-bit floats,
row-major, with byte length exactly ``product(dims) * 4``; dimensions
live only in the manifest.  Small per-item scalars (durations,
boundaries, segment lists) stay in the manifest as JSON so bundles diff
cleanly.  Writes are atomic (write-then-rename) and loading what was
saved reproduces every array bit-exactly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import BarTrack, ElasticAlignment, ShotTable, validate_alignment
from .features import AudioSamples, compute_bar_energy

SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class Bundle:
    """In-memory view of a loaded feature bundle."""

    shots: ShotTable
    bars: BarTrack
    bar_boundaries: np.ndarray  # seconds, length J + 1
    frame_features: list[np.ndarray] | None = None
    audio: AudioSamples | None = None
    keyword_embeddings: np.ndarray | None = None
    score_matrix: np.ndarray | None = None
    ground_truth: ElasticAlignment | None = None
    energy_source: str = "override"  # override | audio | default_ones
    meta: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()


def _atomic_write_bytes(path: Path, data: bytes):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _atomic_write_text(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def write_json(path, payload: dict):
    _atomic_write_text(Path(path), json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_f32(path: Path, arr: np.ndarray):
    _atomic_write_bytes(path, np.ascontiguousarray(arr, dtype="<f4").tobytes())


def _read_f32(directory: Path, name: str, shape: tuple[int, ...]) -> np.ndarray:
    path = directory / name
    if not path.is_file():
        raise ValueError(f"array {name!r}: file missing from bundle")
    data = path.read_bytes()
    expected = int(np.prod(shape)) * 4
    if len(data) != expected:
        raise ValueError(
            f"array {name!r}: expected {expected} bytes for shape {shape}, "
            f"found {len(data)}")
    return np.frombuffer(data, dtype="<f4").reshape(shape)


def save_bundle(path, shots: ShotTable, bar_boundaries, *,
                music_features: np.ndarray | None = None,
                frame_features: list[np.ndarray] | None = None,
                audio_samples: np.ndarray | None = None,
                sample_rate: int | None = None,
                keyword_embeddings: np.ndarray | None = None,
                score_matrix: np.ndarray | None = None,
                energy_override: np.ndarray | None = None,
                ground_truth: ElasticAlignment | None = None,
                meta: dict | None = None) -> Path:
    """Write a bundle directory; returns its path.

    Arrays are down-converted to float32 on write, so feed float32 data
    when bit-exact round trips matter.
    """
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    bounds = np.asarray(bar_boundaries, dtype=np.float64)
    if bounds.ndim != 1 or bounds.size < 2:
        raise ValueError("bar_boundaries must hold at least two offsets")
    if np.any(np.diff(bounds) <= 0):
        raise ValueError("bar_boundaries must be strictly increasing")
    J = bounds.size - 1

    manifest: dict = {
        "schema_version": SCHEMA_VERSION,
        "movie": {
            "shot_count": shots.count,
            "feature_dim": shots.feature_dim,
            "durations": shots.durations.tolist(),
            "start_times": shots.start_times.tolist(),
            "movie_duration": shots.movie_duration,
            "files": {"features": "movie_features.f32"},
        },
        "music": {
            "bar_count": J,
            "bar_boundaries": bounds.tolist(),
            "files": {},
        },
        "arrays": {},
    }
    _write_f32(directory / "movie_features.f32", shots.features)

    if music_features is not None:
        music = np.asarray(music_features)
        if music.ndim != 2 or music.shape[0] != J:
            raise ValueError("music_features must have one row per bar")
        manifest["music"]["feature_dim"] = int(music.shape[1])
        manifest["music"]["files"]["features"] = "music_features.f32"
        _write_f32(directory / "music_features.f32", music)

    arrays = manifest["arrays"]
    if frame_features is not None:
        if len(frame_features) != shots.count:
            raise ValueError("frame_features must have one entry per shot")
        counts = []
        blocks = []
        for i, frames in enumerate(frame_features):
            frames = np.asarray(frames)
            if frames.ndim != 2 or frames.shape[1] != shots.feature_dim:
                raise ValueError(f"frame_features for shot {i + 1} must be n x d_v")
            counts.append(int(frames.shape[0]))
            blocks.append(frames)
        arrays["frame_features"] = {"file": "frame_features.f32", "frame_counts": counts}
        _write_f32(directory / "frame_features.f32", np.concatenate(blocks, axis=0))
    if audio_samples is not None:
        if sample_rate is None or sample_rate <= 0:
            raise ValueError("audio_samples requires a positive sample_rate")
        samples = np.asarray(audio_samples)
        if samples.ndim != 1:
            raise ValueError("audio_samples must be a mono vector")
        arrays["audio_samples"] = {
            "file": "audio_samples.f32",
            "sample_count": int(samples.size),
            "sample_rate": int(sample_rate),
        }
        _write_f32(directory / "audio_samples.f32", samples)
    if keyword_embeddings is not None:
        kw = np.asarray(keyword_embeddings)
        if kw.ndim != 2 or kw.shape[1] != shots.feature_dim:
            raise ValueError("keyword_embeddings must be Q x d_v")
        arrays["keyword_embeddings"] = {"file": "keyword_embeddings.f32",
                                        "count": int(kw.shape[0])}
        _write_f32(directory / "keyword_embeddings.f32", kw)
    if score_matrix is not None:
        S = np.asarray(score_matrix)
        if S.shape != (J, shots.count):
            raise ValueError("score_matrix must be bar_count x shot_count")
        arrays["score_matrix"] = {"file": "score_matrix.f32"}
        _write_f32(directory / "score_matrix.f32", S)
    if energy_override is not None:
        e = np.asarray(energy_override)
        if e.shape != (J,):
            raise ValueError("energy_override must have one value per bar")
        arrays["energy_override"] = {"file": "energy_override.f32"}
        _write_f32(directory / "energy_override.f32", e)
    if ground_truth is not None:
        problems = validate_alignment(ground_truth, J, shots.count)
        if problems:
            raise ValueError(f"ground_truth alignment invalid: {problems[0]}")
        manifest["ground_truth"] = {"segments": [list(s) for s in ground_truth.segments]}
    if meta:
        manifest["meta"] = meta

    write_json(directory / MANIFEST_NAME, manifest)
    return directory


def load_bundle(path) -> Bundle:
    """Read and validate a bundle directory into domain objects.

    Energy resolution order: explicit override, then RMS of bundled
    audio, then all-ones with a warning note (silent zeros would
    suppress every cut bonus).
    """
    directory = Path(path)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        raise ValueError(f"no {MANIFEST_NAME} in {directory}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"manifest is not valid JSON: {exc}") from exc
    version = manifest.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unknown schema_version {version!r} (supported: {SCHEMA_VERSION})")

    movie = manifest["movie"]
    music = manifest["music"]
    I = int(movie["shot_count"])
    d_v = int(movie["feature_dim"])
    J = int(music["bar_count"])
    bounds = np.asarray(music["bar_boundaries"], dtype=np.float64)
    if bounds.shape != (J + 1,):
        raise ValueError("bar_boundaries must hold bar_count + 1 offsets")
    if np.any(np.diff(bounds) <= 0):
        raise ValueError("bar_boundaries must be strictly increasing")

    movie_feats = _read_f32(directory, movie["files"]["features"], (I, d_v))
    shots = ShotTable(features=movie_feats,
                      durations=movie["durations"],
                      start_times=movie["start_times"],
                      movie_duration=movie["movie_duration"])

    music_feats = None
    if "features" in music.get("files", {}):
        d_a = int(music["feature_dim"])
        music_feats = _read_f32(directory, music["files"]["features"], (J, d_a))

    arrays = manifest.get("arrays", {})
    notes: list[str] = []

    frame_features = None
    if "frame_features" in arrays:
        entry = arrays["frame_features"]
        counts = [int(c) for c in entry["frame_counts"]]
        if len(counts) != I:
            raise ValueError("array 'frame_features': frame_counts must have one entry per shot")
        if min(counts, default=0) < 1:
            raise ValueError("array 'frame_features': every shot needs at least one frame")
        flat = _read_f32(directory, entry["file"], (sum(counts), d_v))
        frame_features = []
        offset = 0
        for c in counts:
            frame_features.append(flat[offset:offset + c])
            offset += c

    audio = None
    if "audio_samples" in arrays:
        entry = arrays["audio_samples"]
        samples = _read_f32(directory, entry["file"], (int(entry["sample_count"]),))
        rate = int(entry["sample_rate"])
        offsets = np.rint(bounds * rate).astype(np.int64)
        offsets = np.clip(offsets, 0, samples.size)
        audio = AudioSamples(samples=samples, sample_rate=rate, bar_boundaries=offsets)

    keyword_embeddings = None
    if "keyword_embeddings" in arrays:
        entry = arrays["keyword_embeddings"]
        keyword_embeddings = _read_f32(directory, entry["file"], (int(entry["count"]), d_v))

    score_matrix = None
    if "score_matrix" in arrays:
        score_matrix = _read_f32(directory, arrays["score_matrix"]["file"], (J, I))

    if "energy_override" in arrays:
        energy = _read_f32(directory, arrays["energy_override"]["file"], (J,)).astype(np.float64)
        energy_source = "override"
    elif audio is not None:
        energy = compute_bar_energy(audio)
        energy_source = "audio"
    else:
        energy = np.ones(J)
        energy_source = "default_ones"
        notes.append("no energy override or audio in bundle; energy defaults to "
                     "all-ones (maximum cut propensity)")

    bars = BarTrack(durations=np.diff(bounds), energy=energy, features=music_feats)

    ground_truth = None
    if "ground_truth" in manifest:
        segments = tuple((int(c), int(r)) for c, r in manifest["ground_truth"]["segments"])
        ground_truth = ElasticAlignment(segments=segments)
        problems = validate_alignment(ground_truth, J, I)
        if problems:
            raise ValueError(f"ground_truth alignment invalid: {problems[0]}")

    return Bundle(shots=shots, bars=bars, bar_boundaries=bounds,
                  frame_features=frame_features, audio=audio,
                  keyword_embeddings=keyword_embeddings, score_matrix=score_matrix,
                  ground_truth=ground_truth, energy_source=energy_source,
                  meta=manifest.get("meta", {}), notes=tuple(notes))
