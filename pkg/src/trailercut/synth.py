"""Deterministic synthetic instances for tests and benchmarks.

All arrays are rounded to float32 at generation time so an instance is
bit-identical whether used in memory or round-tripped through a bundle
directory.  Planted instances carry a known-optimal alignment: planted
bar-shot pairs get a large cosine margin, bar energies favor the
planted span structure, and the construction is verified by running
the real pipeline with an effectively exhaustive beam, retrying with a
fresh deterministic substream on the rare failure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundle import Bundle, save_bundle
from .core import BarTrack, ElasticAlignment, EngineParams, ShotTable
from .pipeline import run_alignment

# Verification beam settings: wide enough to be exhaustive on planted-size
# instances.
_VERIFY_BEAM = 1000
_MAX_ATTEMPTS = 32
_PLANT_SPAN_MAX = 3
_PLANT_VERIFY_MAX_BARS = 8
_PLANT_VERIFY_MAX_SHOTS = 10


@dataclass(frozen=True)
class SynthInstance:
    shots: ShotTable
    bars: BarTrack
    bar_boundaries: np.ndarray
    music_features: np.ndarray
    frame_features: list[np.ndarray]
    energy: np.ndarray
    ground_truth: ElasticAlignment | None
    meta: dict

    def to_bundle(self) -> Bundle:
        return Bundle(shots=self.shots, bars=self.bars,
                      bar_boundaries=self.bar_boundaries,
                      frame_features=self.frame_features,
                      ground_truth=self.ground_truth,
                      energy_source="override", meta=self.meta)

    def save(self, path):
        return save_bundle(
            path, self.shots, self.bar_boundaries,
            music_features=self.music_features,
            frame_features=self.frame_features,
            energy_override=self.energy,
            ground_truth=self.ground_truth,
            meta=self.meta)


def _f32(arr) -> np.ndarray:
    return np.asarray(arr, dtype="<f4")


def _unit_rows_f32(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    mat = rng.normal(size=(count, dim))
    mat /= np.linalg.norm(mat, axis=1, keepdims=True)
    return _f32(mat)


def _random_spans(rng: np.random.Generator, total_bars: int) -> list[int]:
    spans = []
    remaining = total_bars
    while remaining:
        k = int(rng.integers(1, min(_PLANT_SPAN_MAX, remaining) + 1))
        spans.append(k)
        remaining -= k
    return spans


def _shot_layout(rng: np.random.Generator, count: int, durations: np.ndarray):
    """Start times keeping every shot inside the guard-safe middle region."""
    gaps = rng.uniform(1.0, 3.0, size=count)
    occupied = float(durations.sum() + gaps.sum())
    movie_duration = occupied / 0.75
    offset = 0.04 * movie_duration
    starts = offset + np.concatenate(([0.0], np.cumsum(durations + gaps)[:-1]))
    return starts, movie_duration


def synth_instance(seed: int, bars: int = 8, shots: int = 12, d_v: int = 64,
                   d_a: int | None = None, planted: bool = False,
                   frames_per_shot: int = 3,
                   params: EngineParams = EngineParams()) -> SynthInstance:
    """Generate a pseudo-random instance; deterministic in ``seed``."""
    if bars < 1 or shots < 1 or d_v < 1 or frames_per_shot < 1:
        raise ValueError("bars, shots, d_v, and frames_per_shot must be >= 1")
    if d_a is None:
        d_a = d_v
    if planted and d_a != d_v:
        raise ValueError("planted instances need d_a == d_v so cosine scoring applies")
    if planted and shots < _count_min_shots(bars):
        raise ValueError("not enough shots to plant an alignment")

    last_error = "no attempts made"
    for attempt in range(_MAX_ATTEMPTS):
        rng = np.random.default_rng([attempt, seed, bars, shots])
        instance = (_build_planted(rng, seed, attempt, bars, shots, d_v,
                                   frames_per_shot)
                    if planted else
                    _build_unplanted(rng, seed, attempt, bars, shots, d_v, d_a,
                                     frames_per_shot))
        if not planted:
            return instance
        ok, last_error = _verify_planted(instance, params)
        if ok:
            return instance
    raise RuntimeError(
        f"could not plant a verifiable optimum in {_MAX_ATTEMPTS} attempts: {last_error}")


def _count_min_shots(bars: int) -> int:
    # worst case every bar is its own segment
    return bars


def _bar_boundaries(rng: np.random.Generator, bars: int) -> np.ndarray:
    durations = rng.uniform(1.8, 2.2, size=bars)
    return np.concatenate(([0.0], np.cumsum(durations)))


def _repelling_geometry(rng: np.random.Generator, count: int, dim: int,
                        bias: float = 0.45) -> tuple[np.ndarray, np.ndarray]:
    """Shot features and matching audio anchors with a planted margin.

    Shots sit on a regular simplex (pairwise cosine -1/(count-1)) with a
    shared bias component opposite to the audio side, which shifts every
    bar-shot cosine down uniformly.  A bar's anchor then scores its
    planted shot near +0.6 and every other shot clearly negative, so any
    alignment that adds segments or swaps shots loses score.  Everything
    is finally passed through one random rotation; inner products are
    unchanged.
    """
    if dim < count + 1:
        raise ValueError(
            f"planted instances need d_v >= shots + 1 (got d_v={dim}, shots={count})")
    if count == 1:
        block = np.ones((1, 1))
    else:
        centered = np.eye(count) - 1.0 / count
        block = centered / np.linalg.norm(centered, axis=1, keepdims=True)
    scale = np.sqrt(1.0 - bias * bias)
    feats = np.zeros((count, dim))
    feats[:, :count] = scale * block
    feats[:, count] = -bias
    anchors = np.zeros((count, dim))
    anchors[:, :count] = scale * block
    anchors[:, count] = bias
    rotation, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    return feats @ rotation.T, anchors @ rotation.T


def _build_unplanted(rng, seed, attempt, bars, shots, d_v, d_a, frames_per_shot):
    bounds = _bar_boundaries(rng, bars)
    shot_durations = rng.uniform(4.0, 12.0, size=shots)
    starts, movie_duration = _shot_layout(rng, shots, shot_durations)
    features = _unit_rows_f32(rng, shots, d_v)
    base = np.asarray(features, dtype=np.float64)
    frame_noise = rng.normal(scale=0.3, size=(shots, frames_per_shot, d_v))
    frame_features = [_f32(base[i] + frame_noise[i]) for i in range(shots)]
    music_features = _unit_rows_f32(rng, bars, d_a)
    energy = _f32(rng.uniform(0.0, 1.0, size=bars))
    table = ShotTable(features=features, durations=shot_durations,
                      start_times=starts, movie_duration=movie_duration)
    track = BarTrack(durations=np.diff(bounds), energy=energy,
                     features=music_features)
    meta = {"generator": "trailercut.synth", "seed": int(seed),
            "attempt": attempt, "planted": False}
    return SynthInstance(shots=table, bars=track, bar_boundaries=bounds,
                         music_features=music_features,
                         frame_features=frame_features, energy=energy,
                         ground_truth=None, meta=meta)


def _build_planted(rng, seed, attempt, bars, shots, d_v, frames_per_shot):
    bounds = _bar_boundaries(rng, bars)
    bar_durations = np.diff(bounds)

    spans = _random_spans(rng, bars)
    chosen = rng.choice(shots, size=len(spans), replace=False)
    segments = []
    cursor = 1
    for shot_idx, span in zip(chosen, spans):
        segments.append((int(shot_idx) + 1, cursor))
        cursor += span
    planted = ElasticAlignment(segments=tuple(segments))

    base, audio_anchor = _repelling_geometry(rng, shots, d_v)
    features = _f32(base)
    base = np.asarray(features, dtype=np.float64)

    shot_for_bar = planted.shot_for_bar(bars)
    audio = np.empty((bars, d_v))
    for j, shot1 in enumerate(shot_for_bar):
        audio[j] = audio_anchor[shot1 - 1] + rng.normal(scale=0.02, size=d_v)
    audio /= np.linalg.norm(audio, axis=1, keepdims=True)
    music_features = _f32(audio)

    energy = np.where(np.repeat(spans, spans) == 1, 0.95, 0.05)
    energy = _f32(energy)

    # ample durations so every planted span is duration-feasible
    shot_durations = 40.0 + rng.uniform(0.0, 10.0, size=shots)
    starts, movie_duration = _shot_layout(rng, shots, shot_durations)
    frame_features = [_f32(np.tile(base[i], (frames_per_shot, 1))) for i in range(shots)]

    table = ShotTable(features=features, durations=shot_durations,
                      start_times=starts, movie_duration=movie_duration)
    track = BarTrack(durations=bar_durations, energy=energy,
                     features=music_features)
    meta = {"generator": "trailercut.synth", "seed": int(seed),
            "attempt": attempt, "planted": True}
    return SynthInstance(shots=table, bars=track, bar_boundaries=bounds,
                         music_features=music_features,
                         frame_features=frame_features, energy=energy,
                         ground_truth=planted, meta=meta)


def _verify_planted(instance: SynthInstance, params: EngineParams) -> tuple[bool, str]:
    """Check the planted alignment is what the pipeline actually returns.

    Only feasible at small sizes; larger planted instances are accepted
    on construction alone.
    """
    J, I = instance.bars.count, instance.shots.count
    if J > _PLANT_VERIFY_MAX_BARS or I > _PLANT_VERIFY_MAX_SHOTS:
        return True, "instance beyond verification caps; accepted unverified"
    wide = params.replace(beam_width=_VERIFY_BEAM, top_m=I)
    outcome = run_alignment(instance.to_bundle(), wide)
    got = outcome.selection.alignment.segments
    expected = instance.ground_truth.segments
    if got == expected:
        return True, "verified"
    return False, f"pipeline returned {got}, planted {expected}"
