"""Per-bar energy, per-shot visual dynamics, and the uniform bar grid.

Bar segmentation itself is ingested from upstream tooling; this module
only derives scalar features from raw samples and frame embeddings, and
provides a bpm-based grid as an explicit fallback when no change-point
boundaries are available.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AudioSamples:
    """Mono audio with bar boundaries given as sample offsets."""

    samples: np.ndarray  # values in [-1, 1]
    sample_rate: int  # Hz
    bar_boundaries: np.ndarray  # J + 1 non-decreasing sample offsets

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        bounds = np.asarray(self.bar_boundaries, dtype=np.int64)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "bar_boundaries", bounds)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))
        if samples.ndim != 1:
            raise ValueError("samples must be a 1-D vector (mono)")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if bounds.ndim != 1 or bounds.size < 2:
            raise ValueError("bar_boundaries needs at least one bar (two offsets)")
        if bounds[0] < 0 or bounds[-1] > samples.size:
            raise ValueError("bar_boundaries outside the sample range")
        if np.any(np.diff(bounds) < 0):
            raise ValueError("bar_boundaries must be non-decreasing")

    @property
    def bar_count(self) -> int:
        return self.bar_boundaries.size - 1


def compute_bar_energy(audio: AudioSamples) -> np.ndarray:
    """Normalized RMS amplitude per bar.

    Each bar's RMS is divided by the maximum RMS across bars, so values
    lie in [0, 1] and an all-silent track yields all zeros.  Scaling the
    whole signal by a positive constant does not change the result.
    """
    bounds = audio.bar_boundaries
    if np.any(np.diff(bounds) == 0):
        j = int(np.where(np.diff(bounds) == 0)[0][0])
        raise ValueError(f"degenerate bar boundaries: bar {j + 1} is empty")
    rms = np.empty(audio.bar_count)
    for j in range(audio.bar_count):
        seg = audio.samples[bounds[j]:bounds[j + 1]]
        rms[j] = np.sqrt(np.mean(seg * seg))
    peak = rms.max()
    if peak > 0:
        rms /= peak
    return rms


def compute_shot_dynamics(frame_features: list[np.ndarray]) -> np.ndarray:
    """Motion proxy per shot from consecutive frame-embedding differences.

    The raw value is the mean Euclidean norm of consecutive frame feature
    differences (0 for single-frame shots), then max-normalized across
    shots so output lies in [0, 1].  The mean keeps long shots from
    inflating their dynamics.
    """
    if not frame_features:
        raise ValueError("no shots given")
    raw = np.empty(len(frame_features))
    for i, frames in enumerate(frame_features):
        frames = np.asarray(frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[0] < 1:
            raise ValueError(f"shot {i + 1} has no frame features")
        if frames.shape[0] == 1:
            raw[i] = 0.0
        else:
            raw[i] = np.mean(np.linalg.norm(np.diff(frames, axis=0), axis=1))
    peak = raw.max()
    if peak > 0:
        raw /= peak
    return raw


def uniform_bar_grid(total_duration: float, bpm: float, beats_per_bar: int = 4) -> np.ndarray:
    """Bar boundaries in seconds on a fixed-tempo grid.

    Boundaries fall at multiples of ``beats_per_bar * 60 / bpm``.  A
    trailing partial bar no longer than half a bar is merged into the
    previous one (per the worked convention, a remainder of exactly half
    a bar merges); a longer remainder becomes its own final bar.
    """
    if total_duration <= 0:
        raise ValueError("total_duration must be positive")
    if bpm <= 0:
        raise ValueError("bpm must be positive")
    if beats_per_bar < 1:
        raise ValueError("beats_per_bar must be >= 1")
    bar_len = beats_per_bar * 60.0 / bpm
    n_full = int(np.floor(total_duration / bar_len + 1e-9))
    remainder = total_duration - n_full * bar_len
    bounds = [k * bar_len for k in range(n_full + 1)]
    if remainder > 1e-9:
        if n_full == 0 or remainder > 0.5 * bar_len + 1e-9:
            bounds.append(total_duration)
        else:
            bounds[-1] = total_duration
    if len(bounds) < 2:
        raise ValueError("grid produced zero bars")
    return np.array(bounds)
