"""WAV reading and bar segmentation.

Bar boundaries come from change points in the RMS envelope by default;
a fixed-tempo grid is available when the tempo is known or the material
has no usable dynamics.
"""

from __future__ import annotations

import wave

import numpy as np

from .config import ExtractionError


def read_wav(path: str) -> tuple[np.ndarray, int]:
    """Mono float64 samples in [-1, 1] plus the sample rate.

    Accepts 16- and 32-bit PCM; multichannel input is averaged down.
    """
    try:
        with wave.open(path, "rb") as handle:
            rate = handle.getframerate()
            channels = handle.getnchannels()
            width = handle.getsampwidth()
            raw = handle.readframes(handle.getnframes())
    except (OSError, wave.Error) as exc:
        raise ExtractionError("audio-decode", f"cannot read {path}: {exc}") from exc
    if width == 2:
        samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    elif width == 4:
        samples = np.frombuffer(raw, dtype="<i4").astype(np.float64) / 2147483648.0
    else:
        raise ExtractionError("audio-decode", f"unsupported sample width {width}")
    if channels > 1:
        samples = samples.reshape(-1, channels).mean(axis=1)
    if samples.size == 0:
        raise ExtractionError("audio-decode", f"no samples in {path}")
    return samples, rate


def rms_envelope(samples: np.ndarray, rate: int, hop_seconds: float = 0.05) -> np.ndarray:
    hop = max(1, int(round(hop_seconds * rate)))
    count = samples.size // hop
    if count == 0:
        return np.array([np.sqrt(np.mean(samples * samples))])
    trimmed = samples[:count * hop].reshape(count, hop)
    return np.sqrt(np.mean(trimmed * trimmed, axis=1))


def detect_bars_novelty(samples: np.ndarray, rate: int, min_bar: float,
                        max_bar: float, hop_seconds: float = 0.05) -> np.ndarray:
    """Bar boundaries (seconds) at jumps in the RMS envelope.

    Change points are envelope steps above one standard deviation of
    all steps, separated by at least ``min_bar``; stretches longer than
    ``max_bar`` are subdivided evenly so downstream span math stays in
    a musical range.
    """
    duration = samples.size / rate
    envelope = rms_envelope(samples, rate, hop_seconds)
    if envelope.size < 3:
        return np.array([0.0, duration])
    novelty = np.abs(np.diff(envelope))
    gate = novelty.mean() + novelty.std()
    times = [0.0]
    for idx, value in enumerate(novelty, start=1):
        t = idx * hop_seconds
        if value > gate and t - times[-1] >= min_bar and duration - t >= min_bar:
            times.append(t)
    times.append(duration)

    refined = [0.0]
    for left, right in zip(times, times[1:]):
        span = right - left
        if span > max_bar:
            pieces = int(np.ceil(span / max_bar))
            for p in range(1, pieces):
                refined.append(left + span * p / pieces)
        refined.append(right)
    return np.array(refined)


def uniform_bars(duration: float, bpm: float, beats_per_bar: int) -> np.ndarray:
    """Fixed-tempo grid; a trailing remainder of at most half a bar is
    merged into the previous one."""
    if duration <= 0 or bpm <= 0 or beats_per_bar < 1:
        raise ExtractionError("bar-segmentation", "bad uniform-grid parameters")
    bar_len = beats_per_bar * 60.0 / bpm
    full = int(np.floor(duration / bar_len + 1e-9))
    remainder = duration - full * bar_len
    bounds = [k * bar_len for k in range(full + 1)]
    if remainder > 1e-9:
        if full == 0 or remainder > 0.5 * bar_len + 1e-9:
            bounds.append(duration)
        else:
            bounds[-1] = duration
    return np.array(bounds)
