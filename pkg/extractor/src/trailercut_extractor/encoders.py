"""Deterministic stand-in encoders.

Real pretrained encoders are unavailable offline, so frames and bars
are embedded by fixed featurizers followed by seeded random
projections. Both modalities are then mapped into one shared space so
the downstream cosine scoring applies; every seed and identifier lands
in the bundle manifest.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .config import ExtractionError
from .video import DESCRIPTOR_DIM

_AUDIO_FEATURE_DIM = 64 + 2  # log-spaced spectrum bands + rms + zero crossings


def _projection(rng_key: tuple, rows: int, cols: int) -> np.ndarray:
    seed = [abs(hash_stable(part)) % (2 ** 31) for part in rng_key]
    rng = np.random.default_rng(seed)
    return rng.normal(scale=1.0 / np.sqrt(rows), size=(rows, cols))


def hash_stable(part) -> int:
    digest = hashlib.blake2b(str(part).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _unit(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    return rows / np.where(norms > 0, norms, 1.0)


class VisualEncoder:
    """Frame descriptor -> raw visual embedding."""

    def __init__(self, dim: int, seed: int):
        self.dim = dim
        self._matrix = _projection(("visual", seed), DESCRIPTOR_DIM, dim)

    def encode(self, descriptors: np.ndarray) -> np.ndarray:
        if descriptors.ndim != 2 or descriptors.shape[1] != DESCRIPTOR_DIM:
            raise ExtractionError("visual-encode",
                                  f"descriptor width {descriptors.shape} unexpected")
        return _unit(descriptors @ self._matrix)


class AudioEncoder:
    """Bar waveform -> raw audio embedding via log-spaced spectrum bands."""

    def __init__(self, dim: int, seed: int):
        self.dim = dim
        self._matrix = _projection(("audio", seed), _AUDIO_FEATURE_DIM, dim)

    def features(self, samples: np.ndarray, rate: int) -> np.ndarray:
        if samples.size < 2:
            raise ExtractionError("audio-encode", "bar too short to analyze")
        spectrum = np.abs(np.fft.rfft(samples))
        freqs = np.fft.rfftfreq(samples.size, d=1.0 / rate)
        edges = np.geomspace(30.0, max(rate / 2.0, 31.0), num=65)
        bands = np.zeros(64)
        for b in range(64):
            mask = (freqs >= edges[b]) & (freqs < edges[b + 1])
            if mask.any():
                bands[b] = spectrum[mask].mean()
        bands = np.log1p(bands)
        rms = np.sqrt(np.mean(samples * samples))
        zero_crossings = np.mean(np.abs(np.diff(np.signbit(samples).astype(np.float64))))
        return np.concatenate([bands, [rms, zero_crossings]])

    def encode(self, bar_waveforms: list[np.ndarray], rate: int) -> np.ndarray:
        feats = np.array([self.features(w, rate) for w in bar_waveforms])
        return _unit(feats @ self._matrix)


class SharedProjection:
    """Seeded linear maps from both raw spaces into one scoring space."""

    def __init__(self, visual_dim: int, audio_dim: int, shared_dim: int, seed: int):
        self.shared_dim = shared_dim
        self._visual = _projection(("shared-visual", seed), visual_dim, shared_dim)
        self._audio = _projection(("shared-audio", seed), audio_dim, shared_dim)

    def project_visual(self, rows: np.ndarray) -> np.ndarray:
        return _unit(rows @ self._visual)

    def project_audio(self, rows: np.ndarray) -> np.ndarray:
        return _unit(rows @ self._audio)


def embed_keywords(terms: list[str], dim: int) -> np.ndarray:
    """One unit-norm row per term from hashed character trigrams.

    Deterministic across processes and platforms. With stand-in
    encoders these share no geometry with shot features, so they only
    exercise the masking contract, not real semantics.
    """
    if not terms:
        raise ValueError("no keyword terms given")
    rows = np.zeros((len(terms), dim))
    for row, term in enumerate(terms):
        text = f"^{term.strip().lower()}$"
        for i in range(len(text) - 2):
            code = hash_stable(text[i:i + 3])
            index = code % dim
            sign = 1.0 if (code >> 33) & 1 else -1.0
            rows[row, index] += sign
        if not rows[row].any():
            rows[row, hash_stable(text) % dim] = 1.0
    return _unit(rows)
