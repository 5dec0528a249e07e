"""Shared builders for randomized engine instances."""

from __future__ import annotations

import numpy as np
import pytest

from trailercut.core import EXCLUDED, BarTrack, EngineParams, ShotTable


def random_instance(seed: int, max_bars: int = 6, max_shots: int = 8,
                    k_max: int = 3, with_exclusions: bool = False,
                    feature_dim: int = 16):
    """A small random instance: (scores, bars, shots, params).

    Durations are drawn wide enough that multi-bar spans are sometimes
    feasible and sometimes not; exclusions, when requested, always leave
    at least one admissible shot per bar.
    """
    rng = np.random.default_rng(seed)
    J = int(rng.integers(1, max_bars + 1))
    I = int(rng.integers(max(2, J // 2), max_shots + 1))
    S = rng.normal(scale=1.0, size=(J, I))
    if with_exclusions:
        drop = rng.random(size=(J, I)) < 0.25
        keep_col = int(rng.integers(0, I))
        drop[:, keep_col] = False
        S = np.where(drop, EXCLUDED, S)
    bar_durations = rng.uniform(1.0, 3.0, size=J)
    energy = rng.uniform(0.0, 1.0, size=J)
    bars = BarTrack(durations=bar_durations, energy=energy)

    shot_durations = rng.uniform(2.0, 9.0, size=I)
    gaps = rng.uniform(0.5, 2.0, size=I)
    starts = np.concatenate(([1.0], 1.0 + np.cumsum(shot_durations + gaps)[:-1]))
    movie_duration = float(starts[-1] + shot_durations[-1] + 5.0)
    features = rng.normal(size=(I, feature_dim))
    features /= np.linalg.norm(features, axis=1, keepdims=True)
    shots = ShotTable(features=features, durations=shot_durations,
                      start_times=starts, movie_duration=movie_duration)

    params = EngineParams(k_max=k_max,
                          lambda_smooth=float(rng.uniform(0.0, 0.4)),
                          lambda_cut=float(rng.uniform(0.0, 0.8)))
    return S, bars, shots, params


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
