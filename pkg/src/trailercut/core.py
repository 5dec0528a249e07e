"""Domain types shared across the alignment engine.

All shot and bar indices are 1-based in public data structures, matching
the cut-list and bundle formats.  Zero-based offsets only appear inside
numerical kernels.  Every type is immutable after construction; the
backing numpy arrays are locked read-only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Sentinel for hard-excluded score entries.  The most negative finite
# float keeps max/argmax total and comparable, unlike NaN or -inf.
EXCLUDED = float(np.finfo(np.float64).min)


class InfeasibleError(RuntimeError):
    """Raised when no valid alignment exists for an instance."""


def _locked(values, dtype=np.float64, ndim=None, name="array") -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ShotTable:
    """Per-shot data for the movie side of an alignment instance."""

    features: np.ndarray  # I x d_v visual embeddings
    durations: np.ndarray  # seconds
    start_times: np.ndarray  # seconds, offset into the movie
    movie_duration: float  # seconds

    def __post_init__(self):
        object.__setattr__(self, "features", _locked(self.features, ndim=2, name="features"))
        object.__setattr__(self, "durations", _locked(self.durations, ndim=1, name="durations"))
        object.__setattr__(self, "start_times", _locked(self.start_times, ndim=1, name="start_times"))
        object.__setattr__(self, "movie_duration", float(self.movie_duration))
        n = self.features.shape[0]
        if n < 1:
            raise ValueError("ShotTable needs at least one shot")
        if self.durations.shape != (n,) or self.start_times.shape != (n,):
            raise ValueError("durations/start_times length must match shot count")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("shot features contain NaN or Inf")
        if not np.all(self.durations > 0):
            raise ValueError("all shot durations must be strictly positive")
        if np.any(self.start_times < 0) or np.any(np.diff(self.start_times) < 0):
            raise ValueError("start_times must be non-negative and non-decreasing")
        if self.movie_duration <= 0:
            raise ValueError("movie_duration must be positive")
        if np.any(self.start_times + self.durations > self.movie_duration + 1e-6):
            raise ValueError("a shot extends past the end of the movie")

    @property
    def count(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def end_times(self) -> np.ndarray:
        return self.start_times + self.durations


@dataclass(frozen=True)
class BarTrack:
    """Per-bar data for the music side of an alignment instance.

    ``features`` may be None for engine-only runs where a raw score
    matrix is supplied instead of audio embeddings.
    """

    durations: np.ndarray  # seconds
    energy: np.ndarray  # normalized RMS, in [0, 1]
    features: np.ndarray | None = None  # J x d_a audio embeddings

    def __post_init__(self):
        object.__setattr__(self, "durations", _locked(self.durations, ndim=1, name="durations"))
        object.__setattr__(self, "energy", _locked(self.energy, ndim=1, name="energy"))
        if self.features is not None:
            object.__setattr__(self, "features", _locked(self.features, ndim=2, name="features"))
        n = self.durations.shape[0]
        if n < 1:
            raise ValueError("BarTrack needs at least one bar")
        if self.energy.shape != (n,):
            raise ValueError("energy length must match bar count")
        if not np.all(self.durations > 0):
            raise ValueError("all bar durations must be strictly positive")
        if np.any(self.energy < 0) or np.any(self.energy > 1):
            raise ValueError("energy values must lie in [0, 1]")
        if self.features is not None:
            if self.features.shape[0] != n:
                raise ValueError("feature row count must match bar count")
            if not np.all(np.isfinite(self.features)):
                raise ValueError("bar features contain NaN or Inf")

    @property
    def count(self) -> int:
        return self.durations.shape[0]


@dataclass(frozen=True)
class CandidateMask:
    """Bar x shot admissibility, broadcast from the per-shot safe mask."""

    values: np.ndarray  # J x I, entries in {0, 1}
    safe_mask: np.ndarray  # length I, entries in [0, 1]

    def __post_init__(self):
        vals = np.array(self.values, copy=True)
        if vals.ndim != 2:
            raise ValueError("candidate mask must be 2-dimensional")
        if not np.all((vals == 0) | (vals == 1)):
            raise ValueError("candidate mask entries must be 0 or 1")
        vals = vals.astype(np.uint8)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "safe_mask", _locked(self.safe_mask, ndim=1, name="safe_mask"))
        if np.any(self.safe_mask < 0) or np.any(self.safe_mask > 1):
            raise ValueError("safe mask entries must lie in [0, 1]")
        if self.safe_mask.shape[0] != vals.shape[1]:
            raise ValueError("safe mask length must match shot count")
        empty = np.where(vals.sum(axis=1) == 0)[0]
        if empty.size:
            raise InfeasibleError(f"no admissible shot for bar {empty[0] + 1}")


@dataclass(frozen=True)
class ElasticAlignment:
    """Ordered (shot, start_bar) segments covering every bar exactly once.

    Segment k assigns its shot to bars [start_bar_k, start_bar_{k+1}),
    with an implicit final boundary of J + 1.  Indices are 1-based.
    """

    segments: tuple[tuple[int, int], ...]

    def __post_init__(self):
        segs = tuple((int(c), int(r)) for c, r in self.segments)
        object.__setattr__(self, "segments", segs)

    @property
    def num_segments(self) -> int:
        return len(self.segments)

    def shot_sequence(self) -> list[int]:
        return [c for c, _ in self.segments]

    def spans(self, total_bars: int) -> list[int]:
        """Bar count covered by each segment, given the track length."""
        starts = [r for _, r in self.segments] + [total_bars + 1]
        return [starts[k + 1] - starts[k] for k in range(len(self.segments))]

    def shot_for_bar(self, total_bars: int) -> list[int]:
        """Shot index covering each bar, length ``total_bars``."""
        out = []
        for (c, _), span in zip(self.segments, self.spans(total_bars)):
            out.extend([c] * span)
        return out


def validate_alignment(align: ElasticAlignment, total_bars: int, total_shots: int) -> list[str]:
    """Check every structural invariant of an elastic alignment.

    Returns an empty list when the alignment is valid, otherwise one
    message per violated invariant naming the offending segment.
    Violations are data, not errors.
    """
    if total_bars < 1 or total_shots < 1:
        raise ValueError("total_bars and total_shots must be >= 1")
    violations = []
    segs = align.segments
    if not segs:
        return ["alignment has no segments"]
    if len(segs) > total_bars:
        violations.append(f"segment count {len(segs)} exceeds bar count {total_bars}")
    if segs[0][1] != 1:
        violations.append(f"segment 1 starts at bar {segs[0][1]}, must start at bar 1")
    seen: dict[int, int] = {}
    for k, (shot, start) in enumerate(segs, start=1):
        if not 1 <= shot <= total_shots:
            violations.append(f"segment {k}: shot {shot} outside [1, {total_shots}]")
        if not 1 <= start <= total_bars:
            violations.append(f"segment {k}: start bar {start} outside [1, {total_bars}]")
        if shot in seen:
            violations.append(f"segment {k}: repeated shot {shot} (first used in segment {seen[shot]})")
        else:
            seen[shot] = k
        if k > 1 and start <= segs[k - 2][1]:
            violations.append(f"segment {k}: start bar {start} does not increase past segment {k - 1}")
    return violations


@dataclass(frozen=True)
class EngineParams:
    """Tunable knobs for scoring, fusion, and beam selection."""

    beam_width: int = 50
    top_m: int = 20
    k_max: int = 5
    lambda_smooth: float = 0.3
    lambda_cut: float = 0.5
    eta: float = 0.9  # duration slack, 1/eta ~ 1.11 permits mild slow-motion
    theta_sim: float = 0.80  # neighbor-exclusion cosine threshold
    lambda_energy: float = 0.1  # unvalidated default, not given upstream
    lambda_importance: float = 0.1  # unvalidated default, not given upstream
    temperature: float = 1.0  # cosine score temperature
    target_temperature: float = 1.0  # softmax temperature for KL targets
    sinkhorn_temperature: float = 0.5
    sinkhorn_iters: int = 3
    lambda_sink: float = 0.1
    lambda_con: float = 0.5

    def __post_init__(self):
        if min(self.beam_width, self.top_m, self.k_max) < 1:
            raise ValueError("beam_width, top_m, and k_max must be >= 1")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if not -1 <= self.theta_sim <= 1:
            raise ValueError("theta_sim must lie in [-1, 1]")
        for name in ("temperature", "target_temperature", "sinkhorn_temperature"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.sinkhorn_iters < 0:
            raise ValueError("sinkhorn_iters must be >= 0")

    def replace(self, **overrides) -> "EngineParams":
        from dataclasses import replace as _replace

        return _replace(self, **overrides)

    def to_dict(self) -> dict:
        from dataclasses import asdict

        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EngineParams":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown engine parameter(s): {sorted(unknown)}")
        return cls(**data)
