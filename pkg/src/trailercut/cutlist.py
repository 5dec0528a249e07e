"""Cut-list emission: EDL-style source/timeline in-out points per segment.

Trimming is start-anchored: each selected shot plays from its own start
for the duration of its bar span.  When the span slightly exceeds the
shot (possible only within the duration-constraint slack), the source
out-point is clamped to the shot end and the segment is flagged for
retiming downstream.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .bundle import write_json
from .core import BarTrack, ElasticAlignment, ShotTable, validate_alignment

CUTLIST_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class CutSegment:
    shot_index: int  # 1-based
    bar_start: int  # 1-based, inclusive
    bar_end: int  # 1-based, inclusive
    source_in: float  # seconds into the movie
    source_out: float
    timeline_in: float  # seconds into the trailer
    timeline_out: float
    retimed: bool = False  # source clamped shorter than the timeline slot


@dataclass(frozen=True)
class CutList:
    segments: tuple[CutSegment, ...]
    music_duration: float
    params_echo: dict

    def to_dict(self) -> dict:
        return {
            "schema_version": CUTLIST_SCHEMA_VERSION,
            "segments": [asdict(s) for s in self.segments],
            "totals": {
                "segment_count": len(self.segments),
                "music_duration": self.music_duration,
            },
            "params": dict(self.params_echo),
        }

    def shot_sequence(self) -> list[int]:
        return [s.shot_index for s in self.segments]

    def cut_times(self) -> list[float]:
        """Timeline instants where a new segment begins (excluding 0)."""
        return [s.timeline_in for s in self.segments[1:]]


def emit_cutlist(alignment: ElasticAlignment, bars: BarTrack, shots: ShotTable,
                 path=None, params_echo: dict | None = None) -> CutList:
    """Build the cut list for an alignment; optionally write it as JSON."""
    problems = validate_alignment(alignment, bars.count, shots.count)
    if problems:
        raise ValueError(f"invalid alignment: {problems[0]}")
    durations = bars.durations
    spans = alignment.spans(bars.count)
    segments = []
    timeline = 0.0
    for (shot, bar_start), span in zip(alignment.segments, spans):
        span_duration = float(durations[bar_start - 1:bar_start - 1 + span].sum())
        source_in = float(shots.start_times[shot - 1])
        source_out = source_in + span_duration
        shot_end = float(shots.start_times[shot - 1] + shots.durations[shot - 1])
        retimed = False
        if source_out > shot_end + 1e-9:
            source_out = shot_end
            retimed = True
        segments.append(CutSegment(
            shot_index=shot,
            bar_start=bar_start,
            bar_end=bar_start + span - 1,
            source_in=source_in,
            source_out=source_out,
            timeline_in=timeline,
            timeline_out=timeline + span_duration,
            retimed=retimed,
        ))
        timeline += span_duration
    cutlist = CutList(segments=tuple(segments),
                      music_duration=float(durations.sum()),
                      params_echo=params_echo or {})
    if path is not None:
        write_json(Path(path), cutlist.to_dict())
    return cutlist


def read_cutlist(path) -> CutList:
    """Load a cut list written by :func:`emit_cutlist`."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"cut list is not valid JSON: {exc}") from exc
    version = payload.get("schema_version")
    if version != CUTLIST_SCHEMA_VERSION:
        raise ValueError(f"unknown cut-list schema_version {version!r}")
    segments = tuple(CutSegment(**seg) for seg in payload["segments"])
    return CutList(segments=segments,
                   music_duration=float(payload["totals"]["music_duration"]),
                   params_echo=payload.get("params", {}))
