"""Synthetic color-bars-and-tone clip for integration tests and demos."""

from __future__ import annotations

import wave
from pathlib import Path

import cv2
import numpy as np


def _scene_background(scene: int, width: int, height: int) -> np.ndarray:
    """Distinct deterministic texture per scene.

    Solid colors would make different scenes near-identical in
    grayscale, tripping the engine's visual-similarity exclusion; a
    per-scene random texture keeps shots mutually dissimilar.
    """
    rng = np.random.default_rng(scene + 1)
    coarse = rng.integers(0, 256, size=(6, 8, 3), dtype=np.uint8)
    return cv2.resize(coarse, (width, height), interpolation=cv2.INTER_NEAREST)


def make_test_clip(directory, seconds: float = 12.0, fps: int = 24,
                   size: tuple[int, int] = (64, 48), sample_rate: int = 48000,
                   scene_seconds: float = 1.5) -> tuple[Path, Path]:
    """Write ``clip.avi`` and ``tone.wav``; returns their paths.

    The video cycles through solid-color scenes with a moving block so
    shots have motion; the audio is a tone whose amplitude steps every
    two seconds between loud and quiet, giving the bar detector usable
    energy novelty.  Scenes are short relative to bars so the clip
    yields more shots than bars and alignment stays feasible under the
    no-repeat constraint.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    video_path = directory / "clip.avi"
    audio_path = directory / "tone.wav"

    width, height = size
    writer = cv2.VideoWriter(str(video_path), cv2.VideoWriter_fourcc(*"MJPG"),
                             fps, (width, height))
    if not writer.isOpened():
        raise RuntimeError("OpenCV refused to open a video writer (MJPG/avi)")
    total_frames = int(round(seconds * fps))
    scene_frames = max(1, int(round(scene_seconds * fps)))
    backgrounds = {}
    for t in range(total_frames):
        scene = t // scene_frames
        if scene not in backgrounds:
            backgrounds[scene] = _scene_background(scene, width, height)
        frame = backgrounds[scene].copy()
        x = int((t % scene_frames) / scene_frames * (width - 12))
        frame[10:22, x:x + 12] = (255, 255, 255)
        writer.write(frame)
    writer.release()

    samples = np.arange(int(seconds * sample_rate)) / sample_rate
    tone = np.sin(2 * np.pi * 220.0 * samples)
    # amplitude steps every 2 s: loud / quiet alternating
    step = (samples // 2.0).astype(int) % 2
    amplitude = np.where(step == 0, 0.8, 0.15)
    pcm = (tone * amplitude * 32767).astype("<i2")
    with wave.open(str(audio_path), "wb") as handle:
        handle.setnchannels(1)
        handle.setsampwidth(2)
        handle.setframerate(sample_rate)
        handle.writeframes(pcm.tobytes())
    return video_path, audio_path
