"""Cross-modal alignment scores and prior fusion.

Score matrices are plain float64 ndarrays with bars as rows and shots
as columns.  Excluded entries hold the ``core.EXCLUDED`` sentinel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import EXCLUDED, CandidateMask


def _unit_rows(mat: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(mat, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix")
    norms = np.linalg.norm(arr, axis=1)
    zero = np.where(norms == 0)[0]
    if zero.size:
        raise ValueError(f"{name} row {zero[0] + 1} has zero norm")
    return arr / norms[:, None]


def alignment_scores(audio_embeddings: np.ndarray, visual_embeddings: np.ndarray,
                     temperature: float) -> np.ndarray:
    """Temperature-scaled cosine similarity, bars x shots.

    Entries lie in [-1/temperature, 1/temperature].  Invariant to
    positive rescaling of any embedding row.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    A = _unit_rows(audio_embeddings, "audio_embeddings")
    V = _unit_rows(visual_embeddings, "visual_embeddings")
    if A.shape[1] != V.shape[1]:
        raise ValueError(
            f"embedding widths differ: audio {A.shape[1]} vs visual {V.shape[1]}")
    return (A @ V.T) / temperature


@dataclass(frozen=True)
class FusedScores:
    """Combined score matrix ready for selection.

    ``provenance`` optionally retains the individual additive terms for
    diagnostics; it is never consumed by the engine.
    """

    values: np.ndarray  # J x I, EXCLUDED sentinel where masked out
    provenance: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, copy=True)
        if vals.ndim != 2:
            raise ValueError("fused scores must be a 2-D matrix")
        finite_ok = np.isfinite(vals) | (vals == EXCLUDED)
        if not np.all(finite_ok):
            raise ValueError("fused scores contain non-finite, non-sentinel entries")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def excluded(self) -> np.ndarray:
        return self.values == EXCLUDED


def fuse_scores(scores: np.ndarray, mask: CandidateMask, bar_energy: np.ndarray,
                shot_dynamics: np.ndarray, shot_importance: np.ndarray,
                lambda_energy: float, lambda_importance: float,
                hard_exclusion: bool = True,
                retain_provenance: bool = False) -> FusedScores:
    """Fuse alignment scores with energy-dynamics and importance priors.

    Admissible entries become ``S + lambda_energy * e_j * d_i +
    lambda_importance * p_i``.  Masked-out entries are hard-excluded by
    default: the additive priors must not be able to resurrect a shot
    that the safety mask banned.  ``hard_exclusion=False`` restores the
    literal multiplicative-mask behavior (mask zeroes only the score
    term) for compatibility.
    """
    S = np.asarray(scores, dtype=np.float64)
    e = np.asarray(bar_energy, dtype=np.float64)
    d = np.asarray(shot_dynamics, dtype=np.float64)
    p = np.asarray(shot_importance, dtype=np.float64)
    if S.ndim != 2:
        raise ValueError("scores must be a 2-D matrix")
    J, I = S.shape
    if mask.values.shape != (J, I):
        raise ValueError(f"mask shape {mask.values.shape} does not match scores {S.shape}")
    if e.shape != (J,):
        raise ValueError(f"bar_energy length {e.shape} does not match bar count {J}")
    if d.shape != (I,) or p.shape != (I,):
        raise ValueError("shot_dynamics and shot_importance must have one entry per shot")

    priors = lambda_energy * np.outer(e, d) + lambda_importance * p[None, :]
    admissible = mask.values.astype(bool)
    if hard_exclusion:
        fused = np.where(admissible, S + priors, EXCLUDED)
    else:
        fused = S * mask.values + priors

    provenance: dict[str, np.ndarray] = {}
    if retain_provenance:
        provenance = {
            "alignment": S * mask.values,
            "energy_dynamics": lambda_energy * np.outer(e, d),
            "importance": np.broadcast_to(lambda_importance * p, (J, I)).copy(),
        }
    return FusedScores(values=fused, provenance=provenance)
