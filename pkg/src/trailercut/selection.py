"""Energy-adaptive elastic shot selection via beam search over bars.

States are bucketed by their next unassigned bar and buckets are
processed in increasing bar order, so states that consumed different
span lengths compete exactly when they reach the same frontier bar.
Within a bucket the W highest-scoring states survive.  Expansion offers
each state the top-M admissible shots of its frontier row with span
lengths 1..k_max, subject to the duration constraint, hard exclusions,
and neighbor exclusion (shots too similar to an already-used shot are
banned).

All public indices are 1-based; zero-based offsets are internal.
Tie-breaking is total and deterministic everywhere: higher score, then
fewer segments, then lexicographically smaller (shot, start_bar)
sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import EXCLUDED, BarTrack, ElasticAlignment, EngineParams, InfeasibleError, ShotTable
from .scoring import FusedScores

# Candidate filtering modes for top-M selection.  "rank_after_exclusion"
# ranks admissible shots after removing the used set, so a state is
# never starved when its M best shots are all banned; "literal" takes
# the row's top M first and then removes used shots.
TOP_M_MODES = ("rank_after_exclusion", "literal")


class TransitionScore(NamedTuple):
    total: float
    avg_alignment: float
    smoothness: float
    cut_bonus: float


def cut_bonus(mean_energy: float, lambda_cut: float) -> float:
    """Per-segment reward ``lambda_cut * (2 * mean_energy - 0.3)``.

    Positive above mean energy 0.15, negative below, so high-energy
    spans encourage cuts and low-energy spans discourage them.
    """
    if not 0.0 <= mean_energy <= 1.0:
        raise ValueError("mean_energy must lie in [0, 1]")
    return lambda_cut * (2.0 * mean_energy - 0.3)


def duration_feasible(shot_duration: float, bar_durations, span: int, eta: float) -> bool:
    """Whether a shot can cover ``span`` bars under the slack factor.

    Single-bar spans are always allowed; multi-bar spans require the
    total bar time to fit within ``shot_duration / eta``.
    """
    if span < 1:
        raise ValueError("span must be >= 1")
    if span == 1:
        return True
    total = float(np.sum(np.asarray(bar_durations, dtype=np.float64)[:span]))
    return total <= shot_duration / eta


def _score_values(scores) -> np.ndarray:
    if isinstance(scores, FusedScores):
        return scores.values
    arr = np.asarray(scores, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("scores must be a 2-D matrix")
    return arr


def transition_score(scores, shot: int, bar: int, span: int,
                     last_features: np.ndarray | None, shot_features: np.ndarray,
                     bar_energy: np.ndarray, lambda_smooth: float,
                     lambda_cut: float) -> TransitionScore | None:
    """Score one candidate segment; ``None`` when the span is excluded.

    ``shot`` and ``bar`` are 1-based.  The smoothness term applies only
    when a previous shot exists, once per segment.
    """
    S = _score_values(scores)
    J, I = S.shape
    if not 1 <= shot <= I:
        raise ValueError(f"shot {shot} outside [1, {I}]")
    if not 1 <= bar <= J or bar + span - 1 > J:
        raise ValueError(f"bars {bar}..{bar + span - 1} outside [1, {J}]")
    col = S[bar - 1:bar - 1 + span, shot - 1]
    if np.any(col == EXCLUDED):
        return None
    avg = float(np.mean(col))
    smooth = 0.0
    if last_features is not None:
        a = np.asarray(last_features, dtype=np.float64)
        b = np.asarray(shot_features, dtype=np.float64)
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        if na > 0 and nb > 0:
            smooth = lambda_smooth * float(a @ b / (na * nb))
    energy = np.asarray(bar_energy, dtype=np.float64)[bar - 1:bar - 1 + span]
    bonus = cut_bonus(float(np.mean(energy)), lambda_cut)
    return TransitionScore(total=avg + smooth + bonus, avg_alignment=avg,
                           smoothness=smooth, cut_bonus=bonus)


class SimilarityIndex:
    """Precomputed pairwise shot cosines and neighbor sets.

    Built once per instance (O(I^2 d)); the beam then answers smoothness
    and neighbor-exclusion queries in O(1).  Zero-norm feature rows are
    treated as having zero similarity to everything.
    """

    def __init__(self, features: np.ndarray, theta_sim: float):
        feats = np.asarray(features, dtype=np.float64)
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        norms = np.linalg.norm(feats, axis=1)
        unit = feats / np.where(norms > 0, norms, 1.0)[:, None]
        cos = np.clip(unit @ unit.T, -1.0, 1.0)
        self.theta_sim = float(theta_sim)
        self.cosine = cos
        self.count = feats.shape[0]
        over = cos > self.theta_sim
        np.fill_diagonal(over, False)
        self.neighbors = tuple(frozenset(np.nonzero(row)[0].tolist()) for row in over)
        self._row_cache: dict[int, list[float]] = {}

    def row(self, i: int) -> list[float]:
        cached = self._row_cache.get(i)
        if cached is None:
            cached = self.cosine[i].tolist()
            self._row_cache[i] = cached
        return cached


def precompute_similarity(features: np.ndarray, theta_sim: float) -> SimilarityIndex:
    return SimilarityIndex(features, theta_sim)


@dataclass(frozen=True)
class SelectionResult:
    alignment: ElasticAlignment
    total_score: float
    per_segment: tuple[TransitionScore, ...]
    beam_stats: dict = field(default_factory=dict)


class _Instance:
    """Shared numeric precomputation for beam and exhaustive search.

    Both searches score spans through the same prefix-sum arrays so
    their accumulated floats are bitwise identical, which keeps the
    deterministic tie-break comparable across implementations.
    """

    def __init__(self, scores, bars: BarTrack, shots: ShotTable,
                 params: EngineParams, similarity: SimilarityIndex | None):
        S = _score_values(scores)
        self.J, self.I = S.shape
        if bars.count != self.J:
            raise ValueError(f"score rows {self.J} do not match bar count {bars.count}")
        if shots.count != self.I:
            raise ValueError(f"score columns {self.I} do not match shot count {shots.count}")
        if similarity is None:
            similarity = SimilarityIndex(shots.features, params.theta_sim)
        elif similarity.count != self.I:
            raise ValueError("similarity index built for a different shot count")
        elif abs(similarity.theta_sim - params.theta_sim) > 1e-12:
            raise ValueError("similarity index built with a different theta_sim")
        self.sim = similarity
        self.params = params

        excluded = S == EXCLUDED
        stuck = np.where(excluded.all(axis=1))[0]
        if stuck.size:
            raise InfeasibleError(
                f"infeasible instance: no admissible shot for bar {stuck[0] + 1}")

        # Per-column prefix sums over bars; excluded entries contribute 0
        # but any span touching one is rejected via the exclusion prefix.
        filled = np.where(excluded, 0.0, S)
        col_prefix = np.zeros((self.J + 1, self.I))
        np.cumsum(filled, axis=0, out=col_prefix[1:])
        excl_prefix = np.zeros((self.J + 1, self.I), dtype=np.int64)
        np.cumsum(excluded, axis=0, out=excl_prefix[1:])
        self.col_prefix_np = col_prefix
        self.col_prefix = col_prefix.T.tolist()
        self.excl_prefix = excl_prefix.T.tolist()
        self.excluded_columns = excluded.any(axis=0).tolist()

        self.dur_prefix = np.concatenate(([0.0], np.cumsum(bars.durations))).tolist()
        self.energy_prefix = np.concatenate(([0.0], np.cumsum(bars.energy))).tolist()
        self.max_span_duration = (shots.durations / params.eta).tolist()

        # Candidate order per bar: descending score, ties by lower shot
        # index (stable sort), excluded entries dropped.
        self.order: list[list[int]] = []
        for j in range(self.J):
            ranked = np.argsort(-S[j], kind="stable")
            keep = ranked[~excluded[j][ranked]]
            self.order.append(keep.tolist())

    def span_delta(self, shot: int, bar: int, span: int, last: int | None) -> float:
        """Transition increment for 0-based shot/bar; caller checked spans."""
        end = bar + span
        avg = (self.col_prefix[shot][end] - self.col_prefix[shot][bar]) / span
        mean_e = (self.energy_prefix[end] - self.energy_prefix[bar]) / span
        bonus = self.params.lambda_cut * (2.0 * mean_e - 0.3)
        smooth = 0.0
        if last is not None:
            smooth = self.params.lambda_smooth * self.sim.row(last)[shot]
        return avg + smooth + bonus

    def breakdown(self, seq: tuple[tuple[int, int], ...]) -> tuple[TransitionScore, ...]:
        """Per-segment terms for a 1-based (shot, start_bar) sequence."""
        out = []
        last: int | None = None
        starts = [r - 1 for _, r in seq] + [self.J]
        for k, (shot1, _) in enumerate(seq):
            shot = shot1 - 1
            bar, end = starts[k], starts[k + 1]
            span = end - bar
            avg = (self.col_prefix[shot][end] - self.col_prefix[shot][bar]) / span
            mean_e = (self.energy_prefix[end] - self.energy_prefix[bar]) / span
            bonus = self.params.lambda_cut * (2.0 * mean_e - 0.3)
            smooth = 0.0
            if last is not None:
                smooth = self.params.lambda_smooth * self.sim.row(last)[shot]
            out.append(TransitionScore(total=avg + smooth + bonus, avg_alignment=avg,
                                       smoothness=smooth, cut_bonus=bonus))
            last = shot
        return tuple(out)


def select(scores, bars: BarTrack, shots: ShotTable, params: EngineParams,
           similarity: SimilarityIndex | None = None,
           top_m_mode: str = "rank_after_exclusion") -> SelectionResult:
    """Find the best elastic alignment reachable by the pruned beam.

    Deterministic for fixed inputs.  Raises ``InfeasibleError`` when no
    complete assignment exists (exclusions exhaust the shot pool).
    """
    if top_m_mode not in TOP_M_MODES:
        raise ValueError(f"top_m_mode must be one of {TOP_M_MODES}")
    inst = _Instance(scores, bars, shots, params, similarity)
    J = inst.J
    W, M, k_max = params.beam_width, params.top_m, params.k_max
    rank_after_exclusion = top_m_mode == "rank_after_exclusion"
    order = inst.order
    excl_prefix = inst.excl_prefix
    has_excl_col = inst.excluded_columns
    col_prefix_np = inst.col_prefix_np
    dur_prefix, energy_prefix = inst.dur_prefix, inst.energy_prefix
    max_span = inst.max_span_duration
    neighbors = inst.sim.neighbors
    lam_cut, lam_sm = params.lambda_cut, params.lambda_smooth
    sim_row = inst.sim.row

    # Pending entries per frontier bar: (-score, nseg, seq, parent_used,
    # shot), so plain tuple order is exactly the pruning order (higher
    # score, then fewer segments, then lexicographically smaller
    # sequence).  Used sets are materialized only for pruning survivors.
    # The width-1 (greedy) chain is tracked alongside and always kept, so
    # a wider beam can never return a worse alignment than the greedy one.
    initial = (0.0, 0, (), frozenset(), None)
    buckets: list[list] = [[] for _ in range(J + 1)]
    greedy_buckets: list[list] = [[] for _ in range(J + 1)]
    buckets[0].append(initial)
    greedy_buckets[0].append(initial)
    expanded = 0
    pruned = 0
    first_stuck: int | None = None

    for j in range(J):
        pending = buckets[j]
        buckets[j] = []
        if not pending:
            continue
        greedy_entry = min(greedy_buckets[j], default=None)
        if len(pending) > W:
            pending.sort()
            pruned += len(pending) - W
            pending = pending[:W]
            if greedy_entry is not None and greedy_entry not in pending:
                pending.append(greedy_entry)
                pruned -= 1

        # Span quantities shared by every expansion from this bar: the
        # per-shot average score, the cut bonus, and the span duration
        # depend only on (bar, span length).
        k_limit = min(k_max, J - j)
        avg_rows = []
        bonuses = []
        span_durations = []
        dp_j = dur_prefix[j]
        ep_j = energy_prefix[j]
        cp_j = col_prefix_np[j]
        for k in range(1, k_limit + 1):
            end = j + k
            avg_rows.append(((col_prefix_np[end] - cp_j) / k).tolist())
            mean_e = (energy_prefix[end] - ep_j) / k
            bonuses.append(lam_cut * (2.0 * mean_e - 0.3))
            span_durations.append(dur_prefix[end] - dp_j)

        produced = 0
        row_order = order[j]
        for entry in pending:
            neg_score, nseg, seq, parent_used, shot = entry
            from_greedy = entry is greedy_entry
            if shot is None:
                used, last = parent_used, None
            else:
                used = parent_used | {shot} | neighbors[shot]
                last = shot

            if rank_after_exclusion:
                candidates = []
                for i in row_order:
                    if i not in used:
                        candidates.append(i)
                        if len(candidates) == M:
                            break
            else:
                candidates = [i for i in row_order[:M] if i not in used]

            nseg1 = nseg + 1
            smooth_row = sim_row(last) if last is not None else None
            for i in candidates:
                limit = max_span[i]
                smooth = lam_sm * smooth_row[i] if smooth_row is not None else 0.0
                xp = excl_prefix[i] if has_excl_col[i] else None
                xp_j = xp[j] if xp is not None else 0
                new_seq = seq + ((i + 1, j + 1),)
                for kk in range(k_limit):
                    if kk and span_durations[kk] > limit:
                        break
                    end = j + kk + 1
                    if xp is not None and xp[end] - xp_j > 0:
                        break
                    delta = avg_rows[kk][i] + smooth + bonuses[kk]
                    child = (neg_score - delta, nseg1, new_seq, used, i)
                    buckets[end].append(child)
                    if from_greedy:
                        greedy_buckets[end].append(child)
                    produced += 1
        expanded += produced
        if produced == 0 and first_stuck is None:
            first_stuck = j + 1

    complete = buckets[J]
    if not complete:
        stuck = first_stuck if first_stuck is not None else J
        raise InfeasibleError(f"infeasible instance: beam stuck at bar {stuck}")
    best = min(complete)
    seq = best[2]
    per_segment = inst.breakdown(seq)
    return SelectionResult(
        alignment=ElasticAlignment(segments=seq),
        total_score=-best[0],
        per_segment=per_segment,
        beam_stats={"states_expanded": expanded, "states_pruned": pruned,
                    "complete_states": len(complete)},
    )


# Hard caps keep the enumeration tractable; beyond them the state space
# explodes combinatorially.
EXHAUSTIVE_MAX_BARS = 8
EXHAUSTIVE_MAX_SHOTS = 10
EXHAUSTIVE_MAX_SPAN = 4


def exhaustive_select(scores, bars: BarTrack, shots: ShotTable, params: EngineParams,
                      similarity: SimilarityIndex | None = None) -> SelectionResult:
    """Enumerate every valid elastic alignment and return the best one.

    Test oracle for :func:`select`; applies the same constraints
    (no-repeat, duration, exclusions, neighbor exclusion in selection
    order) and the same tie-break, but no top-M or beam pruning.
    """
    inst = _Instance(scores, bars, shots, params, similarity)
    J, I = inst.J, inst.I
    if J > EXHAUSTIVE_MAX_BARS or I > EXHAUSTIVE_MAX_SHOTS or params.k_max > EXHAUSTIVE_MAX_SPAN:
        raise ValueError(
            f"instance exceeds exhaustive caps (J <= {EXHAUSTIVE_MAX_BARS}, "
            f"I <= {EXHAUSTIVE_MAX_SHOTS}, k_max <= {EXHAUSTIVE_MAX_SPAN})")
    dur_prefix, excl_prefix = inst.dur_prefix, inst.excl_prefix
    max_span = inst.max_span_duration
    neighbors = inst.sim.neighbors
    k_max = params.k_max

    best: tuple | None = None
    best_key: tuple | None = None
    first_stuck: list[int | None] = [None]
    visited = [0]

    def walk(j: int, used: frozenset, last: int | None, score: float,
             seq: tuple[tuple[int, int], ...]):
        nonlocal best, best_key
        if j == J:
            key = (-score, len(seq), seq)
            if best_key is None or key < best_key:
                best = (score, len(seq), seq)
                best_key = key
            return
        produced = 0
        for i in range(I):
            if i in used:
                continue
            xp = excl_prefix[i]
            limit = max_span[i]
            for k in range(1, k_max + 1):
                end = j + k
                if end > J:
                    break
                if k > 1 and dur_prefix[end] - dur_prefix[j] > limit:
                    break
                if xp[end] - xp[j] > 0:
                    break
                delta = inst.span_delta(i, j, k, last)
                produced += 1
                visited[0] += 1
                walk(end, used | {i} | neighbors[i], i, score + delta,
                     seq + ((i + 1, j + 1),))
        if produced == 0 and (first_stuck[0] is None or j + 1 < first_stuck[0]):
            first_stuck[0] = j + 1

    walk(0, frozenset(), None, 0.0, ())
    if best is None:
        stuck = first_stuck[0] if first_stuck[0] is not None else J
        raise InfeasibleError(f"infeasible instance: beam stuck at bar {stuck}")
    score, _, seq = best
    return SelectionResult(
        alignment=ElasticAlignment(segments=seq),
        total_score=score,
        per_segment=inst.breakdown(seq),
        beam_stats={"states_expanded": visited[0], "states_pruned": 0},
    )
