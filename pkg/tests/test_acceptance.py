"""Acceptance suite: one test per release criterion.

Each test prints a single [acceptance] PASS/FAIL line (run with ``-s``
to see them on success).  Tolerances are fixed here and nowhere else.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import random_instance
from trailercut.bundle import load_bundle, save_bundle
from trailercut.core import BarTrack, EngineParams, InfeasibleError, ShotTable, validate_alignment
from trailercut.guard import build_candidate_mask
from trailercut.metrics import fsd, full_report, kendall_tau, levenshtein, sdtw, set_metrics, TrailerPrediction
from trailercut.scoring import alignment_scores, fuse_scores
from trailercut.selection import cut_bonus, exhaustive_select, precompute_similarity, select
from trailercut.synth import synth_instance
from trailercut.transport import loss_finetune, loss_infonce, loss_kl, sinkhorn_project
from test_metrics import naive_levenshtein, tau_by_pair_counting


def report(name: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    print(f"[acceptance] {name}: {status} {detail}".rstrip())
    assert ok, f"{name} failed: {detail}"


def test_runtime_claim():
    # J=60, I=1500 selection under 1.0 s single-core, median of 5 runs,
    # excluding score and shot-similarity precompute.
    inst = synth_instance(seed=2026, bars=60, shots=1500, d_v=512)
    scores = alignment_scores(inst.music_features, inst.shots.features, 1.0)
    mask = build_candidate_mask(np.ones(1500), 60)
    fused = fuse_scores(scores, mask, inst.bars.energy, np.zeros(1500),
                        np.zeros(1500), 0.1, 0.1)
    similarity = precompute_similarity(inst.shots.features, 0.80)
    params = EngineParams()
    assert (params.beam_width, params.top_m, params.k_max) == (50, 20, 5)
    times = []
    for _ in range(5):
        start = time.perf_counter()
        result = select(fused, inst.bars, inst.shots, params, similarity=similarity)
        times.append(time.perf_counter() - start)
    median = sorted(times)[2]
    assert validate_alignment(result.alignment, 60, 1500) == []
    report("runtime-claim", median < 1.0,
           f"(median {median:.3f}s over 5 runs, all {['%.3f' % t for t in times]})")


def test_oracle_equality():
    checked = 0
    mismatches = []
    seed = 0
    while checked < 200:
        scores, bars, shots, params = random_instance(seed, max_bars=6, max_shots=8,
                                                      k_max=3,
                                                      with_exclusions=seed % 4 == 0)
        seed += 1
        wide = params.replace(beam_width=10 ** 6, top_m=shots.count)
        try:
            got = select(scores, bars, shots, wide)
            expected = exhaustive_select(scores, bars, shots, wide)
        except InfeasibleError:
            continue
        checked += 1
        if abs(got.total_score - expected.total_score) > 1e-9:
            mismatches.append((seed - 1, "score"))
        elif got.alignment.segments != expected.alignment.segments:
            mismatches.append((seed - 1, "alignment"))
    report("oracle-equality", not mismatches,
           f"({checked} instances, mismatches: {mismatches[:5]})")


def test_beam_monotonicity():
    violations = []
    checked = 0
    seed = 1000
    while checked < 50:
        scores, bars, shots, params = random_instance(seed, max_bars=6, max_shots=8)
        seed += 1
        values = []
        try:
            for width in (1, 5, 50, 1000):
                values.append(select(scores, bars, shots,
                                     params.replace(beam_width=width)).total_score)
        except InfeasibleError:
            continue
        checked += 1
        for a, b in zip(values, values[1:]):
            if b < a - 1e-12:
                violations.append(seed - 1)
    report("beam-monotonicity", not violations,
           f"({checked} instances x widths 1/5/50/1000, violations: {violations})")


def test_elasticity_vs_energy():
    target, total = 45, 50
    hits = 0
    for seed in range(total):
        rng = np.random.default_rng(seed + 7000)
        J, I = 12, 20
        features = rng.normal(size=(I, 64))
        features /= np.linalg.norm(features, axis=1, keepdims=True)
        starts = np.arange(I) * 40.0
        shots = ShotTable(features=features, durations=np.full(I, 30.0),
                          start_times=starts, movie_duration=float(starts[-1] + 40.0))
        bars = BarTrack(durations=rng.uniform(1.8, 2.2, J),
                        energy=np.concatenate([np.ones(J // 2), np.zeros(J // 2)]))
        result = select(np.zeros((J, I)), bars, shots, EngineParams())
        spans = np.repeat(result.alignment.spans(J), result.alignment.spans(J))
        if spans[J // 2:].mean() > spans[:J // 2].mean():
            hits += 1
    report("elasticity-vs-energy", hits >= target,
           f"({hits}/{total} instances with longer low-energy spans, need >= {target})")


def test_constraint_suite():
    runs = 0
    bad = []
    seed = 50_000
    while runs < 1000:
        scores, bars, shots, params = random_instance(
            seed, max_bars=8, max_shots=12, k_max=5, with_exclusions=seed % 3 == 0)
        seed += 1
        try:
            result = select(scores, bars, shots, params)
        except InfeasibleError:
            continue
        runs += 1
        if validate_alignment(result.alignment, bars.count, shots.count):
            bad.append((seed - 1, "structure"))
            continue
        spans = result.alignment.spans(bars.count)
        for (shot, bar), span in zip(result.alignment.segments, spans):
            if span > 1:
                total = bars.durations[bar - 1:bar - 1 + span].sum()
                if total > shots.durations[shot - 1] / params.eta + 1e-9:
                    bad.append((seed - 1, "duration"))
        feats = shots.features
        norms = np.linalg.norm(feats, axis=1, keepdims=True)
        unit = feats / np.where(norms > 0, norms, 1.0)
        cos = unit @ unit.T
        picked = [s - 1 for s in result.alignment.shot_sequence()]
        for a_idx in range(len(picked)):
            for b_idx in range(a_idx + 1, len(picked)):
                if cos[picked[a_idx], picked[b_idx]] > params.theta_sim:
                    bad.append((seed - 1, "neighbor"))
    report("constraint-suite", not bad,
           f"({runs} feasible runs, violations: {bad[:5]})")


def test_sinkhorn_convergence():
    # standard-normal scores exponentiated at tau_s=1 give the canonical
    # strictly positive (lognormal) matrices; sharper temperatures
    # converge strictly slower and are reported unasserted below.
    rng = np.random.default_rng(99)
    worst_row = worst_col = 0.0
    t3_rows = []
    t3_cols = []
    for _ in range(100):
        scores = rng.normal(size=(4, 7))
        converged = sinkhorn_project(scores, tau_s=1.0, iters=50)
        worst_row = max(worst_row, converged.row_residual)
        worst_col = max(worst_col, converged.col_residual)
        default = sinkhorn_project(scores, tau_s=0.5, iters=3)
        t3_rows.append(default.row_residual)
        t3_cols.append(default.col_residual)
    # T=3 at the sharper default temperature is informational only (a
    # gentle structural prior, deliberately far from convergence)
    print(f"[acceptance] sinkhorn T=3 tau_s=0.5 residuals (not asserted): "
          f"row max {max(t3_rows):.3e}, col max {max(t3_cols):.3e}")
    report("sinkhorn-convergence", worst_row < 1e-6 and worst_col < 1e-6,
           f"(T=50: worst row {worst_row:.2e} vs 1, worst col {worst_col:.2e} vs 4/7)")


def test_fsd_correctness():
    rng = np.random.default_rng(7)
    problems = []
    for _ in range(30):
        a = rng.normal(size=(6, 5))
        b = rng.normal(loc=0.3, size=(8, 5))
        if abs(fsd(a, b)[0] - fsd(b, a)[0]) > 1e-6:
            problems.append("symmetry")
        if fsd(a, a)[0] > 1e-6:
            problems.append("self-distance")
    for _ in range(100):
        a = rng.normal(size=(rng.integers(3, 10), 1))
        b = rng.normal(loc=1.0, size=(rng.integers(3, 10), 1))
        total = fsd(a, b, shrinkage=0.0)[0]
        closed = (a.mean() - b.mean()) ** 2 + (a.std(ddof=1) - b.std(ddof=1)) ** 2
        if abs(total - closed) > 1e-9:
            problems.append("1d-closed-form")

    # diagnostic scenario: disjoint indices but identical features
    feats = rng.normal(size=(6, 9))
    gt = TrailerPrediction(shot_sequence=tuple(range(1, 7)), features=feats)
    doppel = TrailerPrediction(shot_sequence=tuple(range(101, 107)), features=feats.copy())
    rep = full_report(doppel, gt)
    if rep.selection["f1"] != 0.0 or rep.selection["fsd"] > 1e-6:
        problems.append("identical-features-scenario")

    # diagnostic scenario: genre-clustered subset vs diverse subset
    cluster_a = rng.normal(loc=0.0, scale=0.25, size=(20, 6))
    cluster_b = rng.normal(loc=4.0, scale=0.25, size=(20, 6))
    gt_features = np.concatenate([cluster_a, cluster_b])
    clustered = fsd(cluster_a[:10], gt_features)[0]
    diverse = fsd(np.concatenate([cluster_a[:5], cluster_b[:5]]), gt_features)[0]
    if not clustered > diverse:
        problems.append("clustered-scenario")
    report("fsd-correctness", not problems, f"(failures: {sorted(set(problems))})")


def test_metric_oracles():
    rng = np.random.default_rng(21)
    problems = []
    for _ in range(200):
        a = rng.integers(0, 30, size=rng.integers(0, 201)).tolist()
        b = rng.integers(0, 30, size=rng.integers(0, 201)).tolist()
        if levenshtein(a, b) != naive_levenshtein(a, b):
            problems.append("levenshtein")
            break
    for _ in range(200):
        n = int(rng.integers(2, 101))
        seq = rng.permutation(n).tolist()
        if abs(kendall_tau(seq) - tau_by_pair_counting(seq)) > 1e-12:
            problems.append("kendall_tau")
            break
    for _ in range(50):
        traj = rng.normal(size=(rng.integers(1, 12), 6))
        if sdtw(traj, traj) != pytest.approx(0.0, abs=1e-12):
            problems.append("sdtw")
            break
    report("metric-oracles", not problems, f"(failures: {problems})")


def test_cut_bonus_anchors():
    problems = []
    for lam in (0.0, 0.1, 0.5, 1.0, 3.0):
        if abs(cut_bonus(0.15, lam)) > 1e-15:
            problems.append(f"zero-crossing@{lam}")
    if abs(cut_bonus(1.0, 0.5) - 0.85) > 1e-12:
        problems.append("high-energy")
    if abs(cut_bonus(0.0, 0.5) + 0.15) > 1e-12:
        problems.append("low-energy")
    report("cut-bonus-anchors", not problems, f"(failures: {problems})")


def test_loss_evaluators():
    rng = np.random.default_rng(3)
    problems = []
    scores = rng.normal(size=(4, 6))
    z = scores - scores.max(axis=1, keepdims=True)
    matched = np.exp(z) / np.exp(z).sum(axis=1, keepdims=True)
    if loss_kl(scores, matched, 1.0) > 1e-12:
        problems.append("kl-matched")
    infonce = loss_infonce(np.eye(2), np.eye(2), 1.0)
    if abs(infonce - 0.31326) > 1e-4:
        problems.append(f"infonce={infonce:.6f}")
    target = rng.uniform(0.1, 1.0, size=(4, 6))
    target /= target.sum(axis=1, keepdims=True)
    audio, visual = rng.normal(size=(4, 8)), rng.normal(size=(4, 8))
    for lam_sink, lam_con in ((0.0, 0.0), (0.1, 0.5), (0.7, 0.2)):
        params = EngineParams(lambda_sink=lam_sink, lambda_con=lam_con)
        r = loss_finetune(scores, target, params, audio, visual)
        if abs(r.total - (r.kl + lam_sink * r.sinkhorn + lam_con * r.infonce)) > 1e-12:
            problems.append(f"linearity@{lam_sink},{lam_con}")
    report("loss-evaluators", not problems, f"(failures: {problems})")


def test_determinism_and_round_trip(tmp_path):
    problems = []
    bundle_dir = tmp_path / "bundle"
    cmd = [sys.executable, "-m", "trailercut.cli", "synth", "--seed", "8",
           "--bars", "6", "--shots", "10", "--planted", "--out", str(bundle_dir)]
    subprocess.run(cmd, check=True, capture_output=True)

    align_cmd = [sys.executable, "-m", "trailercut.cli", "align", str(bundle_dir),
                 "--set", "beam_width=200"]
    first = subprocess.run(align_cmd, check=True, capture_output=True)
    second = subprocess.run(align_cmd, check=True, capture_output=True)
    if first.stdout != second.stdout or first.stderr != second.stderr:
        problems.append("cli-bytes")

    rng = np.random.default_rng(17)
    shots = ShotTable(features=rng.normal(size=(4, 6)).astype("<f4"),
                      durations=[3.0, 4.0, 5.0, 6.0],
                      start_times=[0.0, 10.0, 20.0, 30.0], movie_duration=120.0)
    arrays = {
        "music_features": rng.normal(size=(3, 6)).astype("<f4"),
        "energy_override": rng.uniform(0, 1, 3).astype("<f4"),
        "score_matrix": rng.normal(size=(3, 4)).astype("<f4"),
    }
    path = save_bundle(tmp_path / "rt", shots, [0.0, 1.0, 2.5, 4.0],
                       music_features=arrays["music_features"],
                       energy_override=arrays["energy_override"],
                       score_matrix=arrays["score_matrix"])
    loaded = load_bundle(path)
    pairs = [
        (np.asarray(loaded.shots.features, dtype="<f4"), shots.features.astype("<f4")),
        (np.asarray(loaded.bars.features, dtype="<f4"), arrays["music_features"]),
        (np.asarray(loaded.bars.energy, dtype="<f4"), arrays["energy_override"]),
        (loaded.score_matrix, arrays["score_matrix"]),
    ]
    for got, expected in pairs:
        if got.tobytes() != expected.tobytes():
            problems.append("round-trip-bits")
            break
    report("determinism-and-round-trip", not problems, f"(failures: {problems})")
