import numpy as np
import pytest

from trailercut.bundle import load_bundle
from trailercut.core import EngineParams, validate_alignment
from trailercut.pipeline import run_alignment
from trailercut.synth import synth_instance


class TestDeterminism:
    def test_same_seed_same_instance(self):
        a = synth_instance(seed=42, bars=5, shots=9)
        b = synth_instance(seed=42, bars=5, shots=9)
        assert np.array_equal(a.shots.features, b.shots.features)
        assert np.array_equal(a.music_features, b.music_features)
        assert np.array_equal(a.energy, b.energy)

    def test_different_seeds_differ(self):
        a = synth_instance(seed=1, bars=5, shots=9)
        b = synth_instance(seed=2, bars=5, shots=9)
        assert not np.array_equal(a.shots.features, b.shots.features)

    def test_saved_bundles_bit_identical(self, tmp_path):
        synth_instance(seed=3, bars=4, shots=6, planted=True).save(tmp_path / "a")
        synth_instance(seed=3, bars=4, shots=6, planted=True).save(tmp_path / "b")
        for name in ("manifest.json", "movie_features.f32", "music_features.f32",
                     "energy_override.f32", "frame_features.f32"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestPlanted:
    def test_ground_truth_always_valid(self):
        for seed in range(8):
            inst = synth_instance(seed=seed, bars=6, shots=9, planted=True)
            assert validate_alignment(inst.ground_truth, 6, 9) == []

    def test_wide_beam_recovers_planted(self):
        for seed in range(8):
            inst = synth_instance(seed=seed, bars=4, shots=6, planted=True)
            wide = EngineParams().replace(beam_width=1000, top_m=6)
            outcome = run_alignment(inst.to_bundle(), wide)
            assert outcome.selection.alignment.segments == inst.ground_truth.segments

    def test_energy_tracks_span_structure(self):
        inst = synth_instance(seed=5, bars=8, shots=12, planted=True)
        spans = inst.ground_truth.spans(8)
        per_bar = np.repeat(spans, spans)
        assert np.all(inst.energy[per_bar == 1] > 0.9)
        assert np.all(inst.energy[per_bar > 1] < 0.1)

    def test_planted_requires_enough_shots(self):
        with pytest.raises(ValueError, match="enough shots"):
            synth_instance(seed=0, bars=6, shots=3, planted=True)

    def test_planted_requires_matching_dims(self):
        with pytest.raises(ValueError, match="d_a == d_v"):
            synth_instance(seed=0, bars=4, shots=6, d_v=32, d_a=16, planted=True)

    def test_planted_needs_width_beyond_shots(self):
        with pytest.raises(ValueError, match="d_v"):
            synth_instance(seed=0, bars=4, shots=6, d_v=4, planted=True)


class TestBundleIntegration:
    def test_round_trip_preserves_instance(self, tmp_path):
        inst = synth_instance(seed=9, bars=5, shots=8, planted=True)
        path = inst.save(tmp_path / "bundle")
        loaded = load_bundle(path)
        assert np.array_equal(np.asarray(loaded.shots.features, dtype="<f4"),
                              inst.shots.features.astype("<f4"))
        assert loaded.ground_truth.segments == inst.ground_truth.segments
        assert loaded.energy_source == "override"
        assert np.array_equal(np.asarray(loaded.bars.energy, dtype="<f4"), inst.energy)

    def test_loaded_bundle_still_recovers_planted(self, tmp_path):
        inst = synth_instance(seed=12, bars=5, shots=9, planted=True)
        loaded = load_bundle(inst.save(tmp_path / "bundle"))
        wide = EngineParams().replace(beam_width=1000, top_m=9)
        outcome = run_alignment(loaded, wide)
        assert outcome.selection.alignment.segments == inst.ground_truth.segments

    def test_unplanted_large_instance_runs_end_to_end(self):
        inst = synth_instance(seed=77, bars=12, shots=40, d_v=32)
        outcome = run_alignment(inst.to_bundle(), EngineParams())
        assert validate_alignment(outcome.selection.alignment, 12, 40) == []
