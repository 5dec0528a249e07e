import numpy as np
import pytest
from hypothesis import given, strategies as st

from trailercut.features import (
    AudioSamples,
    compute_bar_energy,
    compute_shot_dynamics,
    uniform_bar_grid,
)


def constant_audio(levels, bar_len=100, rate=1000):
    samples = np.concatenate([np.full(bar_len, lvl) for lvl in levels])
    bounds = np.arange(len(levels) + 1) * bar_len
    return AudioSamples(samples=samples, sample_rate=rate, bar_boundaries=bounds)


class TestBarEnergy:
    def test_equal_constant_bars(self):
        energy = compute_bar_energy(constant_audio([0.5, 0.5]))
        assert np.allclose(energy, [1.0, 1.0])

    def test_silent_bar_is_zero(self):
        energy = compute_bar_energy(constant_audio([0.8, 0.0]))
        assert np.allclose(energy, [1.0, 0.0])

    def test_half_amplitude_ratio(self):
        # RMS of a constant signal equals its amplitude, so 0.3/0.6 = 0.5
        energy = compute_bar_energy(constant_audio([0.6, 0.3]))
        assert np.allclose(energy, [1.0, 0.5])

    def test_all_silence_stays_zero(self):
        energy = compute_bar_energy(constant_audio([0.0, 0.0]))
        assert np.array_equal(energy, [0.0, 0.0])

    def test_empty_bar_rejected(self):
        samples = np.zeros(10)
        with pytest.raises(ValueError, match="degenerate"):
            compute_bar_energy(AudioSamples(samples=samples, sample_rate=100,
                                            bar_boundaries=[0, 5, 5, 10]))

    @given(st.floats(min_value=0.01, max_value=10.0))
    def test_positive_scaling_invariance(self, scale):
        rng = np.random.default_rng(5)
        samples = rng.uniform(-0.1, 0.1, size=400)
        bounds = [0, 150, 400]
        base = compute_bar_energy(AudioSamples(samples=samples, sample_rate=100,
                                               bar_boundaries=bounds))
        scaled = compute_bar_energy(AudioSamples(samples=samples * scale,
                                                 sample_rate=100, bar_boundaries=bounds))
        assert np.allclose(base, scaled)


class TestShotDynamics:
    def test_identical_frames_zero(self):
        d = compute_shot_dynamics([np.ones((4, 3)), np.array([[0, 0, 0], [3, 4, 0]])])
        assert d[0] == 0.0

    def test_single_frame_zero(self):
        d = compute_shot_dynamics([np.ones((1, 3)), np.array([[0, 0, 0], [1, 1, 1]])])
        assert d[0] == 0.0

    def test_hand_norms(self):
        shot_a = np.array([[0.0, 0.0], [3.0, 4.0]])  # one step of norm 5
        shot_b = np.array([[0.0, 0.0], [6.0, 8.0]])  # one step of norm 10
        d = compute_shot_dynamics([shot_a, shot_b])
        assert np.allclose(d, [0.5, 1.0])

    def test_reversal_symmetry(self, rng):
        frames = rng.normal(size=(6, 8))
        fwd = compute_shot_dynamics([frames, rng.normal(size=(3, 8))])
        rev = compute_shot_dynamics([frames[::-1], rng.normal(size=(3, 8))])
        # only the first shot is reversed; its raw value must not change
        assert fwd[0] == pytest.approx(rev[0], abs=1e-12)

    def test_all_static_stays_zero(self):
        d = compute_shot_dynamics([np.ones((3, 2)), np.ones((2, 2))])
        assert np.array_equal(d, [0.0, 0.0])

    def test_empty_shot_rejected(self):
        with pytest.raises(ValueError, match="shot 2"):
            compute_shot_dynamics([np.ones((2, 3)), np.ones((0, 3))])


class TestUniformBarGrid:
    def test_exact_fit(self):
        assert np.allclose(uniform_bar_grid(8.0, 120.0, 4), [0, 2, 4, 6, 8])

    def test_trailing_merge(self):
        # remainder of 1 s (half a bar) merges into the previous bar
        assert np.allclose(uniform_bar_grid(5.0, 120.0, 4), [0, 2, 5])

    def test_single_bar(self):
        assert np.allclose(uniform_bar_grid(2.0, 120.0, 4), [0, 2])

    def test_long_remainder_stands_alone(self):
        assert np.allclose(uniform_bar_grid(7.5, 120.0, 4), [0, 2, 4, 6, 7.5])

    def test_short_track_single_partial_bar(self):
        assert np.allclose(uniform_bar_grid(0.7, 120.0, 4), [0, 0.7])

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            uniform_bar_grid(0.0, 120.0, 4)
        with pytest.raises(ValueError):
            uniform_bar_grid(5.0, -1.0, 4)
