import numpy as np
import pytest

from lpwpe import (MultichannelTimeSignal, PredictionDelayMatrix, Spectrogram,
                   StftConfig, TimeSignal,
                   WpeConfig, build_delayed_convolution, run_wpe,
                   solve_weighted_ls, update_weights)
from lpwpe.signals import analyze_channels
from lpwpe.wpe import lp_cost, smoothed_lp_cost

FS = 16000


def spec_from_grid(grid, shift=256):
    return Spectrogram(np.asarray(grid, dtype=complex), shift, FS)


def random_specs(rng, M, F, N):
    return [spec_from_grid(rng.standard_normal((F, N))
                           + 1j * rng.standard_normal((F, N)))
            for _ in range(M)]


def test_config_validation():
    with pytest.raises(ValueError):
        WpeConfig(p=3.0)
    with pytest.raises(ValueError):
        WpeConfig(p=0.0)
    with pytest.raises(ValueError):
        WpeConfig(filter_length=0)
    with pytest.raises(ValueError):
        WpeConfig(iterations=-1)
    with pytest.raises(ValueError):
        WpeConfig(epsilon=0.0)


def test_build_matrix_single_channel_single_tap():
    # one channel, one tap, delay 1: column is the input shifted down by one
    spec = spec_from_grid([[1.0, 2.0, 3.0, 4.0]])
    X = build_delayed_convolution([spec], np.array([1]), 1, 0)
    np.testing.assert_array_equal(X, np.array([[0], [1], [2], [3]], dtype=complex))


def test_build_matrix_brute_force():
    rng = np.random.default_rng(2)
    M, L, N = 2, 2, 6
    taus = np.array([1, 2])
    specs = random_specs(rng, M, 3, N)
    for f in range(3):
        X = build_delayed_convolution(specs, taus, L, f)
        assert X.shape == (N, M * L)
        for n in range(N):
            for m in range(M):
                for l in range(L):
                    src = n - taus[m] - l
                    want = specs[m].bins[f, src] if src >= 0 else 0.0
                    assert X[n, m * L + l] == want


def test_build_matrix_rejects_short_utterance():
    spec = spec_from_grid(np.ones((2, 5)))
    with pytest.raises(ValueError, match="utterance too short"):
        build_delayed_convolution([spec], np.array([2]), 3, 0)


def test_solve_weighted_ls_matches_explicit_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(25):
        N, K = 40, 6
        X = rng.standard_normal((N, K)) + 1j * rng.standard_normal((N, K))
        x = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        w = rng.uniform(0.1, 5.0, N)
        g = solve_weighted_ls(X, x, w, ridge=0.0)
        # oracle: whiten both sides by 1/sqrt(w), then ordinary least squares
        sw = 1.0 / np.sqrt(w)
        oracle = np.linalg.lstsq(X * sw[:, None], x * sw, rcond=None)[0]
        worst = max(worst, np.linalg.norm(g - oracle) / np.linalg.norm(oracle))
    assert worst < 1e-10


def test_solve_weighted_ls_zero_system():
    g = solve_weighted_ls(np.zeros((10, 3), dtype=complex),
                          np.zeros(10, dtype=complex), np.ones(10))
    np.testing.assert_array_equal(g, np.zeros(3))


def test_update_weights_values():
    d = np.array([0.0, 1.0, 2.0], dtype=complex)
    eps = 1e-7
    np.testing.assert_allclose(update_weights(d, 0.5, eps),
                               np.array([0.0, 1.0, 2.0 ** 1.5]) + eps)
    # p = 2 gives uniform weights, reducing IRLS to plain least squares
    np.testing.assert_allclose(update_weights(d, 2.0, eps),
                               np.ones(3) + eps)
    with pytest.raises(ValueError):
        update_weights(d, 2.5, eps)
    with pytest.raises(ValueError):
        update_weights(d, 0.5, 0.0)


def test_run_wpe_zero_iterations_is_identity(reverb_specs, uniform_delays):
    cfg = WpeConfig()
    res = run_wpe(reverb_specs, 0, uniform_delays, cfg, iterations_override=0)
    np.testing.assert_array_equal(res.output.bins, reverb_specs[0].bins)
    assert res.iterations_run == 0
    assert len(res.cost_trace) == 1
    np.testing.assert_array_equal(res.filters, 0)


def test_run_wpe_p2_single_iteration_equals_plain_ls():
    rng = np.random.default_rng(9)
    specs = random_specs(rng, 2, 4, 60)
    delays = PredictionDelayMatrix.uniform(2, 2)
    cfg = WpeConfig(filter_length=3, p=2.0, epsilon=1e-12, iterations=1)
    res = run_wpe(specs, 1, delays, cfg)
    for f in range(4):
        X = build_delayed_convolution(specs, delays.tau[:, 1], 3, f)
        g = np.linalg.lstsq(X, specs[1].bins[f], rcond=None)[0]
        d = specs[1].bins[f] - X @ g
        np.testing.assert_allclose(res.output.bins[f], d, atol=1e-8)


def test_run_wpe_gain_equivariance():
    # holds when the epsilon weight floor is negligible against |d|^(2-p),
    # so use grids without exactly silent frames
    rng = np.random.default_rng(21)
    specs = random_specs(rng, 3, 16, 80)
    delays = PredictionDelayMatrix.uniform(3, 2)
    cfg = WpeConfig(filter_length=4, iterations=3, epsilon=1e-12)
    base = run_wpe(specs, 0, delays, cfg)
    alpha = 0.37 - 1.9j
    scaled_specs = [Spectrogram(alpha * s.bins, s.shift, s.sample_rate,
                                s.signal_length) for s in specs]
    scaled = run_wpe(scaled_specs, 0, delays, cfg)
    rel = (np.linalg.norm(scaled.output.bins - alpha * base.output.bins)
           / np.linalg.norm(base.output.bins) / abs(alpha))
    assert rel < 1e-6


def test_run_wpe_frequency_permutation(reverb_specs, uniform_delays):
    # bins are processed independently, so permuting the frequency axis of
    # every input permutes the output the same way
    cfg = WpeConfig(iterations=2)
    rng = np.random.default_rng(4)
    perm = rng.permutation(reverb_specs[0].bins.shape[0])
    base = run_wpe(reverb_specs, 0, uniform_delays, cfg)
    permuted_specs = [Spectrogram(s.bins[perm], s.shift, s.sample_rate,
                                  s.signal_length) for s in reverb_specs]
    permuted = run_wpe(permuted_specs, 0, uniform_delays, cfg)
    np.testing.assert_allclose(permuted.output.bins, base.output.bins[perm],
                               rtol=1e-12, atol=1e-12)


def test_run_wpe_reference_out_of_range(reverb_specs, uniform_delays):
    with pytest.raises(ValueError):
        run_wpe(reverb_specs, 4, uniform_delays, WpeConfig())


def test_smoothed_cost_decreases_on_reverberant_scene(reverb_specs,
                                                      uniform_delays):
    for p in (0.05, 0.5, 0.9):
        cfg = WpeConfig(p=p)
        res = run_wpe(reverb_specs, 0, uniform_delays, cfg)
        trace = res.smoothed_cost_trace
        assert len(trace) == cfg.iterations + 1
        assert np.all(np.diff(trace) <= 1e-9 * trace[0])


def test_anechoic_inputs_pass_through():
    # With no reverberation the predictor has nothing to explain: frames
    # tau >= frame_size/shift back share no samples with the current frame,
    # so only least-squares overfitting (about K/N of the energy, here well
    # under the tolerance) is removed.
    rng = np.random.default_rng(13)
    cfg_stft = StftConfig()
    dry = rng.standard_normal(40 * FS) * 0.1
    ch0 = TimeSignal(dry, FS)
    ch1 = TimeSignal(np.roll(dry, 40) * 0.8, FS)
    specs = analyze_channels(MultichannelTimeSignal((ch0, ch1)), cfg_stft)
    delays = PredictionDelayMatrix.uniform(2, 4)
    cfg = WpeConfig(filter_length=1, base_delay=4)
    res = run_wpe(specs, 0, delays, cfg)
    rel = (np.linalg.norm(res.output.bins - specs[0].bins)
           / np.linalg.norm(specs[0].bins))
    assert rel < 0.05


def test_lp_cost_values():
    bins = np.array([3.0, 4.0], dtype=complex)
    assert lp_cost(bins, 1.0) == pytest.approx(7.0)
    assert lp_cost(bins, 2.0) == pytest.approx(25.0)
    assert smoothed_lp_cost(bins, 2.0, 1e-7) == pytest.approx(25.0)
    # smoothed cost upper-bounds the raw cost and converges to it as eps -> 0
    raw = lp_cost(bins, 0.5)
    assert smoothed_lp_cost(bins, 0.5, 1e-7) >= raw
    assert smoothed_lp_cost(bins, 0.5, 1e-12) == pytest.approx(raw, rel=1e-9)
