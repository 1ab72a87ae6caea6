"""Numerical kernels: framing, spectra, autocorrelation, Burg, cepstra."""

import numpy as np
import pytest

from repspeech.audio_io import AudioBuffer
from repspeech.dsp import (
    Frame,
    autocorrelation_normalized,
    frame_signal,
    lpc_burg,
    next_pow2,
    power_spectrum,
    real_cepstrum,
    robust_line,
    sinc_peak,
    window_samples,
)
from repspeech.errors import OrderTooHigh, SignalTooShort, ZeroEnergyFrame
from repspeech.synth import synth_pulse_train

RATE = 16000


def pulse_frame(f0=200.0, length=0.060, window="hann"):
    buf = synth_pulse_train(f0, length + 0.01, rate=RATE)
    return frame_signal(buf, length, 0.010, window)[0]


def noise_frame(seed, length=0.060, window="hann"):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(int(length * RATE))
    buf = AudioBuffer.mono(0.5 * x / np.max(np.abs(x)), RATE)
    return frame_signal(buf, length, length, window)[0]


# -- framing -------------------------------------------------------------------


def test_frame_count_arithmetic():
    buf = AudioBuffer.mono(np.zeros(16000), RATE)
    frames = frame_signal(buf, 0.040, 0.010)
    assert len(frames) == 97
    assert frames[0].start_time == 0.0
    assert frames[0].center_time == pytest.approx(0.020)
    assert frames[1].start_time == pytest.approx(0.010)


def test_single_frame_when_length_equals_duration():
    buf = AudioBuffer.mono(np.ones(800) * 0.1, RATE)
    frames = frame_signal(buf, 0.050, 0.010)
    assert len(frames) == 1


def test_too_short_signal():
    buf = AudioBuffer.mono(np.zeros(480), RATE)
    with pytest.raises(SignalTooShort):
        frame_signal(buf, 0.040, 0.010)


def test_frames_are_windowed():
    buf = AudioBuffer.mono(np.ones(800) * 0.5, RATE)
    frame = frame_signal(buf, 0.050, 0.010, "hann")[0]
    np.testing.assert_allclose(frame.samples, 0.5 * np.hanning(800))


# -- power spectrum --------------------------------------------------------------


def test_peak_bin_at_tone_frequency():
    t = np.arange(1024) / RATE
    buf = AudioBuffer.mono(0.5 * np.sin(2 * np.pi * 1000 * t), RATE)
    frame = frame_signal(buf, 1024 / RATE, 0.010, "hann")[0]
    spec = power_spectrum(frame, 1024)
    assert abs(spec.bin_freqs[np.argmax(spec.magnitudes)] - 1000) <= spec.resolution


def test_zero_frame_gives_zero_spectrum():
    frame = Frame(np.zeros(512), 0.0, "rectangular", RATE)
    spec = power_spectrum(frame, 512)
    assert not np.any(spec.magnitudes)


def test_parseval_on_white_noise():
    for seed in range(5):
        frame = noise_frame(seed)
        spec = power_spectrum(frame, next_pow2(len(frame.samples)))
        energy = np.sum(frame.samples**2)
        assert np.sum(spec.magnitudes) == pytest.approx(energy, rel=1e-6)


def test_fft_size_validation():
    frame = noise_frame(0)
    with pytest.raises(ValueError):
        power_spectrum(frame, 500)  # not a power of two
    with pytest.raises(ValueError):
        power_spectrum(frame, 512)  # smaller than the frame


def test_fft_linearity():
    rng = np.random.default_rng(21)
    x = rng.standard_normal(512)
    y = rng.standard_normal(512)
    a, b = 2.5, -0.75
    combined = np.fft.rfft(a * x + b * y)
    separate = a * np.fft.rfft(x) + b * np.fft.rfft(y)
    np.testing.assert_allclose(combined, separate, rtol=1e-6, atol=1e-9)


# -- autocorrelation -------------------------------------------------------------


def test_periodic_frame_peak_at_period():
    frame = pulse_frame(200.0)
    r = autocorrelation_normalized(frame)
    lag = RATE // 200
    assert r[0] == pytest.approx(1.0)
    assert r[lag] >= 0.99


def test_white_noise_autocorrelation_low():
    lag_1ms = RATE // 1000
    for seed in range(50):
        r = autocorrelation_normalized(noise_frame(seed))
        assert np.max(r[lag_1ms:]) < 0.3


def test_zero_energy_frame_raises():
    frame = Frame(np.zeros(480), 0.0, "hann", RATE)
    with pytest.raises(ZeroEnergyFrame):
        autocorrelation_normalized(frame)


def test_matches_brute_force_autocorrelation():
    """Window-compensated FFT path equals the direct O(n^2) definition."""
    rng = np.random.default_rng(11)
    n = 256
    window = window_samples("hann", n)
    x = rng.standard_normal(n)
    frame = Frame(x * window, 0.0, "hann", RATE)
    r = autocorrelation_normalized(frame, max_lag=64)
    xw = x * window
    rx = np.array([np.dot(xw[: n - k], xw[k:]) for k in range(65)])
    rw = np.array([np.dot(window[: n - k], window[k:]) for k in range(65)])
    expected = np.clip((rx / rx[0]) / (rw / rw[0]), -1.0, 1.0)
    np.testing.assert_allclose(r, expected, atol=1e-10)


# -- Burg linear prediction --------------------------------------------------------


def test_recovers_known_ar2_filter():
    # poles at 0.9 e^{+-j 0.3 pi}: a1 = -2 r cos(theta), a2 = r^2
    a1 = -2 * 0.9 * np.cos(0.3 * np.pi)
    a2 = 0.81
    rng = np.random.default_rng(5)
    x = rng.standard_normal(8192)
    from scipy.signal import lfilter

    y = lfilter([1.0], [1.0, a1, a2], x)
    coeffs = lpc_burg(y[1000:5096], 2)
    assert coeffs[1] == pytest.approx(a1, abs=1e-2)
    assert coeffs[2] == pytest.approx(a2, abs=1e-2)


def test_burg_filter_always_stable():
    for seed in range(20):
        frame = noise_frame(seed)
        coeffs = lpc_burg(frame.samples, 10)
        roots = np.roots(coeffs)
        assert np.all(np.abs(roots) < 1.0)


def test_order_too_high():
    with pytest.raises(OrderTooHigh):
        lpc_burg(np.ones(8), 8)


# -- real cepstrum ---------------------------------------------------------------


def test_pulse_train_cepstral_peak_at_period():
    frame = pulse_frame(200.0, window="hann")
    quefrencies, ceps = real_cepstrum(frame, 2048)
    lo = int(0.002 * RATE)
    peak_q = quefrencies[lo + np.argmax(ceps[lo:])]
    assert abs(peak_q - 0.005) <= 1.0 / RATE


def test_noise_cepstrum_has_no_prominent_peak():
    lo = int(0.001 * RATE)
    for seed in range(40):
        quefrencies, ceps = real_cepstrum(noise_frame(seed), 2048)
        slope, intercept = robust_line(quefrencies[lo:], ceps[lo:])
        residual = ceps[lo:] - (intercept + slope * quefrencies[lo:])
        assert np.max(residual) < 5.0


def test_cepstrum_zero_frame():
    frame = Frame(np.zeros(480), 0.0, "hann", RATE)
    with pytest.raises(ZeroEnergyFrame):
        real_cepstrum(frame, 512)


# -- helpers ----------------------------------------------------------------------


def test_robust_line_exact_and_outlier_resistant():
    x = np.linspace(0, 1, 200)
    y = 3.0 * x + 1.0
    slope, intercept = robust_line(x, y)
    assert slope == pytest.approx(3.0, abs=1e-9)
    assert intercept == pytest.approx(1.0, abs=1e-9)
    y_out = y.copy()
    y_out[::20] += 100.0  # 5% wild outliers
    slope, intercept = robust_line(x, y_out)
    assert slope == pytest.approx(3.0, abs=0.2)


def test_sinc_peak_recovers_fractional_maximum():
    # band-limited bump: samples of cos around a fractional peak location
    true_peak = 100.37
    n = np.arange(200)
    y = np.cos(2 * np.pi * 0.11 * (n - true_peak))
    loc, val = sinc_peak(y, 100)
    assert loc == pytest.approx(true_peak, abs=0.01)
    assert val == pytest.approx(1.0, abs=1e-4)


def test_gaussian_window_edges_near_zero():
    w = window_samples("gaussian", 256)
    assert w[0] == pytest.approx(0.0, abs=1e-5)
    assert w.max() <= 1.0
    with pytest.raises(ValueError):
        window_samples("blackman", 64)
