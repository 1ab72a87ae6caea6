"""Shared numerical kernels: framing, windows, spectra, autocorrelation,
Burg linear prediction, and real cepstra.

Everything here is a pure function over numpy arrays; the feature modules
compose these into the actual extractors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer
from .errors import OrderTooHigh, SignalTooShort, ZeroEnergyFrame

WINDOW_KINDS = ("rectangular", "hann", "gaussian")


def next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def window_samples(kind: str, n: int) -> np.ndarray:
    """Analysis window of length n.

    The gaussian window follows the e^-12 edge-value convention in which the
    effective analysis width is half the physical window length; that
    property is what makes autocorrelation window compensation accurate.
    """
    if kind == "rectangular":
        return np.ones(n)
    if kind == "hann":
        return np.hanning(n)
    if kind == "gaussian":
        edge = np.exp(-12.0)
        x = (np.arange(n) - 0.5 * (n - 1)) / (0.5 * n)
        return (np.exp(-12.0 * x * x) - edge) / (1.0 - edge)
    raise ValueError(f"unknown window kind {kind!r}")


@dataclass(frozen=True)
class Frame:
    """One windowed analysis frame cut from a mono buffer."""

    samples: np.ndarray
    start_time: float
    window_kind: str
    rate: int

    @property
    def center_time(self) -> float:
        return self.start_time + 0.5 * len(self.samples) / self.rate


@dataclass(frozen=True)
class Spectrum:
    """One-sided power spectrum with its frequency axis."""

    bin_freqs: np.ndarray
    magnitudes: np.ndarray
    resolution: float


def frame_signal(buf: AudioBuffer, frame_len: float, hop: float, window_kind: str = "hann") -> list[Frame]:
    """Cut a mono buffer into windowed frames.

    Frame count is floor((duration - frame_len) / hop) + 1 with all
    arithmetic done in samples; raises SignalTooShort when the buffer is
    shorter than one frame.
    """
    if frame_len <= 0 or hop <= 0:
        raise ValueError("frame_len and hop must be positive")
    x = buf.signal
    n = len(x)
    rate = buf.sample_rate
    frame_n = int(round(frame_len * rate))
    hop_n = int(round(hop * rate))
    if frame_n < 1 or hop_n < 1:
        raise ValueError("frame_len and hop too small for the sample rate")
    if n < frame_n:
        raise SignalTooShort(f"{n} samples < one {frame_n}-sample frame")
    window = window_samples(window_kind, frame_n)
    count = (n - frame_n) // hop_n + 1
    frames = []
    for i in range(count):
        start = i * hop_n
        frames.append(Frame(x[start : start + frame_n] * window, start / rate, window_kind, rate))
    return frames


def power_spectrum(frame: Frame, fft_size: int) -> Spectrum:
    """One-sided power spectrum satisfying Parseval's identity.

    Bin powers sum to the windowed-frame energy; DC and Nyquist bins are
    counted once, interior bins twice.
    """
    n = len(frame.samples)
    if fft_size < n or fft_size & (fft_size - 1):
        raise ValueError("fft_size must be a power of two >= frame length")
    spec = np.fft.rfft(frame.samples, fft_size)
    power = np.abs(spec) ** 2 / fft_size
    fold = np.full(len(power), 2.0)
    fold[0] = 1.0
    if fft_size % 2 == 0:
        fold[-1] = 1.0
    power *= fold
    freqs = np.fft.rfftfreq(fft_size, 1.0 / frame.rate)
    return Spectrum(freqs, power, frame.rate / fft_size)


def autocorr_normalized_core(windowed: np.ndarray, window: np.ndarray, max_lag: int) -> np.ndarray:
    """Window-compensated normalized autocorrelation of a windowed frame.

    Computes r(lag) of the windowed signal via FFT, normalizes r(0) = 1,
    then divides by the window's own normalized autocorrelation so the
    result estimates the autocorrelation of the underlying signal.  Values
    are clipped to [-1, 1].
    """
    n = len(windowed)
    if max_lag >= n:
        raise ValueError("max_lag must be below the frame length")
    energy = float(np.dot(windowed, windowed))
    if energy <= 0.0:
        raise ZeroEnergyFrame("all-zero frame")
    nfft = next_pow2(n + max_lag + 1)
    spec = np.fft.rfft(windowed, nfft)
    rx = np.fft.irfft(np.abs(spec) ** 2, nfft)[: max_lag + 1]
    rx /= rx[0]
    wspec = np.fft.rfft(window, nfft)
    rw = np.fft.irfft(np.abs(wspec) ** 2, nfft)[: max_lag + 1]
    rw /= rw[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(rw > 1e-12, rx / rw, 0.0)
    return np.clip(r, -1.0, 1.0)


def autocorrelation_normalized(frame: Frame, max_lag: int | None = None) -> np.ndarray:
    """Normalized autocorrelation of a windowed Frame; r[0] is exactly 1."""
    n = len(frame.samples)
    if max_lag is None:
        max_lag = n // 2
    window = window_samples(frame.window_kind, n)
    return autocorr_normalized_core(frame.samples, window, max_lag)


def lpc_burg(samples, order: int) -> np.ndarray:
    """Burg-method linear prediction coefficients [1, a1, ..., a_order].

    Accepts a Frame or a raw array.  The reflection coefficients are
    bounded by 1 in magnitude, so the resulting all-pole filter is stable
    for any input.
    """
    if isinstance(samples, Frame):
        samples = samples.samples
    x = np.asarray(samples, dtype=np.float64)
    n = len(x)
    if order < 2:
        raise ValueError("order must be at least 2")
    if n <= order:
        raise OrderTooHigh(f"order {order} needs more than {order} samples, got {n}")
    if not np.any(x):
        raise ZeroEnergyFrame("all-zero frame")
    a = np.zeros(order + 1)
    a[0] = 1.0
    fwd = x[1:].copy()
    bwd = x[:-1].copy()
    for i in range(order):
        den = float(np.dot(fwd, fwd) + np.dot(bwd, bwd))
        k = 0.0 if den <= np.finfo(float).tiny else -2.0 * float(np.dot(fwd, bwd)) / den
        prev = a.copy()
        a[1 : i + 2] = prev[1 : i + 2] + k * prev[i::-1]
        new_fwd = fwd[1:] + k * bwd[1:]
        bwd = bwd[:-1] + k * fwd[:-1]
        fwd = new_fwd
    return a


def real_cepstrum(frame: Frame, fft_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Real cepstrum of the frame's log-power (dB) spectrum.

    Returns (quefrencies in seconds, cepstrum values in dB) over the
    one-sided quefrency axis up to fft_size / (2 * rate).
    """
    n = len(frame.samples)
    if fft_size < n or fft_size & (fft_size - 1):
        raise ValueError("fft_size must be a power of two >= frame length")
    if not np.any(frame.samples):
        raise ZeroEnergyFrame("all-zero frame")
    power = np.abs(np.fft.rfft(frame.samples, fft_size)) ** 2
    floor = power.max() * 1e-12
    level_db = 10.0 * np.log10(np.maximum(power, floor))
    ceps = np.fft.irfft(level_db, fft_size)[: fft_size // 2 + 1]
    quefrencies = np.arange(fft_size // 2 + 1) / frame.rate
    return quefrencies, ceps


def log_db_cepstrogram(frames: np.ndarray, fft_size: int) -> np.ndarray:
    """Batched real cepstra (rows = frames) of dB log-power spectra."""
    power = np.abs(np.fft.rfft(frames, fft_size, axis=1)) ** 2
    floors = power.max(axis=1, keepdims=True) * 1e-12
    floors = np.maximum(floors, np.finfo(float).tiny)
    level_db = 10.0 * np.log10(np.maximum(power, floors))
    return np.fft.irfft(level_db, fft_size, axis=1)[:, : fft_size // 2 + 1]


def parabolic_peak(y: np.ndarray, k: int) -> tuple[float, float]:
    """Refine the local maximum at integer index k by parabolic interpolation.

    Returns (offset in samples relative to k, interpolated peak value).
    Falls back to the sample itself at array edges or degenerate curvature.
    """
    if k <= 0 or k >= len(y) - 1:
        return 0.0, float(y[k])
    denom = 2.0 * y[k] - y[k - 1] - y[k + 1]
    if denom <= 0:
        return 0.0, float(y[k])
    delta = 0.5 * (y[k + 1] - y[k - 1]) / denom
    delta = float(np.clip(delta, -0.5, 0.5))
    value = y[k] + 0.25 * (y[k + 1] - y[k - 1]) * delta
    return delta, float(value)


_SINC_KERNELS: dict[tuple[float, int], tuple[np.ndarray, np.ndarray]] = {}


def _sinc_kernel(half_width: float, depth: int) -> tuple[np.ndarray, np.ndarray]:
    key = (half_width, depth)
    if key not in _SINC_KERNELS:
        tau_rel = np.linspace(-half_width, half_width, int(40 * half_width) + 1)
        idx_rel = np.arange(-depth, depth + 1, dtype=np.float64)
        d = tau_rel[:, None] - idx_rel[None, :]
        w = np.sinc(d) * (0.5 + 0.5 * np.cos(np.pi * np.clip(d / depth, -1.0, 1.0)))
        _SINC_KERNELS[key] = (tau_rel, w)
    return _SINC_KERNELS[key]


def sinc_peak(y: np.ndarray, k: int, half_width: float = 1.0, depth: int = 30) -> tuple[float, float]:
    """Refine a local maximum of a band-limited sequence near index k.

    The sequence is interpolated with a cosine-tapered sinc kernel over
    ``depth`` neighbors on each side, scanned on a fine grid around k, and
    the best fine-grid point is polished parabolically.  Returns
    (refined index, refined value).  Needed because e.g. autocorrelation
    peaks of strongly harmonic signals are only 2-3 samples wide and a
    plain parabola badly underestimates them at fractional lags.
    """
    if k - depth < 0 or k + depth + 1 > len(y):
        delta, value = parabolic_peak(y, k)
        return k + delta, value
    tau_rel, w = _sinc_kernel(half_width, depth)
    vals = w @ y[k - depth : k + depth + 1]
    m = int(np.argmax(vals))
    if 0 < m < len(vals) - 1:
        denom = 2.0 * vals[m] - vals[m - 1] - vals[m + 1]
        if denom > 0:
            delta = 0.5 * (vals[m + 1] - vals[m - 1]) / denom
            delta = float(np.clip(delta, -1.0, 1.0))
            step = tau_rel[1] - tau_rel[0]
            value = vals[m] + 0.25 * (vals[m + 1] - vals[m - 1]) * delta
            return float(k + tau_rel[m] + delta * step), float(value)
    return float(k + tau_rel[m]), float(vals[m])


def robust_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Median-of-pairwise-slopes straight-line fit, insensitive to outliers.

    Uses all point pairs when the input is small and a deterministic
    half-offset pairing otherwise; the intercept is the median residual.
    Returns (slope, intercept).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(x)
    if n < 2:
        raise ValueError("need at least two points for a line fit")
    if n <= 64:
        ii, jj = np.triu_indices(n, k=1)
        dx = x[jj] - x[ii]
        keep = dx != 0
        slopes = (y[jj[keep]] - y[ii[keep]]) / dx[keep]
    else:
        h = n // 2
        dx = x[h:] - x[: n - h]
        keep = dx != 0
        slopes = (y[h:][keep] - y[: n - h][keep]) / dx[keep]
    if len(slopes) == 0:
        raise ValueError("degenerate abscissa")
    slope = float(np.median(slopes))
    intercept = float(np.median(y - slope * x))
    return slope, intercept
