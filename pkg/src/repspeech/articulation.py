"""Formant estimation and spectral moments.

Formants come from per-frame Burg linear prediction on a signal resampled
to twice the formant ceiling: polynomial roots above the real axis map to
candidate resonances, and the in-band ones are kept in ascending order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer, resample
from .dsp import lpc_burg, window_samples
from .errors import NoVoicedFrames, SignalTooShort, SilentSignal
from .phonation import PitchTrack, pre_emphasize


@dataclass(frozen=True)
class FormantParams:
    ceiling: float = 5500.0
    n_formants: int = 5
    window_len: float = 0.025
    step: float = 0.010
    pre_emphasis_from: float = 50.0
    max_bandwidth: float = 700.0  # broad spurious poles are not resonances

    @property
    def lpc_order(self) -> int:
        return 2 * self.n_formants


@dataclass(frozen=True)
class FormantTrack:
    """Per-frame first and second formants with validity flags."""

    times: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    valid: np.ndarray
    params_used: FormantParams

    def slice(self, tmin: float, tmax: float) -> "FormantTrack":
        keep = (self.times >= tmin) & (self.times <= tmax)
        return FormantTrack(self.times[keep], self.f1[keep], self.f2[keep], self.valid[keep], self.params_used)

    def means(self) -> tuple[float | None, float | None]:
        """Mean F1/F2 over valid frames, or None when no frame is valid."""
        if not np.any(self.valid):
            return None, None
        return float(np.mean(self.f1[self.valid])), float(np.mean(self.f2[self.valid]))


def _candidate_frequencies(coeffs: np.ndarray, rate: float, params: FormantParams) -> np.ndarray:
    roots = np.roots(coeffs)
    roots = roots[np.imag(roots) > 0]
    freqs = np.angle(roots) * rate / (2.0 * math.pi)
    with np.errstate(divide="ignore"):
        bandwidths = -np.log(np.maximum(np.abs(roots), 1e-12)) * rate / math.pi
    keep = (freqs > 50.0) & (freqs < params.ceiling - 50.0) & (bandwidths < params.max_bandwidth)
    return np.sort(freqs[keep])


def formant_track(buf: AudioBuffer, track: PitchTrack, params: FormantParams = FormantParams()) -> FormantTrack:
    """Burg-method formant analysis on the voiced frames of a recording.

    The signal is resampled to 2 x ceiling, pre-emphasized, and analyzed in
    gaussian-windowed frames.  A frame is valid when at least two in-band
    resonances survive; it then contributes F1 and F2 in ascending order.
    """
    if not np.any(track.voiced):
        raise NoVoicedFrames("formant analysis needs voiced frames")
    analysis_rate = int(round(2.0 * params.ceiling))
    y = resample(buf.signal, buf.sample_rate, analysis_rate)
    y = pre_emphasize(y, params.pre_emphasis_from, analysis_rate)
    win_n = int(round(2.0 * params.window_len * analysis_rate))
    step_n = max(1, int(round(params.step * analysis_rate)))
    if len(y) < win_n:
        raise SignalTooShort("buffer shorter than one formant frame")
    window = window_samples("gaussian", win_n)
    half = win_n // 2
    centers = np.arange(half, len(y) - (win_n - half) + 1, step_n)
    voiced = track.voiced_at_many(centers / analysis_rate)

    times, f1s, f2s, valids = [], [], [], []
    for c in centers[voiced]:
        t = c / analysis_rate
        seg = y[c - half : c - half + win_n]
        seg = (seg - seg.mean()) * window
        if not np.any(seg):
            continue
        coeffs = lpc_burg(seg, params.lpc_order)
        freqs = _candidate_frequencies(coeffs, analysis_rate, params)
        times.append(t)
        if len(freqs) >= 2:
            f1s.append(freqs[0])
            f2s.append(freqs[1])
            valids.append(True)
        else:
            f1s.append(0.0)
            f2s.append(0.0)
            valids.append(False)
    if not times:
        raise NoVoicedFrames("no voiced frames coincide with formant frames")
    return FormantTrack(np.asarray(times), np.asarray(f1s), np.asarray(f2s), np.asarray(valids, dtype=bool), params)


@dataclass(frozen=True)
class SpectralMoments:
    gravity: float
    deviation: float


def spectral_moments(segment: AudioBuffer) -> SpectralMoments:
    """First two moments of the segment's power spectrum.

    Gravity is the power-weighted mean frequency; deviation the weighted
    standard deviation around it.  The segment is hann-windowed and
    mean-subtracted so DC leakage does not bias the moments.
    """
    x = segment.signal
    if len(x) == 0 or not np.any(x):
        raise SilentSignal("cannot take moments of a silent segment")
    x = x - x.mean()
    w = np.hanning(len(x))
    power = np.abs(np.fft.rfft(x * w)) ** 2
    total = float(np.sum(power))
    if total <= 0.0:
        raise SilentSignal("segment carries no spectral energy")
    freqs = np.fft.rfftfreq(len(x), 1.0 / segment.sample_rate)
    gravity = float(np.sum(freqs * power) / total)
    deviation = math.sqrt(float(np.sum((freqs - gravity) ** 2 * power) / total))
    return SpectralMoments(gravity, deviation)
