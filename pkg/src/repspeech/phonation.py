"""Pitch, intensity, harmonicity, spectral slope, and cepstral peak features.

Pitch uses the classic short-term autocorrelation method: per frame, the
window-compensated normalized autocorrelation yields several period
candidates plus an unvoiced candidate, and a dynamic-programming path
through the candidates minimizes octave jumps and voicing flips.  The
public entry point runs it twice, adapting the search range to the
speaker's quartiles, which avoids the false high readings that a fixed
wide ceiling produces.

Per-frame work is batched and processed in bounded chunks so multi-minute
recordings stay within a few hundred MB.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.ndimage import uniform_filter1d

from .audio_io import AudioBuffer
from .dsp import (
    _sinc_kernel,
    log_db_cepstrogram,
    next_pow2,
    window_samples,
)
from .errors import InsufficientBandwidth, NoVoicedFrames, SignalTooShort, SilentSignal

DB_REF_PRESSURE = 2e-5  # full-scale amplitude 1.0 is treated as 1.0 reference units

_CHUNK_FRAMES = 2048  # frames processed per batch to bound memory


# ---------------------------------------------------------------------------
# pitch


@dataclass(frozen=True)
class PitchParams:
    """Autocorrelation pitch settings; costs follow common analysis defaults."""

    floor: float = 75.0
    ceiling: float = 600.0
    time_step: float = 0.010
    periods_per_window: float = 3.0
    max_candidates: int = 15
    silence_threshold: float = 0.03
    voicing_threshold: float = 0.45
    octave_cost: float = 0.01
    octave_jump_cost: float = 0.35
    voiced_unvoiced_cost: float = 0.14

    def __post_init__(self) -> None:
        if not 0 < self.floor < self.ceiling:
            raise ValueError("need 0 < floor < ceiling")


@dataclass(frozen=True)
class PitchTrack:
    """Frame times and fundamental frequency; f0 is 0 on unvoiced frames."""

    times: np.ndarray
    f0: np.ndarray
    params_used: PitchParams

    @property
    def voiced(self) -> np.ndarray:
        return self.f0 > 0

    @property
    def voiced_f0(self) -> np.ndarray:
        return self.f0[self.voiced]

    @property
    def time_step(self) -> float:
        return self.params_used.time_step

    def slice(self, tmin: float, tmax: float) -> "PitchTrack":
        keep = (self.times >= tmin) & (self.times <= tmax)
        return PitchTrack(self.times[keep], self.f0[keep], self.params_used)

    def voiced_at_many(self, ts: np.ndarray) -> np.ndarray:
        """Voicing state of the nearest frame (within half a step) per query time."""
        ts = np.asarray(ts, dtype=np.float64)
        if len(self.times) == 0:
            return np.zeros(ts.shape, dtype=bool)
        right = np.searchsorted(self.times, ts)
        left = np.clip(right - 1, 0, len(self.times) - 1)
        right = np.clip(right, 0, len(self.times) - 1)
        pick_right = np.abs(self.times[right] - ts) < np.abs(self.times[left] - ts)
        nearest = np.where(pick_right, right, left)
        close = np.abs(self.times[nearest] - ts) <= 0.5 * self.time_step + 1e-9
        return close & (self.f0[nearest] > 0)

    def voiced_at(self, t: float) -> bool:
        return bool(self.voiced_at_many(np.array([t]))[0])


def _frame_centers(n: int, win_n: int, step_n: int) -> np.ndarray:
    half = win_n // 2
    last = n - (win_n - half)
    if last < half:
        return np.zeros(0, dtype=int)
    return np.arange(half, last + 1, step_n)


def _gather_frames(x: np.ndarray, centers: np.ndarray, win_n: int) -> np.ndarray:
    half = win_n // 2
    idx = centers[:, None] - half + np.arange(win_n)[None, :]
    return x[idx]


def _window_autocorr(window: np.ndarray, nfft: int, max_lag: int) -> np.ndarray:
    spec = np.fft.rfft(window, nfft)
    rw = np.fft.irfft(np.abs(spec) ** 2, nfft)[: max_lag + 1]
    return rw / rw[0]


def pitch_track(buf: AudioBuffer, params: PitchParams) -> PitchTrack:
    """Single-pass autocorrelation pitch analysis over a canonical buffer."""
    x = buf.signal
    rate = buf.sample_rate
    eff_len = params.periods_per_window / params.floor
    win_n = int(round(2.0 * eff_len * rate))  # gaussian window: physical = 2x effective
    if win_n < 8 or win_n > len(x):
        raise SignalTooShort(f"signal shorter than one {eff_len * 2:.3f} s pitch window")
    step_n = max(1, int(round(params.time_step * rate)))
    centers = _frame_centers(len(x), win_n, step_n)
    if len(centers) == 0:
        raise SignalTooShort("no complete pitch frames fit the signal")

    lag_min = max(2, int(math.floor(rate / params.ceiling)))
    lag_max = min(win_n // 2 - 2, int(math.ceil(rate / params.floor)))
    if lag_max <= lag_min + 1:
        raise ValueError("pitch range too narrow for this sample rate")
    lag_ext = min(win_n - 2, lag_max + 32)  # headroom for sinc interpolation

    window = window_samples("gaussian", win_n)
    nfft = next_pow2(win_n + lag_ext + 1)
    rw = _window_autocorr(window, nfft, lag_ext)
    global_peak = float(np.max(np.abs(x))) if len(x) else 0.0

    n_frames = len(centers)
    n_cand = params.max_candidates
    freqs_mat = np.zeros((n_frames, n_cand))
    strengths_mat = np.full((n_frames, n_cand), -np.inf)
    for start in range(0, n_frames, _CHUNK_FRAMES):
        sub = centers[start : start + _CHUNK_FRAMES]
        frames = _gather_frames(x, sub, win_n)
        local_peaks = np.max(np.abs(frames), axis=1)
        frames = (frames - frames.mean(axis=1, keepdims=True)) * window
        spec = np.fft.rfft(frames, nfft, axis=1)
        ac = np.fft.irfft(np.abs(spec) ** 2, nfft, axis=1)[:, : lag_ext + 1]
        r0 = ac[:, 0].copy()
        dead = r0 <= 0
        r0[dead] = 1.0
        r = np.clip(ac / r0[:, None] / rw[None, :], -1.0, 1.0)
        _chunk_candidates(
            r, dead, local_peaks, global_peak, rate, params, lag_min, lag_max,
            freqs_mat[start : start + len(sub)], strengths_mat[start : start + len(sub)],
        )

    path = _best_path(freqs_mat, strengths_mat, params)
    f0 = freqs_mat[np.arange(n_frames), path]
    return PitchTrack(centers / rate, f0, params)


_SINC_DEPTH = 30


def _chunk_candidates(r, dead, local_peaks, global_peak, rate, params, lag_min, lag_max, freqs_out, strengths_out):
    """Fill per-frame candidate frequencies/strengths for one frame chunk.

    Column 0 is the unvoiced candidate; voiced candidates are local maxima
    of the compensated autocorrelation, the strongest few refined by
    band-limited interpolation and the rest by a parabola.
    """
    vt, st = params.voicing_threshold, params.silence_threshold
    rel = np.where(dead | (global_peak <= 0), 0.0, local_peaks / max(global_peak, 1e-30))
    freqs_out[:, 0] = 0.0
    strengths_out[:, 0] = vt + np.maximum(0.0, 2.0 - rel / (st / (1.0 + vt)))

    seg = r[:, lag_min : lag_max + 1]
    mask = (seg[:, 1:-1] > seg[:, :-2]) & (seg[:, 1:-1] > seg[:, 2:]) & (seg[:, 1:-1] > 0)
    rows, cols = np.nonzero(mask)
    if len(rows) == 0:
        return
    ks = cols + lag_min + 1
    raw_vals = r[rows, ks]

    # rank candidates within each row by raw peak value
    order = np.lexsort((-raw_vals, rows))
    rows = rows[order]
    ks = ks[order]
    _uniq, starts, counts = np.unique(rows, return_index=True, return_counts=True)
    rank = np.arange(len(rows)) - np.repeat(starts, counts)
    keep = rank < params.max_candidates - 1
    rows, ks, rank = rows[keep], ks[keep], rank[keep]

    lags = ks.astype(np.float64)
    vals = np.empty(len(ks))

    # precise interpolation for the plausible winners: gather +-depth
    # neighborhoods (even-extending the autocorrelation at lag 0) and apply
    # the cached tapered-sinc kernel
    fine = rank < 5
    if np.any(fine):
        tau_rel, kernel = _sinc_kernel(1.0, _SINC_DEPTH)
        mirrored = np.concatenate([r[:, _SINC_DEPTH:0:-1], r], axis=1)
        f_rows, f_ks = rows[fine], ks[fine]
        gather = f_ks[:, None] + np.arange(2 * _SINC_DEPTH + 1)[None, :]  # shifted by +depth already
        segs = mirrored[f_rows[:, None], gather]
        interp = segs @ kernel.T  # (n_fine, n_taus)
        mi = np.argmax(interp, axis=1)
        cols_f = np.arange(len(mi))
        b_ = interp[cols_f, mi]
        a_ = interp[cols_f, np.maximum(mi - 1, 0)]
        c_ = interp[cols_f, np.minimum(mi + 1, interp.shape[1] - 1)]
        denom = 2.0 * b_ - a_ - c_
        refine = (mi > 0) & (mi < interp.shape[1] - 1) & (denom > 0)
        delta = np.zeros(len(mi))
        delta[refine] = np.clip(0.5 * (c_[refine] - a_[refine]) / denom[refine], -1.0, 1.0)
        step = tau_rel[1] - tau_rel[0]
        fine_vals = b_.copy()
        fine_vals[refine] += 0.25 * (c_[refine] - a_[refine]) * delta[refine]
        lags[fine] = f_ks + tau_rel[mi] + delta * step
        vals[fine] = fine_vals

    coarse = ~fine
    if np.any(coarse):
        c_rows, c_ks = rows[coarse], ks[coarse]
        a_ = r[c_rows, c_ks - 1]
        b_ = r[c_rows, c_ks]
        c_ = r[c_rows, c_ks + 1]
        denom = 2.0 * b_ - a_ - c_
        ok = denom > 0
        delta = np.zeros(len(c_ks))
        delta[ok] = np.clip(0.5 * (c_[ok] - a_[ok]) / denom[ok], -0.5, 0.5)
        vals_c = b_.copy()
        vals_c[ok] += 0.25 * (c_[ok] - a_[ok]) * delta[ok]
        lags[coarse] = c_ks + delta
        vals[coarse] = vals_c

    lag_s = np.clip(lags / rate, 1.0 / params.ceiling, 1.0 / params.floor)
    vals = np.minimum(vals, 1.0)
    freqs_out[rows, rank + 1] = 1.0 / lag_s
    strengths_out[rows, rank + 1] = vals - params.octave_cost * np.log2(params.floor * lag_s)


def _transition_costs(f_prev: np.ndarray, f_cur: np.ndarray, params: PitchParams) -> np.ndarray:
    """Cost matrix between candidate sets of adjacent frames.

    Unvoiced-to-unvoiced is free, a voicing flip costs the fixed penalty,
    and voiced-to-voiced costs the octave-jump weight per octave moved.
    """
    pv = f_prev > 0
    cv = f_cur > 0
    both = pv[:, None] & cv[None, :]
    cost = np.where(pv[:, None] != cv[None, :], params.voiced_unvoiced_cost, 0.0)
    safe_prev = np.where(pv, f_prev, 1.0)
    safe_cur = np.where(cv, f_cur, 1.0)
    jumps = params.octave_jump_cost * np.abs(np.log2(safe_cur[None, :] / safe_prev[:, None]))
    return np.where(both, jumps, cost)


def _best_path(freqs: np.ndarray, strengths: np.ndarray, params: PitchParams) -> np.ndarray:
    """Dynamic-programming candidate choice maximizing strength minus costs."""
    n = freqs.shape[0]
    score = strengths[0].copy()
    back = np.zeros((n, freqs.shape[1]), dtype=np.int64)
    for i in range(1, n):
        total = score[:, None] - _transition_costs(freqs[i - 1], freqs[i], params)
        back[i] = np.argmax(total, axis=0)
        score = total[back[i], np.arange(total.shape[1])] + strengths[i]
    path = np.zeros(n, dtype=np.int64)
    path[-1] = int(np.argmax(score))
    for i in range(n - 1, 0, -1):
        path[i - 1] = back[i, path[i]]
    return path


def pitch_track_two_pass(buf: AudioBuffer, explore: PitchParams | None = None) -> PitchTrack:
    """Two-pass pitch analysis with a speaker-adapted range.

    Pass 1 explores 50-600 Hz; pass 2 re-runs with floor = 0.75 x Q1 and
    ceiling = 1.5 x Q3 of the voiced pass-1 estimates.  The returned track
    records the adapted range in ``params_used``.
    """
    explore = explore or PitchParams(floor=50.0, ceiling=600.0)
    first = pitch_track(buf, explore)
    voiced = first.voiced_f0
    if voiced.size == 0:
        raise NoVoicedFrames("exploratory pass found no voicing")
    q1, q3 = np.quantile(voiced, [0.25, 0.75])
    adapted = replace(explore, floor=0.75 * float(q1), ceiling=1.5 * float(q3))
    return pitch_track(buf, adapted)


def pitch_stats(track: PitchTrack) -> tuple[float, float]:
    """Mean voiced f0 in Hz and standard deviation of the semitone contour.

    The semitone transform (12 log2 of f0 against a 100 Hz reference) makes
    the spread invariant to multiplicative scaling of the contour.
    """
    voiced = track.voiced_f0
    if voiced.size == 0:
        raise NoVoicedFrames("track has no voiced frames")
    semitones = 12.0 * np.log2(voiced / 100.0)
    return float(np.mean(voiced)), float(np.std(semitones))


# ---------------------------------------------------------------------------
# intensity


@dataclass(frozen=True)
class IntensityTrack:
    """Per-frame level in dB against the 2e-5 reference."""

    times: np.ndarray
    level_db: np.ndarray

    def slice(self, tmin: float, tmax: float) -> "IntensityTrack":
        keep = (self.times >= tmin) & (self.times <= tmax)
        return IntensityTrack(self.times[keep], self.level_db[keep])


def intensity_track(buf: AudioBuffer, frame_len: float = 0.040, hop: float = 0.010) -> IntensityTrack:
    """Hann-weighted mean-square level per frame, in dB."""
    x = buf.signal
    rate = buf.sample_rate
    win_n = int(round(frame_len * rate))
    step_n = max(1, int(round(hop * rate)))
    if len(x) < win_n:
        raise SignalTooShort("buffer shorter than one intensity frame")
    centers = _frame_centers(len(x), win_n, step_n)
    w = np.hanning(win_n)
    wsum = float(np.sum(w))
    level = np.empty(len(centers))
    for start in range(0, len(centers), _CHUNK_FRAMES):
        sub = centers[start : start + _CHUNK_FRAMES]
        frames = _gather_frames(x, sub, win_n)
        msq = (frames**2 @ w) / wsum
        level[start : start + len(sub)] = 10.0 * np.log10(np.maximum(msq, 1e-30) / DB_REF_PRESSURE**2)
    return IntensityTrack(centers / rate, level)


def _energy_mean_db(levels: np.ndarray) -> float:
    return 10.0 * math.log10(float(np.mean(10.0 ** (levels / 10.0))))


def intensity_mean(buf: AudioBuffer, track: IntensityTrack | None = None, silence_db: float = -30.0) -> float:
    """Energy-mean intensity over speech-containing frames.

    Frames more than ``silence_db`` below the loudest frame are excluded,
    so the figure shifts by exactly the applied gain and ignores lead-in
    silence.  Raises SilentSignal when nothing exceeds the floor.
    """
    track = track or intensity_track(buf)
    if len(track.level_db) == 0 or not np.any(buf.signal):
        raise SilentSignal("no signal energy")
    peak = float(np.max(track.level_db))
    keep = track.level_db >= peak + silence_db
    return _energy_mean_db(track.level_db[keep])


# ---------------------------------------------------------------------------
# harmonics-to-noise ratio


def hnr_track(
    buf: AudioBuffer, track: PitchTrack, periods_per_window: float = 4.5
) -> tuple[np.ndarray, np.ndarray]:
    """Per-voiced-frame harmonics-to-noise ratio in dB.

    For each voiced frame the window-compensated autocorrelation is
    evaluated at fractional lags around the tracked pitch period (exact
    band-limited interpolation via the cosine transform of the power
    spectrum); with r the peak value, HNR = 10 log10(r / (1 - r)), capped
    at 60 dB.
    """
    x = buf.signal
    rate = buf.sample_rate
    floor = track.params_used.floor
    win_n = int(round(2.0 * periods_per_window / floor * rate))
    window = window_samples("gaussian", win_n)
    half = win_n // 2
    max_lag = min(win_n - 2, int(math.ceil(rate / floor)) + 4)
    nfft = next_pow2(win_n + max_lag + 1)
    n_bins = nfft // 2 + 1

    fold = np.full(n_bins, 2.0)
    fold[0] = 1.0
    if nfft % 2 == 0:
        fold[-1] = 1.0
    wpower = np.abs(np.fft.rfft(window, nfft)) ** 2 * fold
    rw0 = float(wpower.sum())

    deltas = np.linspace(-2.0, 2.0, 41)
    k = np.arange(n_bins)
    # angle-addition split: cos(2 pi k (p + d) / nfft) built from per-frame
    # cos/sin at the period and fixed matrices at the offsets
    cos_d = np.cos(2.0 * np.pi * np.outer(deltas, k) / nfft)
    sin_d = np.sin(2.0 * np.pi * np.outer(deltas, k) / nfft)

    centers = np.round(track.times * rate).astype(int)
    periods = np.zeros(len(track.f0))
    vmask = track.voiced.copy()
    periods[vmask] = rate / track.f0[vmask]
    usable = (
        vmask
        & (centers - half >= 0)
        & (centers - half + win_n <= len(x))
        & (periods >= 2)
        & (periods + 2 < max_lag)
    )
    idx = np.flatnonzero(usable)
    times_out, values_out = [], []
    for start in range(0, len(idx), _CHUNK_FRAMES):
        sel = idx[start : start + _CHUNK_FRAMES]
        frames = _gather_frames(x, centers[sel], win_n)
        frames = (frames - frames.mean(axis=1, keepdims=True)) * window
        live = np.any(frames, axis=1)
        if not np.any(live):
            continue
        sel = sel[live]
        frames = frames[live]
        power = np.abs(np.fft.rfft(frames, nfft, axis=1)) ** 2 * fold
        ang = 2.0 * np.pi * np.outer(periods[sel], k) / nfft
        ca, sa = np.cos(ang), np.sin(ang)
        rx = cos_d @ (power * ca).T - sin_d @ (power * sa).T  # (41, m)
        rx0 = power.sum(axis=1)
        rw = cos_d @ (wpower * ca).T - sin_d @ (wpower * sa).T
        good = rx0 > 0
        r = np.zeros_like(rx)
        r[:, good] = (rx[:, good] / rx0[good]) / (rw[:, good] / rw0)
        mi = np.argmax(r, axis=0)
        cols = np.arange(r.shape[1])
        b_ = r[mi, cols]
        interior = (mi > 0) & (mi < len(deltas) - 1)
        a_ = r[np.maximum(mi - 1, 0), cols]
        c_ = r[np.minimum(mi + 1, len(deltas) - 1), cols]
        denom = 2.0 * b_ - a_ - c_
        refine = interior & (denom > 0)
        val = b_.copy()
        delta = np.zeros_like(b_)
        delta[refine] = np.clip(0.5 * (c_[refine] - a_[refine]) / denom[refine], -1.0, 1.0)
        val[refine] = b_[refine] + 0.25 * (c_[refine] - a_[refine]) * delta[refine]
        val = np.clip(val, 1e-6, 1.0 - 1e-6)
        keep = good
        times_out.append(track.times[sel][keep])
        values_out.append(10.0 * np.log10(val[keep] / (1.0 - val[keep])))
    if not times_out:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(times_out), np.concatenate(values_out)


def hnr_mean(buf: AudioBuffer, track: PitchTrack, tmin: float | None = None, tmax: float | None = None) -> float:
    times, values = hnr_track(buf, track)
    if tmin is not None or tmax is not None:
        lo = -math.inf if tmin is None else tmin
        hi = math.inf if tmax is None else tmax
        values = values[(times >= lo) & (times <= hi)]
    if len(values) == 0:
        raise NoVoicedFrames("no analyzable voiced frames for harmonicity")
    return float(np.mean(values))


# ---------------------------------------------------------------------------
# spectral slope


@dataclass(frozen=True)
class SlopeParams:
    band: tuple[float, float] = (50.0, 5000.0)
    frame_len: float = 0.040
    hop: float = 0.010


def voiced_frame_spectra(
    buf: AudioBuffer, track: PitchTrack, params: SlopeParams = SlopeParams()
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Times, frequency axis, and power spectra of voiced frames."""
    x = buf.signal
    rate = buf.sample_rate
    win_n = int(round(params.frame_len * rate))
    step_n = max(1, int(round(params.hop * rate)))
    if len(x) < win_n:
        raise SignalTooShort("buffer shorter than one analysis frame")
    centers = _frame_centers(len(x), win_n, step_n)
    times = centers / rate
    keep = track.voiced_at_many(times)
    if not np.any(keep):
        return np.zeros(0), np.zeros(0), np.zeros((0, 0))
    nfft = next_pow2(2 * win_n)
    w = np.hanning(win_n)
    kept = centers[keep]
    power = np.empty((len(kept), nfft // 2 + 1))
    for start in range(0, len(kept), _CHUNK_FRAMES):
        sub = kept[start : start + _CHUNK_FRAMES]
        frames = _gather_frames(x, sub, win_n) * w
        power[start : start + len(sub)] = np.abs(np.fft.rfft(frames, nfft, axis=1)) ** 2
    freqs = np.fft.rfftfreq(nfft, 1.0 / rate)
    return times[keep], freqs, power


def slope_from_spectrum(freqs: np.ndarray, power: np.ndarray, band: tuple[float, float]) -> float:
    """Energy-weighted straight-line fit of level (dB) on log2 frequency.

    The weights are the bin powers, so near-empty bins between harmonics do
    not drag the fit.  Requires energy in at least two octave bands of the
    fit range, otherwise the regression is degenerate.
    """
    lo, hi = band
    keep = (freqs >= lo) & (freqs <= hi) & (freqs > 0)
    f = freqs[keep]
    p = power[keep]
    total = float(np.sum(p))
    if total <= 0.0:
        raise SilentSignal("no energy in the slope band")
    octave_idx = np.floor(np.log2(f / lo)).astype(int)
    band_power = np.bincount(octave_idx, weights=p)
    # window leakage from a single component stays far below this share
    occupied = np.flatnonzero(band_power > 1e-6 * total)
    if len(occupied) < 2:
        raise InsufficientBandwidth("spectral energy spans fewer than two octave bands")
    w = p / total
    xlog = np.log2(f)
    y = 10.0 * np.log10(np.maximum(p, np.max(p) * 1e-12))
    xbar = float(np.sum(w * xlog))
    ybar = float(np.sum(w * y))
    var = float(np.sum(w * (xlog - xbar) ** 2))
    cov = float(np.sum(w * (xlog - xbar) * (y - ybar)))
    if var <= 0.0:
        raise InsufficientBandwidth("degenerate frequency spread")
    return cov / var


def spectral_slope(
    buf: AudioBuffer,
    track: PitchTrack,
    params: SlopeParams = SlopeParams(),
    tmin: float | None = None,
    tmax: float | None = None,
) -> float:
    """Slope of the long-term average spectrum of voiced frames, dB/octave."""
    times, freqs, power = voiced_frame_spectra(buf, track, params)
    if tmin is not None or tmax is not None:
        lo = -math.inf if tmin is None else tmin
        hi = math.inf if tmax is None else tmax
        sel = (times >= lo) & (times <= hi)
        power = power[sel]
    if power.shape[0] == 0:
        raise NoVoicedFrames("no voiced frames for the long-term spectrum")
    ltas = power.mean(axis=0)
    return slope_from_spectrum(freqs, ltas, params.band)


# ---------------------------------------------------------------------------
# cepstral peak prominence


@dataclass(frozen=True)
class CppParams:
    """Smoothed cepstral-peak settings (40 ms frames, 2 ms steps)."""

    frame_len: float = 0.040
    step: float = 0.002
    pre_emphasis_from: float = 50.0
    search_floor_hz: float = 60.0
    search_ceiling_hz: float = 330.0
    smooth_time: float = 0.020
    smooth_quefrency: float = 0.0005
    trend_min_quefrency: float = 0.001
    silence_threshold: float = 0.03


def pre_emphasize(x: np.ndarray, from_hz: float, rate: int) -> np.ndarray:
    alpha = math.exp(-2.0 * math.pi * from_hz / rate)
    y = x.astype(np.float64).copy()
    y[1:] -= alpha * y[:-1]
    return y


def _trend_lines(y: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise robust straight-line fits (median of half-offset pair slopes)."""
    n = x.shape[0]
    h = n // 2
    dx = x[h:] - x[: n - h]
    slopes = (y[:, h:] - y[:, : n - h]) / dx[None, :]
    slope = np.median(slopes, axis=1)
    intercept = np.median(y - slope[:, None] * x[None, :], axis=1)
    return slope, intercept


def cpp_track(
    buf: AudioBuffer, params: CppParams = CppParams()
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-frame cepstral peak prominence.

    Returns (times, cpp values, included mask); the mask is False on frames
    whose local peak falls under the silence threshold.  Per frame, the
    smoothed dB power cepstrum is peak-picked inside the 60-330 Hz
    quefrency band and referenced to a robust straight-line trend fit.
    """
    x = buf.signal
    rate = buf.sample_rate
    win_n = int(round(params.frame_len * rate))
    step_n = max(1, int(round(params.step * rate)))
    if len(x) < win_n:
        raise SignalTooShort("buffer shorter than one cepstral frame")
    centers = _frame_centers(len(x), win_n, step_n)
    n_frames = len(centers)
    global_peak = float(np.max(np.abs(x))) if np.any(x) else 0.0
    emphasized = pre_emphasize(x, params.pre_emphasis_from, rate)
    w = np.hanning(win_n)

    nfft = next_pow2(2 * win_n)
    t_size = max(1, int(round(params.smooth_time / params.step)))
    q_size = max(1, int(round(params.smooth_quefrency * rate)))
    k_lo = max(2, int(math.ceil(rate / params.search_ceiling_hz)))
    k_hi = min(nfft // 2 - 1, int(math.floor(rate / params.search_floor_hz)))
    k_trend = max(1, int(round(params.trend_min_quefrency * rate)))
    quefrencies = np.arange(nfft // 2 + 1) / rate
    x_trend = quefrencies[k_trend:]

    included = np.zeros(n_frames, dtype=bool)
    values = np.zeros(n_frames)
    pad = t_size  # margin so chunked time smoothing equals the full pass

    def power_cepstra(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        frames = _gather_frames(emphasized, centers[rows], win_n) * w
        live = np.any(frames, axis=1)
        pc = np.zeros((len(rows), nfft // 2 + 1))
        if np.any(live):
            pc[live] = log_db_cepstrogram(frames[live], nfft) ** 2
        return pc, live

    for a in range(0, n_frames, _CHUNK_FRAMES):
        b = min(n_frames, a + _CHUNK_FRAMES)
        lo = max(0, a - pad)
        hi = min(n_frames, b + pad)
        rows = np.arange(lo, hi)
        pc, live = power_cepstra(rows)
        smoothed = uniform_filter1d(pc, size=t_size, axis=0, mode="nearest")
        smoothed = uniform_filter1d(smoothed, size=q_size, axis=1, mode="nearest")
        block = smoothed[a - lo : b - lo]
        block_live = live[a - lo : b - lo]

        raw = _gather_frames(x, centers[a:b], win_n)
        loud = (
            np.max(np.abs(raw), axis=1) >= params.silence_threshold * global_peak
            if global_peak > 0
            else np.zeros(b - a, dtype=bool)
        )
        use = loud & block_live
        included[a:b] = use
        if not np.any(use):
            continue
        floors = np.maximum(block[use].max(axis=1, keepdims=True), 1e-30) * 1e-12
        level = 10.0 * np.log10(np.maximum(block[use], floors))

        band = level[:, k_lo : k_hi + 1]
        mi = np.argmax(band, axis=1) + k_lo
        cols = np.arange(level.shape[0])
        a_ = level[cols, mi - 1]
        b_ = level[cols, mi]
        c_ = level[cols, mi + 1]
        denom = 2.0 * b_ - a_ - c_
        refine = denom > 0
        delta = np.zeros_like(b_)
        delta[refine] = np.clip(0.5 * (c_[refine] - a_[refine]) / denom[refine], -0.5, 0.5)
        peak_val = b_.copy()
        peak_val[refine] += 0.25 * (c_[refine] - a_[refine]) * delta[refine]
        q_star = (mi + delta) / rate

        slope, intercept = _trend_lines(level[:, k_trend:], x_trend)
        values[np.flatnonzero(use) + a] = peak_val - (intercept + slope * q_star)
    return centers / rate, values, included


def cpp_mean(
    buf: AudioBuffer,
    params: CppParams = CppParams(),
    tmin: float | None = None,
    tmax: float | None = None,
) -> float:
    """Mean cepstral peak prominence over non-silent frames, in dB."""
    times, values, included = cpp_track(buf, params)
    keep = included.copy()
    if tmin is not None or tmax is not None:
        lo = -math.inf if tmin is None else tmin
        hi = math.inf if tmax is None else tmax
        keep &= (times >= lo) & (times <= hi)
    if not np.any(keep):
        raise SilentSignal("no frames above the silence threshold")
    return float(np.mean(values[keep]))
