"""Speech timing: pause detection, syllable-nucleus counting, rate features.

Both detectors work on the same intensity contour.  Silence is anything
more than the threshold below the loudest frame; internal silent runs of
at least the minimum pause length count as pauses, and syllable nuclei are
intensity peaks flanked by dips that coincide with voiced frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .audio_io import AudioBuffer
from .errors import SignalTooShort, ZeroDuration, ZeroPhonationTime
from .phonation import IntensityTrack, PitchTrack, intensity_track


@dataclass(frozen=True)
class TimingParams:
    silence_threshold_db: float = -25.0
    min_dip_db: float = 2.0
    min_pause_s: float = 0.30
    require_voicing: bool = True
    frame_len: float = 0.040
    hop: float = 0.010


@dataclass(frozen=True)
class Segment:
    kind: str  # "speech" | "pause"
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class TimingFeatures:
    duration: float
    speaking_rate: float
    articulation_rate: float
    pause_rate: float
    n_syllables: int
    n_pauses: int
    phonation_time: float


def _sounding_mask(track: IntensityTrack, silence_threshold_db: float) -> np.ndarray:
    if len(track.level_db) == 0:
        return np.zeros(0, dtype=bool)
    peak = float(np.max(track.level_db))
    return track.level_db >= peak + silence_threshold_db


def _runs(mask: np.ndarray) -> list[tuple[bool, int, int]]:
    """Maximal constant runs of a boolean mask as (value, start, stop)."""
    runs = []
    i = 0
    n = len(mask)
    while i < n:
        j = i
        while j < n and mask[j] == mask[i]:
            j += 1
        runs.append((bool(mask[i]), i, j))
        i = j
    return runs


def detect_speech_regions(buf: AudioBuffer, params: TimingParams = TimingParams()) -> list[Segment]:
    """Segment a recording into speech regions and internal pauses.

    Silent runs shorter than the minimum pause are absorbed into speech;
    leading and trailing silence belongs to neither category.  All-silent
    input yields an empty list.
    """
    try:
        track = intensity_track(buf, params.frame_len, params.hop)
    except SignalTooShort:
        return []
    if not np.any(buf.signal):
        return []
    mask = _sounding_mask(track, params.silence_threshold_db)
    if not np.any(mask):
        return []
    runs = _runs(mask)
    # frame i covers [t_i - hop/2, t_i + hop/2], clipped to the recording
    half = 0.5 * params.hop

    def run_bounds(i0: int, i1: int) -> tuple[float, float]:
        start = max(0.0, track.times[i0] - half)
        end = min(buf.duration, track.times[i1 - 1] + half)
        return start, end

    sounding_spans = [run_bounds(i0, i1) for v, i0, i1 in runs if v]
    silent_spans = []
    for idx, (v, i0, i1) in enumerate(runs):
        if not v and 0 < idx < len(runs) - 1:
            silent_spans.append(run_bounds(i0, i1))

    segments: list[Segment] = []
    cur_start, cur_end = sounding_spans[0]
    pauses = []
    for gap, nxt in zip(silent_spans, sounding_spans[1:]):
        gap_len = gap[1] - gap[0]
        if gap_len >= params.min_pause_s:
            segments.append(Segment("speech", cur_start, gap[0]))
            pauses.append(Segment("pause", gap[0], gap[1]))
            cur_start, cur_end = nxt
        else:
            cur_end = nxt[1]
    segments.append(Segment("speech", cur_start, cur_end))

    merged = sorted(segments + pauses, key=lambda s: s.start)
    return merged


def count_syllable_nuclei(
    buf: AudioBuffer, track: PitchTrack | None, params: TimingParams = TimingParams()
) -> int:
    """Count intensity peaks that behave like syllable nuclei.

    A nucleus is a contour peak above the silence threshold separated from
    its neighbors by dips of at least the minimum depth on both sides;
    consecutive maxima without such a valley between them merge into one
    nucleus.  When voicing is required, the peak must fall on a voiced
    pitch frame.
    """
    try:
        contour = intensity_track(buf, params.frame_len, params.hop)
    except SignalTooShort:
        return 0
    if not np.any(buf.signal) or len(contour.level_db) == 0:
        return 0
    level = contour.level_db
    peak_db = float(np.max(level))
    threshold = peak_db + params.silence_threshold_db
    # pad with a deep floor so plateaus touching the signal edges still count
    padded = np.concatenate([[-1e30], level, [-1e30]])
    candidates, _ = find_peaks(padded, height=threshold)
    candidates = candidates - 1

    # merge candidates that lack a valley of min_dip_db between them; the
    # prominence shortcut breaks on exactly equal-height maxima, which
    # periodic or quantized signals do produce
    accepted: list[int] = []
    for k in candidates:
        if not accepted:
            accepted.append(int(k))
            continue
        prev = accepted[-1]
        valley = float(np.min(level[prev : k + 1]))
        if level[k] - valley >= params.min_dip_db and level[prev] - valley >= params.min_dip_db:
            accepted.append(int(k))
        elif level[k] > level[prev]:
            accepted[-1] = int(k)
    if params.require_voicing:
        if track is None:
            return 0
        accepted = [k for k in accepted if track.voiced_at(contour.times[k])]
    return int(len(accepted))


def timing_features(
    buf: AudioBuffer, track: PitchTrack | None, params: TimingParams = TimingParams()
) -> TimingFeatures:
    """Duration, speaking rate, articulation rate, and pause rate.

    Duration is the full recording length; speaking rate divides nuclei by
    it, articulation rate divides by phonation time only, and
    speaking_rate = articulation_rate x (phonation_time / duration).
    """
    if buf.n_samples == 0:
        raise ZeroDuration("empty recording")
    duration = buf.duration
    regions = detect_speech_regions(buf, params)
    phonation = sum(s.duration for s in regions if s.kind == "speech")
    n_pauses = sum(1 for s in regions if s.kind == "pause")
    n_syllables = count_syllable_nuclei(buf, track, params)
    if phonation <= 0.0:
        raise ZeroPhonationTime("no speech regions; articulation rate undefined")
    return TimingFeatures(
        duration=duration,
        speaking_rate=n_syllables / duration,
        articulation_rate=n_syllables / phonation,
        pause_rate=n_pauses / duration,
        n_syllables=n_syllables,
        n_pauses=n_pauses,
        phonation_time=phonation,
    )
