"""Parse forced-alignment TextGrid files and extract vowel-level features.

Only the long text format with interval tiers is accepted, which is what
alignment tools emit by default; short, binary, and point-tier variants
are rejected.  Labels are preserved verbatim, including embedded spaces
and doubled-quote escapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .audio_io import AudioBuffer
from .errors import (
    InsufficientBandwidth,
    MalformedTextGrid,
    MissingPhoneTier,
    NonMonotoneIntervals,
    NoTargetVowels,
    NoVoicedFrames,
    SilentSignal,
    VowelOutOfBounds,
)

DEFAULT_VOWEL_LABELS = frozenset({"AA", "AA0", "AA1", "AA2"})
DEFAULT_MIN_VOWEL_DURATION = 0.050
_BOUNDARY_SLACK = 1e-6


@dataclass(frozen=True)
class Interval:
    xmin: float
    xmax: float
    label: str


@dataclass(frozen=True)
class Tier:
    name: str
    xmin: float
    xmax: float
    intervals: tuple[Interval, ...]


@dataclass(frozen=True)
class TierSet:
    xmin: float
    xmax: float
    tiers: tuple[Tier, ...]

    def tier(self, name: str) -> Tier | None:
        for t in self.tiers:
            if t.name == name:
                return t
        return None


@dataclass(frozen=True)
class VowelInterval:
    start: float
    end: float
    label: str
    source_tier: str

    @property
    def duration(self) -> float:
        return self.end - self.start


# ---------------------------------------------------------------------------
# parsing


class _Cursor:
    def __init__(self, text: str):
        # split on plain newlines only; exotic Unicode separators may occur
        # inside quoted labels and must not break lines
        self.lines = [line.rstrip("\r") for line in text.split("\n")]
        self.pos = 0

    def next_line(self) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line:
                return line
        raise MalformedTextGrid("unexpected end of file")

    def expect_header(self, *names: str) -> str:
        line = self.next_line()
        for name in names:
            if line.startswith(name):
                return line
        raise MalformedTextGrid(f"expected one of {names}, got {line!r}")

    def read_value(self, key: str) -> str:
        line = self.next_line()
        if "=" not in line:
            raise MalformedTextGrid(f"expected '{key} = ...', got {line!r}")
        lhs, rhs = line.split("=", 1)
        if lhs.strip() != key:
            raise MalformedTextGrid(f"expected key {key!r}, got {lhs.strip()!r}")
        return rhs.strip()

    def read_number(self, key: str) -> float:
        raw = self.read_value(key)
        try:
            return float(raw)
        except ValueError as exc:
            raise MalformedTextGrid(f"bad number for {key}: {raw!r}") from exc

    def read_string(self, key: str) -> str:
        return _unquote(self.read_value(key))


def _unquote(raw: str) -> str:
    if len(raw) < 2 or not raw.startswith('"'):
        raise MalformedTextGrid(f"expected a quoted string, got {raw!r}")
    out = []
    i = 1
    while i < len(raw):
        ch = raw[i]
        if ch == '"':
            if i + 1 < len(raw) and raw[i + 1] == '"':
                out.append('"')
                i += 2
                continue
            tail = raw[i + 1 :].strip()
            if tail:
                raise MalformedTextGrid(f"trailing content after closing quote: {tail!r}")
            return "".join(out)
        out.append(ch)
        i += 1
    raise MalformedTextGrid(f"unterminated string: {raw!r}")


def _quote(label: str) -> str:
    if "\n" in label or "\r" in label:
        raise ValueError("labels cannot contain line breaks")
    return '"' + label.replace('"', '""') + '"'


def parse_textgrid(text: str) -> TierSet:
    """Parse long-format TextGrid file contents into a TierSet.

    Raises MalformedTextGrid on structural problems and
    NonMonotoneIntervals when a tier's intervals are empty, unordered, or
    overlapping.
    """
    if text.lstrip().startswith("ooBinaryFile"):
        raise MalformedTextGrid("binary TextGrid not supported; export the long text format")
    cur = _Cursor(text)
    if cur.read_string("File type") != "ooTextFile":
        raise MalformedTextGrid("not an ooTextFile")
    if cur.read_string("Object class") != "TextGrid":
        raise MalformedTextGrid("not a TextGrid object")
    xmin = cur.read_number("xmin")
    xmax = cur.read_number("xmax")
    exists = cur.next_line()
    if not exists.startswith("tiers?"):
        # short format puts a bare number where 'tiers? <exists>' belongs
        raise MalformedTextGrid("short-format TextGrid not supported; use the long text format")
    size = int(cur.read_number("size"))
    cur.expect_header("item []")
    tiers = []
    for _ in range(size):
        cur.expect_header("item [")
        klass = cur.read_string("class")
        if klass != "IntervalTier":
            raise MalformedTextGrid(f"unsupported tier class {klass!r}; only interval tiers are read")
        name = cur.read_string("name")
        t_xmin = cur.read_number("xmin")
        t_xmax = cur.read_number("xmax")
        n_intervals = int(cur.read_number("intervals: size"))
        intervals = []
        for _ in range(n_intervals):
            cur.expect_header("intervals [")
            i_xmin = cur.read_number("xmin")
            i_xmax = cur.read_number("xmax")
            label = cur.read_string("text")
            intervals.append(Interval(i_xmin, i_xmax, label))
        tiers.append(Tier(name, t_xmin, t_xmax, tuple(intervals)))
    grid = TierSet(xmin, xmax, tuple(tiers))
    _validate(grid)
    return grid


def _validate(grid: TierSet) -> None:
    for tier in grid.tiers:
        prev_end = None
        for iv in tier.intervals:
            if not (iv.xmin < iv.xmax):
                raise NonMonotoneIntervals(
                    f"tier {tier.name!r}: interval [{iv.xmin}, {iv.xmax}] is empty or inverted"
                )
            if prev_end is not None and iv.xmin < prev_end - 1e-9:
                raise NonMonotoneIntervals(
                    f"tier {tier.name!r}: interval starting {iv.xmin} overlaps previous end {prev_end}"
                )
            prev_end = iv.xmax
            if iv.xmin < tier.xmin - 1e-9 or iv.xmax > tier.xmax + 1e-9:
                raise NonMonotoneIntervals(
                    f"tier {tier.name!r}: interval [{iv.xmin}, {iv.xmax}] outside tier bounds"
                )


def _fmt_num(v: float) -> str:
    return repr(float(v))


def serialize_textgrid(grid: TierSet) -> str:
    """Emit the long text format; parse(serialize(g)) reproduces g exactly."""
    out = ['File type = "ooTextFile"', 'Object class = "TextGrid"', ""]
    out.append(f"xmin = {_fmt_num(grid.xmin)} ")
    out.append(f"xmax = {_fmt_num(grid.xmax)} ")
    out.append("tiers? <exists> ")
    out.append(f"size = {len(grid.tiers)} ")
    out.append("item []: ")
    for ti, tier in enumerate(grid.tiers, start=1):
        out.append(f"    item [{ti}]:")
        out.append('        class = "IntervalTier" ')
        out.append(f"        name = {_quote(tier.name)} ")
        out.append(f"        xmin = {_fmt_num(tier.xmin)} ")
        out.append(f"        xmax = {_fmt_num(tier.xmax)} ")
        out.append(f"        intervals: size = {len(tier.intervals)} ")
        for ii, iv in enumerate(tier.intervals, start=1):
            out.append(f"        intervals [{ii}]:")
            out.append(f"            xmin = {_fmt_num(iv.xmin)} ")
            out.append(f"            xmax = {_fmt_num(iv.xmax)} ")
            out.append(f"            text = {_quote(iv.label)} ")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# vowel selection


def find_target_vowels(
    grid: TierSet,
    target_labels: frozenset[str] | set[str] = DEFAULT_VOWEL_LABELS,
    min_duration: float = DEFAULT_MIN_VOWEL_DURATION,
    tier_name: str = "phones",
) -> list[VowelInterval]:
    """Select phone-tier intervals whose label matches and which last long enough.

    Intervals come back in time order; the duration filter keeps anything
    at least ``min_duration`` long (a hair of float slack is allowed).
    """
    tier = grid.tier(tier_name)
    if tier is None:
        raise MissingPhoneTier(f"no tier named {tier_name!r}")
    hits = []
    for iv in tier.intervals:
        if iv.label in target_labels and (iv.xmax - iv.xmin) >= min_duration - 1e-12:
            hits.append(VowelInterval(iv.xmin, iv.xmax, iv.label, tier.name))
    return hits


# ---------------------------------------------------------------------------
# vowel-level features


@dataclass(frozen=True)
class VowelFeatureAggregate:
    """Per-feature means across vowel instances.

    A feature that could not be measured on any instance maps to None;
    ``feature_counts`` records how many instances contributed to each mean.
    """

    means: dict[str, float | None]
    n_instances: int
    feature_counts: dict[str, int] = field(default_factory=dict)


VOWEL_FEATURES = (
    "intensity_mean",
    "pitch_mean",
    "pitch_sd",
    "hnr_mean",
    "spectral_slope",
    "cpp_mean",
    "f1_mean",
    "f2_mean",
    "spectral_gravity",
    "spectral_deviation",
)


def vowel_level_features(
    buf: AudioBuffer,
    vowels: list[VowelInterval],
    pitch=None,
    formant_params=None,
    cpp_params=None,
    slope_params=None,
) -> VowelFeatureAggregate:
    """Extract the vowel-applicable features per instance and average them.

    Analysis tracks (pitch, harmonicity, formants, cepstral peak, intensity,
    voiced spectra) are computed once over the whole recording and sliced per
    instance; spectral moments are taken on each instance's own samples.
    Instances where a given feature cannot be measured are skipped for that
    feature and the instance counts say how many contributed.
    """
    from . import articulation, phonation

    if not vowels:
        raise NoTargetVowels("no vowel instances to analyze")
    duration = buf.duration
    for v in vowels:
        if v.start < -_BOUNDARY_SLACK or v.end > duration + _BOUNDARY_SLACK:
            raise VowelOutOfBounds(
                f"vowel [{v.start:.3f}, {v.end:.3f}] outside the {duration:.3f} s recording"
            )

    pitch = pitch or phonation.pitch_track_two_pass(buf)
    formant_params = formant_params or articulation.FormantParams()
    cpp_params = cpp_params or phonation.CppParams()
    slope_params = slope_params or phonation.SlopeParams()

    itrack = phonation.intensity_track(buf)
    global_level = float(np.max(itrack.level_db))
    hnr_times, hnr_values = phonation.hnr_track(buf, pitch)
    cpp_times, cpp_values, cpp_mask = phonation.cpp_track(buf, cpp_params)
    slope_times, slope_freqs, slope_power = phonation.voiced_frame_spectra(buf, pitch, slope_params)
    try:
        ftrack = articulation.formant_track(buf, pitch, formant_params)
    except NoVoicedFrames:
        ftrack = None

    sums: dict[str, float] = {k: 0.0 for k in VOWEL_FEATURES}
    counts: dict[str, int] = {k: 0 for k in VOWEL_FEATURES}

    def add(feature: str, value: float | None) -> None:
        if value is not None and math.isfinite(value):
            sums[feature] += value
            counts[feature] += 1

    for v in vowels:
        t0, t1 = max(v.start, 0.0), min(v.end, duration)

        sub = pitch.slice(t0, t1)
        if sub.voiced_f0.size:
            mean_hz, sd_st = phonation.pitch_stats(sub)
            add("pitch_mean", mean_hz)
            add("pitch_sd", sd_st)

        isel = itrack.slice(t0, t1)
        keep = isel.level_db >= global_level - 30.0
        if np.any(keep):
            add("intensity_mean", phonation._energy_mean_db(isel.level_db[keep]))

        hsel = hnr_values[(hnr_times >= t0) & (hnr_times <= t1)]
        if hsel.size:
            add("hnr_mean", float(np.mean(hsel)))

        csel = cpp_mask & (cpp_times >= t0) & (cpp_times <= t1)
        if np.any(csel):
            add("cpp_mean", float(np.mean(cpp_values[csel])))

        if slope_power.shape[0]:
            ssel = (slope_times >= t0) & (slope_times <= t1)
            if np.any(ssel):
                try:
                    add(
                        "spectral_slope",
                        phonation.slope_from_spectrum(
                            slope_freqs, slope_power[ssel].mean(axis=0), slope_params.band
                        ),
                    )
                except (InsufficientBandwidth, SilentSignal):
                    pass

        if ftrack is not None:
            f1, f2 = ftrack.slice(t0, t1).means()
            add("f1_mean", f1)
            add("f2_mean", f2)

        try:
            moments = articulation.spectral_moments(buf.slice(t0, t1))
            add("spectral_gravity", moments.gravity)
            add("spectral_deviation", moments.deviation)
        except SilentSignal:
            pass

    means = {k: (sums[k] / counts[k] if counts[k] else None) for k in VOWEL_FEATURES}
    return VowelFeatureAggregate(means, len(vowels), counts)
