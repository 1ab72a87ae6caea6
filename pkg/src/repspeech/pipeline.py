"""Per-recording orchestration: canonicalize, analyze once, assemble records.

The pitch track is computed once per recording and shared by harmonicity,
slope, formant, and timing analyses, so every feature sees the same voicing
decisions.  A failure in one feature marks that field absent with an error
code instead of aborting the record; long batch runs must survive
degenerate files.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .alignment import (
    DEFAULT_MIN_VOWEL_DURATION,
    DEFAULT_VOWEL_LABELS,
    find_target_vowels,
    parse_textgrid,
    vowel_level_features,
)
from .articulation import FormantParams, formant_track, spectral_moments
from .audio_io import CanonicalPolicy, read_wav, to_canonical
from .errors import AlignmentMissing, RepSpeechError
from .phonation import (
    CppParams,
    PitchParams,
    SlopeParams,
    cpp_mean,
    hnr_mean,
    intensity_mean,
    pitch_stats,
    pitch_track_two_pass,
    spectral_slope,
)
from .timing import TimingParams, timing_features

S_FEATURES = (
    "duration",
    "speaking_rate",
    "articulation_rate",
    "pause_rate",
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
A_FEATURES = tuple(f for f in S_FEATURES if f not in ("duration", "speaking_rate", "articulation_rate", "pause_rate"))


@dataclass(frozen=True)
class PipelineParams:
    pitch_explore: PitchParams = field(default_factory=lambda: PitchParams(floor=50.0, ceiling=600.0))
    timing: TimingParams = field(default_factory=TimingParams)
    formant: FormantParams = field(default_factory=FormantParams)
    cpp: CppParams = field(default_factory=CppParams)
    slope: SlopeParams = field(default_factory=SlopeParams)
    vowel_labels: frozenset[str] = DEFAULT_VOWEL_LABELS
    min_vowel_duration: float = DEFAULT_MIN_VOWEL_DURATION
    phone_tier: str = "phones"


@dataclass(frozen=True)
class ExtractionRequest:
    audio_path: str
    textgrid_path: str | None = None
    levels: tuple[str, ...] = ("S",)
    params: PipelineParams = field(default_factory=PipelineParams)


@dataclass
class FeatureRecord:
    """The exemplar features for one recording at one extraction level."""

    recording: str
    level: str
    features: dict[str, float | None]
    errors: dict[str, str] = field(default_factory=dict)
    n_vowel_instances: int | None = None
    provenance: dict = field(default_factory=dict)


def _provenance(params: PipelineParams, adapted_pitch: PitchParams | None) -> dict:
    snap = {
        "version": __version__,
        "pitch_explore": asdict(params.pitch_explore),
        "timing": asdict(params.timing),
        "formant": asdict(params.formant),
        "cpp": asdict(params.cpp),
        "slope": asdict(params.slope),
        "vowel_labels": sorted(params.vowel_labels),
        "min_vowel_duration": params.min_vowel_duration,
        "phone_tier": params.phone_tier,
    }
    if adapted_pitch is not None:
        snap["pitch_adapted"] = {"floor": adapted_pitch.floor, "ceiling": adapted_pitch.ceiling}
    return snap


def extract_recording(req: ExtractionRequest) -> list[FeatureRecord]:
    """Extract one FeatureRecord per requested level for a recording.

    Level S covers the whole canonical recording; level a aggregates over
    the aligned open-vowel instances and requires a TextGrid.
    """
    levels = tuple(req.levels)
    for level in levels:
        if level not in ("S", "a"):
            raise ValueError(f"unknown extraction level {level!r}")
    if "a" in levels and not req.textgrid_path:
        raise AlignmentMissing("vowel-level extraction requires a TextGrid path")

    params = req.params
    buf = to_canonical(read_wav(req.audio_path), CanonicalPolicy())
    name = Path(req.audio_path).stem

    pitch = None
    pitch_error: str | None = None
    try:
        pitch = pitch_track_two_pass(buf, params.pitch_explore)
    except RepSpeechError as exc:
        pitch_error = type(exc).__name__

    records = []
    if "S" in levels:
        records.append(_extract_suprasegmental(name, buf, pitch, pitch_error, params))
    if "a" in levels:
        records.append(_extract_vowel_level(name, buf, pitch, pitch_error, params, req.textgrid_path))
    return records


def _extract_suprasegmental(name, buf, pitch, pitch_error, params: PipelineParams) -> FeatureRecord:
    features: dict[str, float | None] = {k: None for k in S_FEATURES}
    errors: dict[str, str] = {}

    def attempt(keys: tuple[str, ...], fn) -> None:
        try:
            result = fn()
        except RepSpeechError as exc:
            for k in keys:
                errors[k] = type(exc).__name__
            return
        for k, v in result.items():
            features[k] = v

    features["duration"] = buf.duration

    def timing_fn():
        tf = timing_features(buf, pitch, params.timing)
        return {
            "speaking_rate": tf.speaking_rate,
            "articulation_rate": tf.articulation_rate,
            "pause_rate": tf.pause_rate,
        }

    attempt(("speaking_rate", "articulation_rate", "pause_rate"), timing_fn)
    attempt(("intensity_mean",), lambda: {"intensity_mean": intensity_mean(buf)})
    if pitch is not None:
        def pitch_fn():
            mean_hz, sd_st = pitch_stats(pitch)
            return {"pitch_mean": mean_hz, "pitch_sd": sd_st}

        attempt(("pitch_mean", "pitch_sd"), pitch_fn)
        attempt(("hnr_mean",), lambda: {"hnr_mean": hnr_mean(buf, pitch)})
        attempt(("spectral_slope",), lambda: {"spectral_slope": spectral_slope(buf, pitch, params.slope)})

        def formant_fn():
            f1, f2 = formant_track(buf, pitch, params.formant).means()
            return {"f1_mean": f1, "f2_mean": f2}

        attempt(("f1_mean", "f2_mean"), formant_fn)
    else:
        for k in ("pitch_mean", "pitch_sd", "hnr_mean", "spectral_slope", "f1_mean", "f2_mean"):
            errors[k] = pitch_error
    attempt(("cpp_mean",), lambda: {"cpp_mean": cpp_mean(buf, params.cpp)})

    def moments_fn():
        m = spectral_moments(buf)
        return {"spectral_gravity": m.gravity, "spectral_deviation": m.deviation}

    attempt(("spectral_gravity", "spectral_deviation"), moments_fn)

    adapted = pitch.params_used if pitch is not None else None
    return FeatureRecord(name, "S", features, errors, None, _provenance(params, adapted))


def _extract_vowel_level(name, buf, pitch, pitch_error, params: PipelineParams, textgrid_path) -> FeatureRecord:
    features: dict[str, float | None] = {k: None for k in A_FEATURES}
    errors: dict[str, str] = {}
    n_instances = None
    adapted = pitch.params_used if pitch is not None else None
    try:
        grid = parse_textgrid(Path(textgrid_path).read_text(encoding="utf-8"))
        vowels = find_target_vowels(grid, params.vowel_labels, params.min_vowel_duration, params.phone_tier)
        if pitch is None:
            raise RepSpeechError(pitch_error or "NoVoicedFrames")
        agg = vowel_level_features(
            buf, vowels, pitch, params.formant, params.cpp, params.slope
        )
        n_instances = agg.n_instances
        for k in A_FEATURES:
            value = agg.means.get(k)
            if value is None:
                errors[k] = "NoMeasurableInstances"
            else:
                features[k] = value
    except RepSpeechError as exc:
        code = type(exc).__name__ if type(exc) is not RepSpeechError else str(exc)
        for k in A_FEATURES:
            errors[k] = code
    return FeatureRecord(name, "a", features, errors, n_instances, _provenance(params, adapted))


def record_to_row(rec: FeatureRecord) -> dict:
    """Flatten a record into a CSV-ready row with feature names as columns."""
    row: dict[str, object] = {"recording": rec.recording, "level": rec.level}
    keys = S_FEATURES if rec.level == "S" else A_FEATURES
    for k in S_FEATURES:
        row[k] = rec.features.get(k) if k in keys else None
    row["n_vowel_instances"] = rec.n_vowel_instances
    row["errors"] = json.dumps(rec.errors, sort_keys=True) if rec.errors else ""
    return row
