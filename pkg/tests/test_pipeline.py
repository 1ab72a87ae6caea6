"""End-to-end per-recording extraction."""

import dataclasses

import pytest

from repspeech.alignment import Interval, Tier, TierSet, serialize_textgrid
from repspeech.audio_io import write_wav
from repspeech.errors import AlignmentMissing
from repspeech.pipeline import (
    A_FEATURES,
    ExtractionRequest,
    S_FEATURES,
    extract_recording,
    record_to_row,
)
from repspeech.synth import synth_formant_voice


@pytest.fixture(scope="module")
def voice_recording(tmp_path_factory):
    d = tmp_path_factory.mktemp("rec")
    buf = synth_formant_voice(120, ((700, 80), (1200, 90)), 2.0)
    wav = d / "P01_condenser_D1_S1_RainbowPassage.wav"
    write_wav(buf, wav)
    grid = TierSet(
        0.0,
        2.0,
        (
            Tier(
                "phones",
                0.0,
                2.0,
                (
                    Interval(0.0, 0.2, "sil"),
                    Interval(0.2, 0.8, "AA1"),
                    Interval(0.8, 1.2, "sil"),
                    Interval(1.2, 1.8, "AA1"),
                    Interval(1.8, 2.0, ""),
                ),
            ),
        ),
    )
    tg = d / "P01_condenser_D1_S1_RainbowPassage.TextGrid"
    tg.write_text(serialize_textgrid(grid), encoding="utf-8")
    return str(wav), str(tg)


def test_both_levels_extracted(voice_recording):
    wav, tg = voice_recording
    records = extract_recording(ExtractionRequest(wav, tg, ("S", "a")))
    assert [r.level for r in records] == ["S", "a"]
    s_rec, a_rec = records
    assert not s_rec.errors
    assert not a_rec.errors
    assert a_rec.n_vowel_instances == 2
    assert a_rec.features["f1_mean"] == pytest.approx(700, abs=50)
    assert a_rec.features["f2_mean"] == pytest.approx(1200, abs=75)
    assert sum(v is not None for v in s_rec.features.values()) == 14
    assert sum(v is not None for v in a_rec.features.values()) == 10


def test_s_only_without_textgrid(voice_recording):
    wav, _ = voice_recording
    records = extract_recording(ExtractionRequest(wav, None, ("S",)))
    assert len(records) == 1
    assert records[0].level == "S"


def test_vowel_level_needs_textgrid(voice_recording):
    wav, _ = voice_recording
    with pytest.raises(AlignmentMissing):
        extract_recording(ExtractionRequest(wav, None, ("S", "a")))


def test_deterministic_records(voice_recording):
    wav, tg = voice_recording
    req = ExtractionRequest(wav, tg, ("S", "a"))
    first = extract_recording(req)
    second = extract_recording(req)
    assert [dataclasses.asdict(r) for r in first] == [dataclasses.asdict(r) for r in second]


def test_full_span_vowel_levels_agree(tmp_path):
    buf = synth_formant_voice(140, ((600, 80), (1100, 90)), 1.5)
    wav = tmp_path / "v.wav"
    write_wav(buf, wav)
    grid = TierSet(0.0, 1.5, (Tier("phones", 0.0, 1.5, (Interval(0.0, 1.5, "AA"),)),))
    tg = tmp_path / "v.TextGrid"
    tg.write_text(serialize_textgrid(grid), encoding="utf-8")
    s_rec, a_rec = extract_recording(ExtractionRequest(str(wav), str(tg), ("S", "a")))
    assert a_rec.features["pitch_mean"] == pytest.approx(s_rec.features["pitch_mean"], abs=1.0)


def test_no_target_vowels_marks_features_absent(voice_recording, tmp_path):
    wav, _ = voice_recording
    grid = TierSet(0.0, 2.0, (Tier("phones", 0.0, 2.0, (Interval(0.0, 2.0, "IY"),)),))
    tg = tmp_path / "novowels.TextGrid"
    tg.write_text(serialize_textgrid(grid), encoding="utf-8")
    a_rec = extract_recording(ExtractionRequest(wav, str(tg), ("a",)))[0]
    assert all(v is None for v in a_rec.features.values())
    assert set(a_rec.errors.values()) == {"NoTargetVowels"}


def test_provenance_snapshot(voice_recording):
    wav, tg = voice_recording
    rec = extract_recording(ExtractionRequest(wav, tg, ("S",)))[0]
    prov = rec.provenance
    for key in ("pitch_explore", "timing", "formant", "cpp", "slope", "pitch_adapted"):
        assert key in prov
    assert prov["pitch_adapted"]["floor"] < prov["pitch_adapted"]["ceiling"]


def test_row_flattening(voice_recording):
    wav, tg = voice_recording
    s_rec, a_rec = extract_recording(ExtractionRequest(wav, tg, ("S", "a")))
    s_row = record_to_row(s_rec)
    a_row = record_to_row(a_rec)
    assert [k for k in S_FEATURES if s_row[k] is not None] == list(S_FEATURES)
    assert [k for k in S_FEATURES if a_row[k] is not None] == list(A_FEATURES)
    assert a_row["n_vowel_instances"] == 2
