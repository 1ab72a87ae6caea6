"""Command-line entry point.

Subcommands mirror the workflow stages: ``canonicalize`` audio,
``extract`` features, list ``vowels`` from an alignment, ``summarize``
feature tables, ``validate`` protocol metadata, and ``synth`` test
signals.  Exit code 0 means success, 1 means validation findings, and 2
an operational error.  Data goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import __version__
from .alignment import find_target_vowels, parse_textgrid
from .audio_io import CanonicalPolicy, read_wav, to_canonical, write_wav
from .errors import RepSpeechError
from .pipeline import (
    ExtractionRequest,
    PipelineParams,
    S_FEATURES,
    extract_recording,
    record_to_row,
)
from .protocol import (
    DEFAULT_DEVICES,
    DEFAULT_TASKS,
    ManifestExpectation,
    SessionSchedule,
    checklist_template,
    lint_study_design,
    parse_recording_filename,
    validate_manifest,
    validate_qc_log,
    validate_questionnaire,
    validate_schedule,
)
from .reporting import emit_table, summarize_features
from .synth import SynthSpec, render_segment, synth_pattern

CONFIG_ENV = "REPSPEECH_CONFIG"

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_ERROR = 2

CSV_COLUMNS = ["recording", "level", *S_FEATURES, "n_vowel_instances", "errors"]


def _build_parser() -> tuple[argparse.ArgumentParser, list[argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="repspeech", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--json", action="store_true", help="machine-readable errors on stderr")
    parser.add_argument("--config", help="JSON config file providing flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("canonicalize", help="convert audio to mono 16 kHz 16-bit")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("extract", help="extract the exemplar feature set")
    p.add_argument("inputs", nargs="+", help="WAV files")
    p.add_argument("--level", default="S", help="comma-separated subset of S,a")
    p.add_argument("--textgrid", help="alignment for a single input")
    p.add_argument("--textgrid-dir", help="directory of <name>.TextGrid files")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("-o", "--output", help="output path (default stdout)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--vowel-labels", help="comma-separated phone labels")
    p.add_argument("--min-vowel-duration", type=float)
    p.add_argument("--phone-tier", default=None)
    p.add_argument("--silence-threshold-db", type=float)
    p.add_argument("--min-pause", type=float)
    p.add_argument("--min-dip", type=float)
    p.add_argument("--formant-ceiling", type=float)

    p = sub.add_parser("vowels", help="list selected vowel instances from a TextGrid")
    p.add_argument("textgrid")
    p.add_argument("--labels", help="comma-separated phone labels")
    p.add_argument("--min-duration", type=float, default=0.050)
    p.add_argument("--tier", default="phones")

    p = sub.add_parser("summarize", help="normative median (q1, q3) table from a feature CSV")
    p.add_argument("features_csv")
    p.add_argument("--group", required=True, help="grouping column name")
    p.add_argument("--format", choices=("markdown", "csv", "json"), default="markdown")
    p.add_argument("-o", "--output")

    p = sub.add_parser("validate", help="validate protocol metadata files")
    p.add_argument("what", choices=("manifest", "schedule", "questionnaire", "checklist", "qclog"))
    p.add_argument("file", help="JSON input; for manifest, a list of filenames")
    p.add_argument("--expect", help="manifest expectation grid (JSON)")
    p.add_argument("--devices", help="comma-separated device vocabulary")
    p.add_argument("--tasks", help="comma-separated task vocabulary")
    p.add_argument("--template", action="store_true", help="print a template and exit")

    p = sub.add_parser("synth", help="generate a test signal with a ground-truth sidecar")
    p.add_argument("--kind", choices=("pulse_train", "formant_voice", "tone", "noise", "silence"))
    p.add_argument("--f0", type=float)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--amplitude", type=float, default=0.3)
    p.add_argument("--formants", help="freq:bw pairs, comma separated (e.g. 700:80,1200:90)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pattern", help="JSON file with a list of segment specs")
    p.add_argument("-o", "--output", required=True, help="output WAV path")
    subparsers = list(sub.choices.values())
    return parser, subparsers


def _emit_error(exc: Exception, as_json: bool) -> None:
    if as_json:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(payload), file=sys.stderr)
    else:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)


def _load_config(path: str | None) -> dict:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _write_out(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommand implementations


def _cmd_canonicalize(args) -> int:
    buf = to_canonical(read_wav(args.input), CanonicalPolicy())
    write_wav(buf, args.output)
    print(f"wrote {args.output}: {buf.duration:.3f} s at {buf.sample_rate} Hz", file=sys.stderr)
    return EXIT_OK


def _pipeline_params(args) -> PipelineParams:
    params = PipelineParams()
    timing = params.timing
    if args.silence_threshold_db is not None:
        timing = replace(timing, silence_threshold_db=args.silence_threshold_db)
    if args.min_pause is not None:
        timing = replace(timing, min_pause_s=args.min_pause)
    if args.min_dip is not None:
        timing = replace(timing, min_dip_db=args.min_dip)
    formant = params.formant
    if args.formant_ceiling is not None:
        formant = replace(formant, ceiling=args.formant_ceiling)
    updates = {"timing": timing, "formant": formant}
    if args.vowel_labels:
        updates["vowel_labels"] = frozenset(args.vowel_labels.split(","))
    if args.min_vowel_duration is not None:
        updates["min_vowel_duration"] = args.min_vowel_duration
    if args.phone_tier:
        updates["phone_tier"] = args.phone_tier
    return replace(params, **updates)


def _extract_one(req: ExtractionRequest):
    return [record_to_row(rec) for rec in extract_recording(req)]


def _cmd_extract(args) -> int:
    levels = tuple(s.strip() for s in args.level.split(",") if s.strip())
    params = _pipeline_params(args)
    requests = []
    for path in sorted(args.inputs):
        textgrid = args.textgrid
        if args.textgrid_dir:
            candidate = Path(args.textgrid_dir) / (Path(path).stem + ".TextGrid")
            textgrid = str(candidate) if candidate.exists() else None
        requests.append(ExtractionRequest(path, textgrid, levels, params))
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            rows_nested = list(pool.map(_extract_one, requests))
    else:
        rows_nested = [_extract_one(req) for req in requests]
    rows = [row for group in rows_nested for row in group]
    rows.sort(key=lambda r: (str(r["recording"]), str(r["level"])))
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        out = _csv_text(rows)
        text = out
    _write_out(text, args.output)
    return EXIT_OK


def _csv_text(rows: list[dict]) -> str:
    import io

    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    for row in rows:
        clean = {k: ("" if row.get(k) is None else row.get(k)) for k in CSV_COLUMNS}
        writer.writerow(clean)
    return out.getvalue()


def _cmd_vowels(args) -> int:
    labels = frozenset(args.labels.split(",")) if args.labels else None
    grid = parse_textgrid(Path(args.textgrid).read_text(encoding="utf-8"))
    kwargs = {"min_duration": args.min_duration, "tier_name": args.tier}
    if labels:
        kwargs["target_labels"] = labels
    vowels = find_target_vowels(grid, **kwargs)
    for v in vowels:
        print(f"{v.start:.3f}\t{v.end:.3f}\t{v.label}")
    print(f"{len(vowels)} instances", file=sys.stderr)
    return EXIT_OK


def _cmd_summarize(args) -> int:
    with open(args.features_csv, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if rows and args.group not in rows[0]:
        raise RepSpeechError(f"grouping column {args.group!r} not present in the CSV")
    table = summarize_features(rows, args.group)
    _write_out(emit_table(table, args.format), args.output)
    return EXIT_OK


def _cmd_validate(args) -> int:
    if args.template:
        if args.what == "checklist":
            print(json.dumps(checklist_template(), indent=2))
            return EXIT_OK
        raise RepSpeechError("--template is only available for the checklist")
    data = json.loads(Path(args.file).read_text(encoding="utf-8"))
    if args.what == "manifest":
        if not args.expect:
            raise RepSpeechError("manifest validation needs --expect with the expectation grid")
        expect_raw = json.loads(Path(args.expect).read_text(encoding="utf-8"))
        expectation = ManifestExpectation(
            sessions=tuple((s["participant"], s["day"], s["session"]) for s in expect_raw["sessions"]),
            devices=tuple(expect_raw.get("devices", DEFAULT_DEVICES)),
            tasks=tuple(expect_raw["tasks"]) if expect_raw.get("tasks") else None,
        )
        manifest = [parse_recording_filename(name) for name in data]
        devices = tuple(args.devices.split(",")) if args.devices else DEFAULT_DEVICES
        tasks = tuple(args.tasks.split(",")) if args.tasks else DEFAULT_TASKS
        report = validate_manifest(manifest, expectation, devices, tasks)
    elif args.what == "schedule":
        schedules = data if isinstance(data, list) else [data]
        report = None
        for entry in schedules:
            one = validate_schedule(SessionSchedule.from_dict(entry))
            if report is None:
                report = one
            else:
                report.findings.extend(one.findings)
    elif args.what == "questionnaire":
        report = validate_questionnaire(data)
    elif args.what == "qclog":
        report = validate_qc_log(data)
    else:
        report = lint_study_design(data)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK if report.ok else EXIT_FINDINGS


def _parse_formants(raw: str | None) -> tuple[tuple[float, float], ...]:
    if not raw:
        return ()
    pairs = []
    for item in raw.split(","):
        freq, bw = item.split(":")
        pairs.append((float(freq), float(bw)))
    return tuple(pairs)


def _cmd_synth(args) -> int:
    if args.pattern:
        specs_raw = json.loads(Path(args.pattern).read_text(encoding="utf-8"))
        specs = [
            SynthSpec(
                kind=s["kind"],
                duration=s["duration"],
                f0=s.get("f0"),
                formants=tuple(tuple(p) for p in s.get("formants", [])),
                amplitude=s.get("amplitude", 0.3),
                seed=s.get("seed", 0),
            )
            for s in specs_raw
        ]
        result = synth_pattern(specs)
        buf = result.buffer
        truth = result.to_ground_truth()
    else:
        if not args.kind:
            raise RepSpeechError("synth needs either --pattern or --kind")
        spec = SynthSpec(
            kind=args.kind,
            duration=args.duration,
            f0=args.f0,
            formants=_parse_formants(args.formants),
            amplitude=args.amplitude,
            seed=args.seed,
        )
        buf = render_segment(spec)
        truth = {
            "sample_rate": buf.sample_rate,
            "duration": buf.duration,
            "kind": args.kind,
            "f0": args.f0,
            "formants": list(_parse_formants(args.formants)),
            "amplitude": args.amplitude,
            "seed": args.seed,
        }
    write_wav(buf, args.output)
    sidecar = str(Path(args.output).with_suffix(".json"))
    Path(sidecar).write_text(json.dumps(truth, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {args.output} and {sidecar}", file=sys.stderr)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser, subparsers = _build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # config file supplies defaults; explicit flags win.  Defaults must be
    # pushed into every subparser because each parses into its own namespace.
    try:
        pre, _ = parser.parse_known_args(argv)
        config = _load_config(pre.config)
        if config:
            parser.set_defaults(**config)
            for sp in subparsers:
                sp.set_defaults(**config)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "canonicalize": _cmd_canonicalize,
        "extract": _cmd_extract,
        "vowels": _cmd_vowels,
        "summarize": _cmd_summarize,
        "validate": _cmd_validate,
        "synth": _cmd_synth,
    }
    try:
        return handlers[args.command](args)
    except RepSpeechError as exc:
        _emit_error(exc, args.json)
        return EXIT_ERROR
    except OSError as exc:
        _emit_error(exc, args.json)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
