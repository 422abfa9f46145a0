"""Command-line surface: prepare corpora, compute features, build voice
profiles, run detection, and emit report artifacts.

Exit codes: 0 on success, 2 on operational errors, 64 on bad usage. All
emitted files are byte-stable across reruns and worker counts: floats are
serialized with 9 significant digits and row order never depends on
scheduling.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import audio, corpus, detect, features, synth, textnorm
from .bispectrum import BispectrumParams, estimate_bispectrum, grid_to_csv
from .errors import EmptyQuerySet, VoicetraceError

EXIT_OK = 0
EXIT_OPERATIONAL = 2
EXIT_USAGE = 64

FLOAT_DIGITS = 9


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(value: float) -> str:
    return f"{value:.{FLOAT_DIGITS}g}"


def _read_config(path: str) -> dict[str, str]:
    """Parse a flat TOML-style key=value file; '#' starts a comment."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise VoicetraceError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value.strip("\"'")
    return values


def _pool_map(fn, items, jobs: int):
    """Apply fn preserving input order; jobs > 1 fans out to threads."""
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")


# -- prepare ----------------------------------------------------------------


def _process_clip(buffer: audio.AudioBuffer, args) -> audio.AudioBuffer:
    out = audio.resample(buffer, args.rate)
    out = corpus.trim_silence(out, args.trim_threshold_dbfs, args.trim_frame_ms)
    return corpus.pad_tail_silence(out, args.pad)


def _prepare_jobs(args, lexicon) -> list:
    """Build per-clip jobs returning (relative path, transcript, raw buffer).

    Manifest-mode jobs read their clip lazily so memory stays bounded by the
    worker count rather than the corpus size.
    """
    if args.manifest:
        input_dir = Path(args.input_dir or Path(args.manifest).parent)
        pairs = corpus.parse_raw_pairs(Path(args.manifest).read_bytes())

        def make_job(rel_path, raw_text):
            def job():
                buffer = audio.read_wav(input_dir / rel_path)
                transcript = textnorm.normalize_text(raw_text, lexicon)
                return str(Path("clips") / rel_path), transcript, buffer
            return job

        return [make_job(rel_path, raw_text) for rel_path, raw_text in pairs]

    recording = audio.resample(audio.read_wav(args.recording), args.rate)
    spans = corpus.read_alignment_csv(args.alignment)
    stem = Path(args.recording).stem
    cuts = corpus.cut_by_alignment(recording, spans, lexicon, name_prefix=stem)
    return [
        (lambda seg=segment, ent=entry:
            (str(Path("clips") / ent.audio_path), ent.transcript, seg))
        for segment, entry in cuts
    ]


def _summary_table(rows: list[tuple[str, int, float]]) -> str:
    lines = [f"{'set':<10} {'samples':>8} {'duration':>12}"]
    for name, count, duration_s in rows:
        lines.append(f"{name:<10} {count:>8} {duration_s / 60.0:>10.1f} m")
    return "\n".join(lines)


def cmd_prepare(args) -> int:
    if bool(args.manifest) == bool(args.alignment):
        raise VoicetraceError("choose exactly one input mode: --manifest or --alignment + --recording")
    if args.alignment and not args.recording:
        raise VoicetraceError("--alignment requires --recording")
    lexicon = textnorm.load_lexicon_csv(args.lexicon) if args.lexicon else None
    output_dir = Path(args.output_dir)

    def process(job):
        rel_path, transcript, buffer = job()
        processed = _process_clip(buffer, args)
        target = output_dir / rel_path
        target.parent.mkdir(parents=True, exist_ok=True)
        audio.write_wav(target, processed)
        return corpus.CorpusEntry(rel_path, transcript, processed.duration_s)

    entries = _pool_map(process, _prepare_jobs(args, lexicon), args.jobs)
    manifest = corpus.CorpusManifest(tuple(entries))
    kept, dropped = corpus.filter_by_duration(manifest, args.min_duration, args.max_duration)
    train, val = corpus.split_train_val(
        kept, args.val_ratio, args.val_floor, args.val_count, args.seed)

    _write_text(output_dir / "metadata.csv", corpus.write_manifest(kept).decode("utf-8"))
    _write_text(output_dir / "metadata_train.csv", corpus.write_manifest(train).decode("utf-8"))
    _write_text(output_dir / "metadata_val.csv", corpus.write_manifest(val).decode("utf-8"))
    _write_text(output_dir / "metadata_dropped.csv", corpus.write_manifest(dropped).decode("utf-8"))

    print(_summary_table([
        ("train", len(train), train.total_duration_s),
        ("val", len(val), val.total_duration_s),
        ("total", len(kept), kept.total_duration_s),
        ("dropped", len(dropped), dropped.total_duration_s),
    ]))
    return EXIT_OK


# -- features ----------------------------------------------------------------


def _bispectrum_params(args) -> BispectrumParams:
    return BispectrumParams(args.segment_len, args.overlap, args.window)


def cmd_features(args) -> int:
    input_dir = Path(args.input_dir)
    wavs = sorted(input_dir.glob("*.wav"))
    if not wavs:
        raise EmptyQuerySet(f"no .wav files in {input_dir}")
    labels: dict[str, str] = {}
    if args.labels:
        with open(args.labels, newline="", encoding="utf-8") as fh:
            labels = {row["sample_id"]: row["label"] for row in csv.DictReader(fh)}
    params = _bispectrum_params(args)

    def extract(path: Path):
        try:
            grid = estimate_bispectrum(audio.read_wav(path).samples, params)
            if args.grid_dir:
                _write_text(Path(args.grid_dir) / f"{path.stem}.bispec.csv", grid_to_csv(grid))
            return path.stem, features.extract_features(grid), None
        except (VoicetraceError, OSError) as exc:
            if not args.keep_going:
                raise
            return path.stem, None, exc

    results = _pool_map(extract, wavs, args.jobs)
    failed = [(stem, exc) for stem, vec, exc in results if exc is not None]
    rows = [(stem, labels.get(stem, ""), vec) for stem, vec, exc in results if exc is None]
    for stem, exc in failed:
        print(f"skipped {stem}: {exc}", file=sys.stderr)
    _write_text(Path(args.output), features.write_features_csv(rows))
    print(f"wrote {len(rows)} feature rows to {args.output}"
          + (f" ({len(failed)} skipped)" if failed else ""))
    return EXIT_OK


# -- profile / detect ---------------------------------------------------------


def _load_features(path) -> list[tuple[str, str, features.FeatureVector]]:
    return features.read_features_csv(Path(path).read_text(encoding="utf-8"))


def _default_timestamp() -> str:
    """Outputs must be a pure function of inputs and flags, so the stamp
    defaults to empty; SOURCE_DATE_EPOCH or --timestamp supply a real one."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if not epoch:
        return ""
    return datetime.datetime.fromtimestamp(
        int(epoch), datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def cmd_profile(args) -> int:
    rows = _load_features(args.features)
    if not rows:
        raise EmptyQuerySet(f"no feature rows in {args.features}")
    params = None
    if args.eps is not None:
        params = detect.DbscanParams(args.eps, args.min_pts)
    profile = detect.VoiceProfile(
        subject_id=args.subject_id,
        reference=tuple((sid, vec) for sid, _, vec in rows),
        params=params,
        created_at=args.timestamp or _default_timestamp(),
    )
    _write_text(Path(args.output), profile.to_json(FLOAT_DIGITS))
    print(f"profile for {args.subject_id!r} with {len(rows)} reference samples -> {args.output}")
    return EXIT_OK


def _read_ground_truth(path) -> dict[str, str]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["sample_id"]: row["label"] for row in csv.DictReader(fh)}


def cmd_detect(args) -> int:
    profile = detect.VoiceProfile.from_json(Path(args.profile).read_text(encoding="utf-8"))
    rows = _load_features(args.features)
    queries = [(sid, vec) for sid, _, vec in rows]

    eps = args.eps if args.eps is not None else (profile.params.eps if profile.params else None)
    if eps is None:
        raise VoicetraceError(
            "no eps given and the profile stores none; inspect the k-distance "
            "curve (report --k-distance-out) and pass --eps")
    min_pts = args.min_pts if args.min_pts is not None else (
        profile.params.min_pts if profile.params else detect.DEFAULT_MIN_PTS)

    report = detect.classify(
        profile, queries, detect.DbscanParams(eps, min_pts),
        real_fraction_threshold=args.real_fraction,
        fit_on_union=(args.fit_on == "union"),
    )
    if args.ground_truth:
        report = detect.evaluate(report, _read_ground_truth(args.ground_truth))
    _write_text(Path(args.output), report.to_json(FLOAT_DIGITS))
    print(report.to_table(), end="")
    return EXIT_OK


# -- report -------------------------------------------------------------------


def cmd_report(args) -> int:
    rows: list[tuple[str, str, features.FeatureVector]] = []
    for path in args.features or []:
        rows.extend(_load_features(path))

    if args.scatter_out:
        if not rows:
            raise EmptyQuerySet("scatter output needs at least one --features file")
        scatter = features.scatter_points(rows)
        _write_text(Path(args.scatter_out), features.write_scatter_csv(scatter))
        print(f"scatter with {len(scatter)} points -> {args.scatter_out}")

    if args.k_distance_out:
        if not rows:
            raise EmptyQuerySet("k-distance output needs at least one --features file")
        matrix = np.array([vec.as_array() for _, _, vec in rows])
        standardized = features.FeatureStandardizer().fit(matrix).transform(matrix)
        curve = detect.k_distance_curve(standardized, args.k)
        lines = ["index,distance"] + [f"{i},{_fmt(d)}" for i, d in enumerate(curve)]
        _write_text(Path(args.k_distance_out), "\n".join(lines) + "\n")
        print(f"{args.k}-distance curve over {len(curve)} points -> {args.k_distance_out}")

    if args.report:
        report_doc = Path(args.report).read_text(encoding="utf-8")
        report = _report_confusion_from_json(report_doc)
        if report is None:
            print("report holds no ground-truth metrics; confusion matrix omitted")
        elif args.confusion_out:
            _write_text(Path(args.confusion_out), report)
            print(f"confusion matrix -> {args.confusion_out}")
    return EXIT_OK


def _report_confusion_from_json(text: str) -> str | None:
    metrics = json.loads(text).get("metrics")
    if not metrics:
        return None
    c = metrics["confusion"]
    return (
        ",predicted_real,predicted_fake\n"
        f"actual_real,{c['tn_fake']},{c['fp_fake']}\n"
        f"actual_fake,{c['fn_fake']},{c['tp_fake']}\n"
    )


# -- synth --------------------------------------------------------------------


def cmd_synth(args) -> int:
    output_dir = Path(args.output_dir)
    reference, queries, ground_truth = synth.surrogate_corpus(
        n_reference=args.n_reference,
        n_real_queries=args.n_real,
        n_fake_queries=args.n_fake,
        f1_bin=args.f1, f2_bin=args.f2,
        amplitude=args.amplitude, noise_sigma=args.noise_sigma,
        segment_len=args.segment_len, n_segments=args.segments,
        base_seed=args.seed,
    )

    def write_group(group, subdir):
        for sample_id, signal in group:
            target = output_dir / subdir / f"{sample_id}.wav"
            target.parent.mkdir(parents=True, exist_ok=True)
            audio.write_wav(target, audio.AudioBuffer(np.clip(signal, -1.0, 1.0), args.rate))

    write_group(reference, "reference")
    write_group(queries, "queries")
    lines = ["sample_id,label"] + [f"{sid},{ground_truth[sid]}" for sid, _ in queries]
    _write_text(output_dir / "ground_truth.csv", "\n".join(lines) + "\n")
    print(f"{len(reference)} reference + {len(queries)} query signals -> {output_dir}")
    return EXIT_OK


# -- argument wiring -----------------------------------------------------------


def build_parser() -> tuple[_Parser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="voicetrace", description=__doc__)
    parser.add_argument("--config", help="key=value defaults file; explicit flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="canonicalize audio and build train/val manifests")
    p.add_argument("--manifest", help="pipe-separated metadata file with raw transcripts")
    p.add_argument("--input-dir", help="directory audio paths in the manifest are relative to")
    p.add_argument("--recording", help="single recording for alignment cutting")
    p.add_argument("--alignment", help="CSV of start_s,end_s,text spans")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--rate", type=int, default=audio.DEFAULT_RATE_HZ)
    p.add_argument("--min-duration", type=float, default=corpus.MIN_DURATION_S)
    p.add_argument("--max-duration", type=float, default=corpus.MAX_DURATION_S)
    p.add_argument("--pad", type=float, default=corpus.DEFAULT_PAD_S)
    p.add_argument("--trim-threshold-dbfs", type=float, default=corpus.DEFAULT_TRIM_THRESHOLD_DBFS)
    p.add_argument("--trim-frame-ms", type=float, default=corpus.DEFAULT_TRIM_FRAME_MS)
    p.add_argument("--val-ratio", type=float, default=corpus.DEFAULT_VAL_RATIO)
    p.add_argument("--val-floor", type=int, default=None)
    p.add_argument("--val-count", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lexicon", help="replacement lexicon CSV with header from,to")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("features", help="extract bispectral feature vectors from WAVs")
    p.add_argument("--input-dir", required=True)
    p.add_argument("--output", required=True, help="feature CSV path")
    p.add_argument("--segment-len", type=int, default=256)
    p.add_argument("--overlap", type=float, default=0.5)
    p.add_argument("--window", choices=["rectangular", "hann"], default="hann")
    p.add_argument("--labels", help="optional sample_id,label CSV merged into the output")
    p.add_argument("--grid-dir", help="also write per-file bispectrum grids as CSV")
    p.add_argument("--keep-going", action="store_true",
                   help="skip unreadable files instead of aborting")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("profile", help="build a known-real voice profile from features")
    p.add_argument("--features", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--subject-id", required=True)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--min-pts", type=int, default=detect.DEFAULT_MIN_PTS)
    p.add_argument("--timestamp", help="override the created_at stamp (ISO-8601)")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("detect", help="classify query features against a profile")
    p.add_argument("--profile", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--output", required=True, help="report JSON path")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--min-pts", type=int, default=None)
    p.add_argument("--real-fraction", type=float, default=detect.DEFAULT_REAL_FRACTION)
    p.add_argument("--fit-on", choices=["union", "reference"], default="union")
    p.add_argument("--ground-truth", help="sample_id,label CSV enabling metrics")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("report", help="emit scatter, k-distance, and confusion CSVs")
    p.add_argument("--features", action="append", help="feature CSV (repeatable)")
    p.add_argument("--scatter-out")
    p.add_argument("--report", help="detection report JSON")
    p.add_argument("--confusion-out")
    p.add_argument("--k", type=int, default=detect.DEFAULT_MIN_PTS)
    p.add_argument("--k-distance-out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="write a seeded synthetic WAV corpus with ground truth")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--n-reference", type=int, default=50)
    p.add_argument("--n-real", type=int, default=25)
    p.add_argument("--n-fake", type=int, default=25)
    p.add_argument("--f1", type=int, default=5)
    p.add_argument("--f2", type=int, default=9)
    p.add_argument("--amplitude", type=float, default=0.25)
    p.add_argument("--noise-sigma", type=float, default=0.02)
    p.add_argument("--segment-len", type=int, default=64)
    p.add_argument("--segments", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rate", type=int, default=audio.DEFAULT_RATE_HZ)
    p.set_defaults(func=cmd_synth)
    return parser, dict(sub.choices)


def _coerce(action: argparse.Action, value: str):
    if isinstance(action, argparse._StoreTrueAction):  # noqa: SLF001
        return value.lower() in ("1", "true", "yes", "on")
    return value if action.type is None else action.type(value)


def _apply_config(subparsers: dict[str, argparse.ArgumentParser], config: dict[str, str]) -> None:
    """Install config values as subcommand defaults, coerced through each
    option's declared type; explicit flags still win at parse time."""
    for subparser in subparsers.values():
        defaults = {}
        for action in subparser._actions:  # noqa: SLF001 - argparse has no public accessor
            if action.dest in config:
                defaults[action.dest] = _coerce(action, config[action.dest])
        subparser.set_defaults(**defaults)


def _find_config_path(argv: list[str]) -> str | None:
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if token.startswith("--config="):
            return token.split("=", 1)[1]
    return None


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    try:
        config_path = _find_config_path(argv)
        if config_path:
            _apply_config(subparsers, _read_config(config_path))
        args = parser.parse_args(argv)
        return args.func(args)
    except (VoicetraceError, OSError) as exc:
        print(f"voicetrace: error: {exc}", file=sys.stderr)
        return EXIT_OPERATIONAL


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
