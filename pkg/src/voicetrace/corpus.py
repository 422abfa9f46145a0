"""Corpus assembly: silence handling, alignment cutting, duration filtering,
train/validation splitting, and the pipe-separated manifest format."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer
from .errors import (
    AllSilent,
    EmptyManifest,
    MalformedLine,
    OverlappingSpans,
    PadOutOfRange,
    SpanOutOfRange,
    ValCountTooLarge,
)
from .textnorm import DEFAULT_CHARSET, normalize_text

MIN_DURATION_S = 0.5
MAX_DURATION_S = 30.0
PAD_RANGE_S = (0.3, 0.5)
DEFAULT_PAD_S = 0.4
DEFAULT_TRIM_THRESHOLD_DBFS = -40.0
DEFAULT_TRIM_FRAME_MS = 10.0
DEFAULT_VAL_RATIO = 0.08


@dataclass(frozen=True)
class CorpusEntry:
    audio_path: str
    transcript: str
    duration_s: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.duration_s) and self.duration_s >= 0):
            raise ValueError(f"duration must be finite and >= 0, got {self.duration_s}")


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple[CorpusEntry, ...]
    charset: frozenset[str] = DEFAULT_CHARSET

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        paths = [e.audio_path for e in self.entries]
        if len(set(paths)) != len(paths):
            raise ValueError("audio paths in a manifest must be unique")
        for e in self.entries:
            bad = set(e.transcript) - self.charset
            if bad:
                raise ValueError(f"{e.audio_path}: transcript characters outside charset: {sorted(bad)}")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def total_duration_s(self) -> float:
        return sum(e.duration_s for e in self.entries)


@dataclass(frozen=True)
class AlignmentSpan:
    start_s: float
    end_s: float
    text: str

    def __post_init__(self):
        if not 0 <= self.start_s < self.end_s:
            raise ValueError(f"need 0 <= start < end, got [{self.start_s}, {self.end_s})")


def trim_silence(buffer: AudioBuffer,
                 threshold_dbfs: float = DEFAULT_TRIM_THRESHOLD_DBFS,
                 frame_ms: float = DEFAULT_TRIM_FRAME_MS) -> AudioBuffer:
    """Drop leading/trailing frames whose RMS is below the threshold.

    Trimming granularity is one frame; interior audio is untouched. Raises
    AllSilent when no frame reaches the threshold.
    """
    if not frame_ms > 0:
        raise ValueError(f"frame_ms must be positive, got {frame_ms}")
    frame_len = max(1, round(frame_ms / 1000.0 * buffer.sample_rate_hz))
    threshold = 10.0 ** (threshold_dbfs / 20.0)

    samples = buffer.samples
    n_full = len(samples) // frame_len
    energy = samples[: n_full * frame_len].reshape(n_full, frame_len)
    rms = np.sqrt(np.mean(energy * energy, axis=1)) if n_full else np.empty(0)
    tail = samples[n_full * frame_len :]
    if tail.size:
        rms = np.append(rms, np.sqrt(np.mean(tail * tail)))

    loud = np.flatnonzero(rms >= threshold)
    if loud.size == 0:
        raise AllSilent(f"no frame reaches {threshold_dbfs} dBFS")
    start = int(loud[0]) * frame_len
    end = min(len(samples), (int(loud[-1]) + 1) * frame_len)
    return AudioBuffer(samples[start:end], buffer.sample_rate_hz)


def pad_tail_silence(buffer: AudioBuffer, pad_s: float = DEFAULT_PAD_S) -> AudioBuffer:
    """Append round(pad_s * rate) zero samples; pad_s must lie in [0.3, 0.5]."""
    lo, hi = PAD_RANGE_S
    if not lo <= pad_s <= hi:
        raise PadOutOfRange(f"pad must be within [{lo}, {hi}] s, got {pad_s}")
    n_pad = round(pad_s * buffer.sample_rate_hz)
    return AudioBuffer(np.concatenate([buffer.samples, np.zeros(n_pad)]), buffer.sample_rate_hz)


def _check_spans(spans: list[AlignmentSpan], buffer: AudioBuffer) -> None:
    for prev, cur in zip(spans, spans[1:]):
        if cur.start_s < prev.start_s:
            raise OverlappingSpans("spans must be sorted by start time")
        if cur.start_s < prev.end_s:
            raise OverlappingSpans(
                f"span [{cur.start_s}, {cur.end_s}) overlaps [{prev.start_s}, {prev.end_s})")
    if spans and round(spans[-1].end_s * buffer.sample_rate_hz) > len(buffer):
        raise SpanOutOfRange(
            f"span end {spans[-1].end_s} s beyond buffer of {buffer.duration_s} s")


def cut_by_alignment(buffer: AudioBuffer, spans: list[AlignmentSpan],
                     replacement_lexicon: dict[str, str] | None = None,
                     name_prefix: str = "segment",
                     charset: frozenset[str] = DEFAULT_CHARSET,
                     ) -> list[tuple[AudioBuffer, CorpusEntry]]:
    """Cut one audio segment per alignment span, normalizing the span text."""
    _check_spans(spans, buffer)
    rate = buffer.sample_rate_hz
    out = []
    for i, span in enumerate(spans):
        lo, hi = round(span.start_s * rate), round(span.end_s * rate)
        segment = AudioBuffer(buffer.samples[lo:hi], rate)
        entry = CorpusEntry(
            audio_path=f"{name_prefix}_{i:04d}.wav",
            transcript=normalize_text(span.text, replacement_lexicon, charset),
            duration_s=len(segment) / rate,
        )
        out.append((segment, entry))
    return out


def filter_by_duration(manifest: CorpusManifest,
                       min_s: float = MIN_DURATION_S,
                       max_s: float = MAX_DURATION_S,
                       ) -> tuple[CorpusManifest, CorpusManifest]:
    """Partition into (kept, dropped) by inclusive duration bounds, order preserved."""
    if not 0 <= min_s < max_s:
        raise ValueError(f"need 0 <= min < max, got [{min_s}, {max_s}]")
    kept = tuple(e for e in manifest.entries if min_s <= e.duration_s <= max_s)
    dropped = tuple(e for e in manifest.entries if not min_s <= e.duration_s <= max_s)
    return (CorpusManifest(kept, manifest.charset), CorpusManifest(dropped, manifest.charset))


def split_train_val(manifest: CorpusManifest,
                    val_ratio: float = DEFAULT_VAL_RATIO,
                    val_floor: int | None = None,
                    explicit_val_count: int | None = None,
                    seed: int = 0) -> tuple[CorpusManifest, CorpusManifest]:
    """Deterministic seeded train/validation split.

    The validation size is explicit_val_count when given, otherwise
    max(round(val_ratio * N), val_floor) capped at N - 1. Assignment is a
    seeded uniform shuffle followed by a prefix split; entries keep their
    manifest order within each part.
    """
    n = len(manifest)
    if n == 0:
        raise EmptyManifest("cannot split an empty manifest")
    if not 0 < val_ratio < 1:
        raise ValueError(f"val_ratio must be in (0, 1), got {val_ratio}")
    if explicit_val_count is not None:
        if explicit_val_count >= n:
            raise ValCountTooLarge(f"validation count {explicit_val_count} >= manifest size {n}")
        n_val = explicit_val_count
    else:
        n_val = round(val_ratio * n)
        if val_floor is not None:
            n_val = max(n_val, val_floor)
        n_val = min(n_val, n - 1)

    order = np.random.default_rng(seed).permutation(n)
    val_idx = set(order[:n_val].tolist())
    val = tuple(e for i, e in enumerate(manifest.entries) if i in val_idx)
    train = tuple(e for i, e in enumerate(manifest.entries) if i not in val_idx)
    return (CorpusManifest(train, manifest.charset), CorpusManifest(val, manifest.charset))


def write_manifest(manifest: CorpusManifest) -> bytes:
    """Serialize as UTF-8 ``audio_path|transcript`` lines (LF endings)."""
    lines = [f"{e.audio_path}|{e.transcript}\n" for e in manifest.entries]
    return "".join(lines).encode("utf-8")


def parse_raw_pairs(data: bytes) -> list[tuple[str, str]]:
    """Split pipe-separated manifest lines into (audio_path, transcript) pairs
    without charset validation, for ingesting unnormalized metadata files."""
    pairs = []
    for lineno, line in enumerate(data.decode("utf-8").splitlines(), start=1):
        if not line:
            continue
        fields = line.split("|")
        if len(fields) != 2:
            raise MalformedLine(f"line {lineno}: expected 2 pipe-separated fields, got {len(fields)}")
        pairs.append((fields[0], fields[1]))
    return pairs


def parse_manifest(data: bytes, charset: frozenset[str] = DEFAULT_CHARSET) -> CorpusManifest:
    """Inverse of write_manifest; durations are re-derived from audio on demand."""
    entries = tuple(CorpusEntry(audio_path=p, transcript=t) for p, t in parse_raw_pairs(data))
    return CorpusManifest(entries, charset)


def read_alignment_csv(path) -> list[AlignmentSpan]:
    """Read alignment spans from a CSV file with header ``start_s,end_s,text``."""
    spans = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            spans.append(AlignmentSpan(float(row["start_s"]), float(row["end_s"]), row["text"]))
    return spans
