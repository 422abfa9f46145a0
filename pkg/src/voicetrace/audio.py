"""WAV decoding/encoding and resampling into a canonical mono float representation.

Every function is pure; AudioBuffer instances are immutable and safe to share
between threads.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy.signal import resample_poly

from .errors import MalformedContainer, UnsupportedFormat

DEFAULT_RATE_HZ = 22050

_PCM = 1
_IEEE_FLOAT = 3
_EXTENSIBLE = 0xFFFE

# Symmetric 16-bit scale: +/-1.0 maps to +/-32767, so full-scale round trips
# exactly on the k/32767 grid.
_PCM_SCALE = 32767.0


@dataclass(frozen=True, eq=False, init=False)
class AudioBuffer:
    """Mono audio: float64 samples in [-1, 1] plus a sample rate in Hz."""

    samples: np.ndarray
    sample_rate_hz: int

    def __init__(self, samples, sample_rate_hz: int):
        arr = np.asarray(samples, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError(f"buffer must be mono (1-D), got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("buffer contains NaN or infinite samples")
        if not sample_rate_hz > 0:
            raise ValueError(f"sample rate must be positive, got {sample_rate_hz}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate_hz", int(sample_rate_hz))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


def _read_chunks(data: bytes) -> dict[bytes, bytes]:
    if len(data) < 12:
        raise MalformedContainer("file too short for a RIFF header")
    riff, _size, wave = struct.unpack_from("<4sI4s", data, 0)
    if riff != b"RIFF" or wave != b"WAVE":
        raise MalformedContainer(f"not a RIFF/WAVE container (got {riff!r}/{wave!r})")
    chunks: dict[bytes, bytes] = {}
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        pos += 8
        if pos + size > len(data):
            raise MalformedContainer(f"chunk {cid!r} runs past end of file")
        chunks.setdefault(cid, data[pos : pos + size])
        pos += size + (size & 1)  # chunks are word-aligned
    return chunks


def decode_wav(data: bytes) -> AudioBuffer:
    """Decode a RIFF/WAVE byte string to a mono AudioBuffer.

    Accepts 16-bit PCM and 32-bit IEEE float payloads; multi-channel input is
    averaged per frame. Raises MalformedContainer for structural problems and
    UnsupportedFormat for any other sample encoding.
    """
    chunks = _read_chunks(data)
    if b"fmt " not in chunks or b"data" not in chunks:
        raise MalformedContainer("missing fmt or data chunk")
    fmt = chunks[b"fmt "]
    if len(fmt) < 16:
        raise MalformedContainer("fmt chunk too short")
    code, channels, rate, _byte_rate, _block_align, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if code == _EXTENSIBLE:
        # sub-format GUID starts with the plain format code
        if len(fmt) < 40:
            raise MalformedContainer("extensible fmt chunk too short")
        (code,) = struct.unpack_from("<H", fmt, 24)
    if channels < 1 or rate < 1:
        raise MalformedContainer(f"invalid channel count {channels} or rate {rate}")

    payload = chunks[b"data"]
    if code == _PCM and bits == 16:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % 2], dtype="<i2")
        samples = _downmix(raw.astype(np.float64), channels) / _PCM_SCALE
        np.clip(samples, -1.0, 1.0, out=samples)  # only -32768 is affected
    elif code == _IEEE_FLOAT and bits == 32:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % 4], dtype="<f4")
        samples = raw.astype(np.float64)
        if not np.all(np.isfinite(samples)):
            raise MalformedContainer("float payload contains NaN or infinity")
        samples = _downmix(samples, channels)
        np.clip(samples, -1.0, 1.0, out=samples)
    else:
        raise UnsupportedFormat(f"format code {code} at {bits} bits is not supported")
    return AudioBuffer(samples, rate)


def _downmix(samples: np.ndarray, channels: int) -> np.ndarray:
    """Per-frame mean. Runs on raw integer-valued (or float32-exact) samples
    so that identical channels average to the channel value exactly."""
    if channels == 1:
        return samples
    frames = len(samples) // channels
    return samples[: frames * channels].reshape(frames, channels).mean(axis=1)


def encode_wav(buffer: AudioBuffer) -> bytes:
    """Encode to mono 16-bit PCM little-endian WAV at the buffer's rate.

    Samples are clamped to [-1, 1] and scaled by 32767 with
    round-half-away-from-zero.
    """
    clamped = np.clip(buffer.samples, -1.0, 1.0)
    scaled = clamped * _PCM_SCALE
    quantized = np.copysign(np.floor(np.abs(scaled) + 0.5), scaled).astype("<i2")
    payload = quantized.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(payload),
        b"WAVE",
        b"fmt ",
        16,
        _PCM,
        1,
        buffer.sample_rate_hz,
        buffer.sample_rate_hz * 2,
        2,
        16,
        b"data",
        len(payload),
    )
    return header + payload


def resample(buffer: AudioBuffer, target_rate_hz: int) -> AudioBuffer:
    """Band-limited resampling; output length is round(n * target / source)."""
    if not target_rate_hz > 0:
        raise ValueError(f"target rate must be positive, got {target_rate_hz}")
    if target_rate_hz == buffer.sample_rate_hz:
        return buffer
    g = math.gcd(target_rate_hz, buffer.sample_rate_hz)
    up, down = target_rate_hz // g, buffer.sample_rate_hz // g
    out = resample_poly(buffer.samples, up, down, window=("kaiser", 8.6))
    n_out = round(len(buffer.samples) * target_rate_hz / buffer.sample_rate_hz)
    if len(out) < n_out:
        out = np.pad(out, (0, n_out - len(out)))
    else:
        out = out[:n_out]
    np.clip(out, -1.0, 1.0, out=out)  # the filter can overshoot slightly
    return AudioBuffer(out, target_rate_hz)


def read_wav(path) -> AudioBuffer:
    with open(path, "rb") as fh:
        return decode_wav(fh.read())


def write_wav(path, buffer: AudioBuffer) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_wav(buffer))
