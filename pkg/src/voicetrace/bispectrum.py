"""Direct FFT-based bispectrum estimation.

The signal is segmented, windowed, and Fourier transformed; for each frequency
pair (j, k) in the principal domain the triple product X(j) X(k) X*(j+k) is
averaged over segments. Quadratic phase coupling survives the averaging while
random-phase products shrink like 1/sqrt(segments), which is the property the
detection features exploit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window

from .errors import SignalTooShort, NonFiniteSample

WINDOWS = ("rectangular", "hann")

DEFAULT_SEGMENT_LEN = 256
DEFAULT_OVERLAP = 0.5
DEFAULT_WINDOW = "hann"


@dataclass(frozen=True)
class BispectrumParams:
    segment_len: int = DEFAULT_SEGMENT_LEN
    overlap_fraction: float = DEFAULT_OVERLAP
    window: str = DEFAULT_WINDOW

    def __post_init__(self):
        n = self.segment_len
        if n < 8 or n & (n - 1):
            raise ValueError(f"segment_len must be a power of two >= 8, got {n}")
        if not 0 <= self.overlap_fraction < 1:
            raise ValueError(f"overlap_fraction must be in [0, 1), got {self.overlap_fraction}")
        if self.window not in WINDOWS:
            raise ValueError(f"window must be one of {WINDOWS}, got {self.window!r}")

    @property
    def hop(self) -> int:
        return max(1, round(self.segment_len * (1.0 - self.overlap_fraction)))

    def taper(self) -> np.ndarray:
        if self.window == "rectangular":
            return np.ones(self.segment_len)
        return get_window("hann", self.segment_len)


class BispectrumGrid:
    """Averaged complex bispectrum over the principal domain.

    values[j, k] holds the estimate for bin pair (j, k); pairs with
    j + k > segment_len / 2 are outside the domain and excluded from all
    statistics. The grid is exactly symmetric in (j, k).
    """

    def __init__(self, values: np.ndarray, segment_len: int, segment_count: int):
        n_bins = segment_len // 2 + 1
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != (n_bins, n_bins):
            raise ValueError(f"expected shape {(n_bins, n_bins)}, got {values.shape}")
        values = values.copy()
        values[~_valid_mask(segment_len)] = 0.0
        values.flags.writeable = False
        self.values = values
        self.segment_len = int(segment_len)
        self.segment_count = int(segment_count)

    @property
    def n_bins(self) -> int:
        return self.segment_len // 2 + 1

    def valid_mask(self) -> np.ndarray:
        return _valid_mask(self.segment_len)

    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def biphase(self) -> np.ndarray:
        """Principal argument per cell, in (-pi, pi]; arg(0) is 0 by convention."""
        phase = np.angle(self.values)
        phase[phase == -np.pi] = np.pi
        phase[self.values == 0] = 0.0
        return phase

    def valid_magnitudes(self) -> np.ndarray:
        return self.magnitude()[self.valid_mask()]

    def valid_biphases(self) -> np.ndarray:
        return self.biphase()[self.valid_mask()]


def _valid_mask(segment_len: int) -> np.ndarray:
    n_bins = segment_len // 2 + 1
    sums = np.add.outer(np.arange(n_bins), np.arange(n_bins))
    return sums <= segment_len // 2


def estimate_bispectrum(signal, params: BispectrumParams | None = None) -> BispectrumGrid:
    """Estimate the bispectrum of a 1-D signal.

    Segments of ``params.segment_len`` samples are taken every ``params.hop``
    samples (a trailing partial segment is discarded), windowed, and
    transformed; the triple products are averaged over all complete segments.
    """
    params = params or BispectrumParams()
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"signal must be 1-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteSample("signal contains NaN or infinite samples")
    n = params.segment_len
    if len(x) < n:
        raise SignalTooShort(f"signal of {len(x)} samples is shorter than one segment ({n})")

    taper = params.taper()
    n_bins = n // 2 + 1
    mask = _valid_mask(n)
    sum_idx = np.where(mask, np.add.outer(np.arange(n_bins), np.arange(n_bins)), 0)

    acc = np.zeros((n_bins, n_bins), dtype=np.complex128)
    count = 0
    for start in range(0, len(x) - n + 1, params.hop):
        spectrum = np.fft.rfft(taper * x[start : start + n])
        acc += np.where(mask, np.outer(spectrum, spectrum) * np.conj(spectrum[sum_idx]), 0.0)
        count += 1
    acc /= count
    # mirror the upper triangle so value(j, k) == value(k, j) holds exactly
    upper = np.triu(acc) + np.triu(acc, 1).T
    return BispectrumGrid(upper, n, count)


def magnitude_grid(grid: BispectrumGrid) -> np.ndarray:
    return grid.magnitude()


def biphase_grid(grid: BispectrumGrid) -> np.ndarray:
    return grid.biphase()


def grid_to_csv(grid: BispectrumGrid, float_format: str = ".9g") -> str:
    """Render the valid domain as ``j,k,real,imag,magnitude,biphase`` CSV rows."""
    mask = grid.valid_mask()
    mag = grid.magnitude()
    phase = grid.biphase()
    lines = ["j,k,real,imag,magnitude,biphase"]
    for j in range(grid.n_bins):
        for k in range(grid.n_bins):
            if mask[j, k]:
                v = grid.values[j, k]
                lines.append(
                    f"{j},{k},{v.real:{float_format}},{v.imag:{float_format}},"
                    f"{mag[j, k]:{float_format}},{phase[j, k]:{float_format}}"
                )
    return "\n".join(lines) + "\n"
