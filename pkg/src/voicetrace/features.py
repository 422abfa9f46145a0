"""Statistical feature extraction from bispectrum grids.

Each grid reduces to eight numbers: mean, variance, skewness, and excess
kurtosis of the magnitudes and of the biphases over the valid domain. All
moments are population moments.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .bispectrum import BispectrumGrid, BispectrumParams, estimate_bispectrum
from .errors import GridTooSmall, TooFewVectors
from .validation import as_float_matrix

FEATURE_NAMES = (
    "mag_mean", "mag_var", "mag_skew", "mag_kurt",
    "phase_mean", "phase_var", "phase_skew", "phase_kurt",
)
N_FEATURES = len(FEATURE_NAMES)

_VAR_FLOOR = 1e-12
SCATTER_EPS = 1e-6


@dataclass(frozen=True)
class FeatureVector:
    mag_mean: float
    mag_var: float
    mag_skew: float
    mag_kurt: float
    phase_mean: float
    phase_var: float
    phase_skew: float
    phase_kurt: float

    def __post_init__(self):
        for name in FEATURE_NAMES:
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES])

    @classmethod
    def from_array(cls, values) -> "FeatureVector":
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (N_FEATURES,):
            raise ValueError(f"expected {N_FEATURES} components, got shape {values.shape}")
        return cls(*values.tolist())


def moment_stats(values) -> tuple[float, float, float, float]:
    """Population mean, variance, skewness, and excess kurtosis.

    Skewness and kurtosis are defined as 0 when the variance is below 1e-12.
    """
    x = np.asarray(values, dtype=np.float64)
    mean = float(x.mean())
    d = x - mean
    m2 = float(np.mean(d * d))
    if m2 < _VAR_FLOOR:
        return mean, m2, 0.0, 0.0
    m3 = float(np.mean(d * d * d))
    m4 = float(np.mean(d * d * d * d))
    return mean, m2, m3 / m2**1.5, m4 / m2**2 - 3.0


def extract_features(grid: BispectrumGrid) -> FeatureVector:
    """Reduce a grid to the eight magnitude/biphase moments."""
    mags = grid.valid_magnitudes()
    if mags.size < 2:
        raise GridTooSmall(f"need at least 2 valid cells, got {mags.size}")
    return FeatureVector(*moment_stats(mags), *moment_stats(grid.valid_biphases()))


def features_from_signal(signal, params: BispectrumParams | None = None) -> FeatureVector:
    return extract_features(estimate_bispectrum(signal, params))


class FeatureStandardizer(BaseEstimator, TransformerMixin):
    """Per-dimension z-scoring with population standard deviation.

    Dimensions with zero spread map to 0. Fitting requires at least two
    vectors.
    """

    def fit(self, X, y=None):
        X = as_float_matrix(X, N_FEATURES)
        if X.shape[0] < 2:
            raise TooFewVectors(f"need at least 2 vectors to fit, got {X.shape[0]}")
        self.mean_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0)
        return self

    def transform(self, X) -> np.ndarray:
        X = as_float_matrix(X, N_FEATURES)
        scale = np.where(self.scale_ > 0, self.scale_, 1.0)
        out = (X - self.mean_) / scale
        out[:, self.scale_ == 0] = 0.0
        return out

    def to_state(self) -> dict:
        return {"mean": self.mean_.tolist(), "std": self.scale_.tolist()}

    @classmethod
    def from_state(cls, state: dict) -> "FeatureStandardizer":
        obj = cls()
        obj.mean_ = np.asarray(state["mean"], dtype=np.float64)
        obj.scale_ = np.asarray(state["std"], dtype=np.float64)
        if obj.mean_.shape != (N_FEATURES,) or obj.scale_.shape != (N_FEATURES,):
            raise ValueError("standardizer state must hold 8 means and 8 stds")
        return obj


class BispectrumFeatureExtractor(BaseEstimator, TransformerMixin):
    """Stateless transformer: iterable of 1-D signals -> (n, 8) feature matrix.

    Exists so the whole front end drops into sklearn pipelines next to
    FeatureStandardizer and the clustering step.
    """

    def __init__(self, segment_len: int = 256, overlap_fraction: float = 0.5,
                 window: str = "hann"):
        self.segment_len = segment_len
        self.overlap_fraction = overlap_fraction
        self.window = window

    def _params(self) -> BispectrumParams:
        return BispectrumParams(self.segment_len, self.overlap_fraction, self.window)

    def fit(self, X, y=None):
        self._params()  # validate early
        return self

    def transform(self, X) -> np.ndarray:
        params = self._params()
        return np.array([features_from_signal(sig, params).as_array() for sig in X])


def _minmax_to_unit(values: np.ndarray) -> np.ndarray:
    """Min-max normalize onto (eps, 1]; a zero-spread axis maps everything to 1."""
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.ones_like(values)
    return SCATTER_EPS + (1.0 - SCATTER_EPS) * (values - lo) / (hi - lo)


def scatter_points(labeled: list[tuple[str, str, FeatureVector]]) -> list[tuple[str, str, float, float]]:
    """Project labeled vectors to 2-D scatter rows (sample_id, label, x, y).

    x and y are the min-max normalized magnitude and biphase means, kept
    strictly positive so the plot works on a log scale.
    """
    if len(labeled) < 2:
        raise TooFewVectors(f"need at least 2 vectors, got {len(labeled)}")
    xs = _minmax_to_unit(np.array([v.mag_mean for _, _, v in labeled]))
    ys = _minmax_to_unit(np.array([v.phase_mean for _, _, v in labeled]))
    return [(sid, label, float(x), float(y))
            for (sid, label, _), x, y in zip(labeled, xs, ys)]


# -- CSV interchange -------------------------------------------------------

FEATURE_CSV_HEADER = ("sample_id", "label") + FEATURE_NAMES


def write_features_csv(rows: list[tuple[str, str, FeatureVector]],
                       float_format: str = ".9g") -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(FEATURE_CSV_HEADER)
    for sample_id, label, vec in rows:
        writer.writerow([sample_id, label] + [f"{v:{float_format}}" for v in vec.as_array()])
    return out.getvalue()


def read_features_csv(text: str) -> list[tuple[str, str, FeatureVector]]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != list(FEATURE_CSV_HEADER):
        raise ValueError(f"unexpected feature CSV header: {header}")
    return [(row[0], row[1], FeatureVector.from_array([float(v) for v in row[2:]]))
            for row in reader if row]


def write_scatter_csv(rows: list[tuple[str, str, float, float]],
                      float_format: str = ".9g") -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["sample_id", "label", "x", "y"])
    for sample_id, label, x, y in rows:
        writer.writerow([sample_id, label, f"{x:{float_format}}", f"{y:{float_format}}"])
    return out.getvalue()
