"""Cluster-based anomaly detection against a known-real voice profile.

Feature vectors from reference (verified real) and query audio are
standardized together and clustered with DBSCAN; a cluster counts as real when
at least the configured fraction of its members are reference samples. Queries
that land outside every real cluster, including noise points, are flagged as
fake.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .errors import EmptyQuerySet, KTooLarge, MissingGroundTruth
from .features import FeatureStandardizer, FeatureVector, N_FEATURES
from .validation import as_float_matrix

NOISE = -1

DEFAULT_MIN_PTS = 4
DEFAULT_REAL_FRACTION = 0.5

_UNDEFINED = -2


@dataclass(frozen=True)
class DbscanParams:
    eps: float
    min_pts: int = DEFAULT_MIN_PTS

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.min_pts < 1:
            raise ValueError(f"min_pts must be >= 1, got {self.min_pts}")


def dbscan(points, eps: float, min_pts: int) -> np.ndarray:
    """Density-based clustering with deterministic tie-breaking.

    Euclidean metric; a core point has at least min_pts neighbors within eps
    (inclusive, counting itself). Points are visited in input order, border
    points join the first cluster that reaches them, and cluster ids are
    assigned in order of discovery. Returns one label per point, NOISE (-1)
    for outliers.
    """
    DbscanParams(eps, min_pts)
    if len(points) == 0:
        return np.empty(0, dtype=np.int64)
    X = as_float_matrix(points, name="points")
    diffs = X[:, None, :] - X[None, :, :]
    within = (diffs * diffs).sum(axis=2) <= eps * eps
    neighborhoods = [np.flatnonzero(row) for row in within]

    labels = np.full(len(X), _UNDEFINED, dtype=np.int64)
    cluster = 0
    for i in range(len(X)):
        if labels[i] != _UNDEFINED:
            continue
        if len(neighborhoods[i]) < min_pts:
            labels[i] = NOISE
            continue
        labels[i] = cluster
        seeds = deque(int(j) for j in neighborhoods[i] if j != i)
        while seeds:
            q = seeds.popleft()
            if labels[q] == NOISE:
                labels[q] = cluster  # border point, no expansion
            if labels[q] != _UNDEFINED:
                continue
            labels[q] = cluster
            if len(neighborhoods[q]) >= min_pts:
                seeds.extend(int(j) for j in neighborhoods[q])
        cluster += 1
    return labels


class DBSCAN(BaseEstimator, ClusterMixin):
    """Estimator wrapper around :func:`dbscan` (fit/fit_predict, labels_)."""

    def __init__(self, eps: float = 1.0, min_pts: int = DEFAULT_MIN_PTS):
        self.eps = eps
        self.min_pts = min_pts

    def fit(self, X, y=None):
        self.labels_ = dbscan(X, self.eps, self.min_pts)
        return self


def k_distance_curve(points, k: int) -> np.ndarray:
    """Sorted k-th nearest-neighbor distances, the operator aid for picking eps."""
    X = as_float_matrix(points, name="points")
    if k >= len(X):
        raise KTooLarge(f"k={k} needs more than k points, got {len(X)}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    diffs = X[:, None, :] - X[None, :, :]
    dist = np.sqrt((diffs * diffs).sum(axis=2))
    dist.sort(axis=1)
    return np.sort(dist[:, k])  # column 0 is the point itself


@dataclass(frozen=True)
class VoiceProfile:
    """Known-real reference features for one speaker."""

    subject_id: str
    reference: tuple[tuple[str, FeatureVector], ...]
    standardizer: FeatureStandardizer | None = None
    params: DbscanParams | None = None
    created_at: str = ""

    def __post_init__(self):
        object.__setattr__(self, "reference", tuple(self.reference))
        if not self.reference:
            raise ValueError("a profile needs at least one reference sample")
        ids = [sid for sid, _ in self.reference]
        if len(set(ids)) != len(ids):
            raise ValueError("reference sample ids must be unique")

    def reference_matrix(self) -> np.ndarray:
        return np.array([vec.as_array() for _, vec in self.reference])

    def to_json(self, float_digits: int = 9) -> str:
        doc = {
            "schema_version": 1,
            "subject_id": self.subject_id,
            "created_at": self.created_at,
            "params": None if self.params is None else
                {"eps": _round(self.params.eps, float_digits), "min_pts": self.params.min_pts},
            "standardizer": None if self.standardizer is None else
                {k: [_round(v, float_digits) for v in vals]
                 for k, vals in self.standardizer.to_state().items()},
            "reference": [
                {"sample_id": sid, "features": [_round(v, float_digits) for v in vec.as_array()]}
                for sid, vec in self.reference
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "VoiceProfile":
        doc = json.loads(text)
        if doc.get("schema_version") != 1:
            raise ValueError(f"unsupported profile schema version {doc.get('schema_version')!r}")
        params = doc.get("params")
        standardizer = doc.get("standardizer")
        return cls(
            subject_id=doc["subject_id"],
            reference=tuple((r["sample_id"], FeatureVector.from_array(r["features"]))
                            for r in doc["reference"]),
            standardizer=None if standardizer is None else FeatureStandardizer.from_state(standardizer),
            params=None if params is None else DbscanParams(params["eps"], params["min_pts"]),
            created_at=doc.get("created_at", ""),
        )


@dataclass(frozen=True)
class QueryVerdict:
    sample_id: str
    cluster_id: int  # NOISE for outliers
    verdict: str  # "real" | "fake"


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts over (actual, predicted) with fake as the positive class."""

    tp_fake: int
    fp_fake: int
    fn_fake: int
    tn_fake: int

    @property
    def total(self) -> int:
        return self.tp_fake + self.fp_fake + self.fn_fake + self.tn_fake

    def precision_fake(self) -> tuple[float, bool]:
        denom = self.tp_fake + self.fp_fake
        return (0.0, True) if denom == 0 else (self.tp_fake / denom, False)

    def recall_fake(self) -> tuple[float, bool]:
        denom = self.tp_fake + self.fn_fake
        return (0.0, True) if denom == 0 else (self.tp_fake / denom, False)


@dataclass(frozen=True)
class DetectionReport:
    verdicts: tuple[QueryVerdict, ...]
    params: DbscanParams
    real_fraction_threshold: float
    fit_on_union: bool
    confusion: ConfusionMatrix | None = None

    @property
    def precision_fake(self) -> float:
        return 0.0 if self.confusion is None else self.confusion.precision_fake()[0]

    @property
    def recall_fake(self) -> float:
        return 0.0 if self.confusion is None else self.confusion.recall_fake()[0]

    def to_json(self, float_digits: int = 9) -> str:
        metrics = None
        if self.confusion is not None:
            precision, p_degenerate = self.confusion.precision_fake()
            recall, r_degenerate = self.confusion.recall_fake()
            metrics = {
                "confusion": {
                    "tp_fake": self.confusion.tp_fake,
                    "fp_fake": self.confusion.fp_fake,
                    "fn_fake": self.confusion.fn_fake,
                    "tn_fake": self.confusion.tn_fake,
                },
                "precision_fake": _round(precision, float_digits),
                "recall_fake": _round(recall, float_digits),
                "precision_degenerate": p_degenerate,
                "recall_degenerate": r_degenerate,
            }
        doc = {
            "schema_version": 1,
            "params": {"eps": _round(self.params.eps, float_digits), "min_pts": self.params.min_pts},
            "real_fraction_threshold": _round(self.real_fraction_threshold, float_digits),
            "fit_on_union": self.fit_on_union,
            "queries": [
                {"sample_id": v.sample_id,
                 "cluster": None if v.cluster_id == NOISE else v.cluster_id,
                 "verdict": v.verdict}
                for v in self.verdicts
            ],
            "metrics": metrics,
        }
        return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def to_table(self) -> str:
        width = max([len("sample_id")] + [len(v.sample_id) for v in self.verdicts])
        lines = [f"{'sample_id':<{width}}  cluster  verdict"]
        for v in self.verdicts:
            cluster = "NOISE" if v.cluster_id == NOISE else str(v.cluster_id)
            lines.append(f"{v.sample_id:<{width}}  {cluster:>7}  {v.verdict}")
        if self.confusion is not None:
            precision, p_deg = self.confusion.precision_fake()
            recall, r_deg = self.confusion.recall_fake()
            lines.append("")
            lines.append(f"fake precision: {precision:.3f}{' (degenerate)' if p_deg else ''}")
            lines.append(f"fake recall:    {recall:.3f}{' (degenerate)' if r_deg else ''}")
        return "\n".join(lines) + "\n"

    def confusion_csv(self) -> str:
        if self.confusion is None:
            raise MissingGroundTruth("report holds no confusion matrix")
        c = self.confusion
        return (
            ",predicted_real,predicted_fake\n"
            f"actual_real,{c.tn_fake},{c.fp_fake}\n"
            f"actual_fake,{c.fn_fake},{c.tp_fake}\n"
        )


def classify(profile: VoiceProfile, queries: list[tuple[str, FeatureVector]],
             params: DbscanParams,
             real_fraction_threshold: float = DEFAULT_REAL_FRACTION,
             fit_on_union: bool = True) -> DetectionReport:
    """Cluster reference and query features together and issue verdicts.

    The standardizer is fitted on reference plus queries by default; with
    fit_on_union=False the profile's stored standardizer is used (or one
    fitted on the reference alone). A query is real exactly when its cluster
    holds at least real_fraction_threshold reference members.
    """
    if not queries:
        raise EmptyQuerySet("no query samples given")
    reference = profile.reference_matrix()
    query_matrix = np.array([vec.as_array() for _, vec in queries])
    union = np.vstack([reference, query_matrix])

    if fit_on_union:
        standardizer = FeatureStandardizer().fit(union)
    elif profile.standardizer is not None:
        standardizer = profile.standardizer
    else:
        standardizer = FeatureStandardizer().fit(reference)
    standardized = standardizer.transform(union)

    labels = dbscan(standardized, params.eps, params.min_pts)
    n_ref = len(reference)
    real_clusters = set()
    for cluster in sorted(set(labels[labels != NOISE].tolist())):
        members = labels == cluster
        ref_fraction = members[:n_ref].sum() / members.sum()
        if ref_fraction >= real_fraction_threshold:
            real_clusters.add(cluster)

    verdicts = tuple(
        QueryVerdict(
            sample_id=sid,
            cluster_id=int(label),
            verdict="real" if label in real_clusters else "fake",
        )
        for (sid, _), label in zip(queries, labels[n_ref:])
    )
    return DetectionReport(verdicts, params, real_fraction_threshold, fit_on_union)


def evaluate(report: DetectionReport, ground_truth: dict[str, str]) -> DetectionReport:
    """Attach a confusion matrix and fake-class metrics to a report."""
    missing = [v.sample_id for v in report.verdicts if v.sample_id not in ground_truth]
    if missing:
        raise MissingGroundTruth(f"no ground truth for: {', '.join(missing)}")
    tp = fp = fn = tn = 0
    for v in report.verdicts:
        actual, predicted = ground_truth[v.sample_id], v.verdict
        if predicted == "fake":
            tp, fp = (tp + 1, fp) if actual == "fake" else (tp, fp + 1)
        else:
            fn, tn = (fn + 1, tn) if actual == "fake" else (fn, tn + 1)
    return replace(report, confusion=ConfusionMatrix(tp, fp, fn, tn))


class VoiceProfileDetector(BaseEstimator):
    """fit/predict interface over :func:`classify` for pipeline composition.

    fit(X) takes the known-real reference feature matrix; predict(X) returns
    an array of "real"/"fake" verdicts for query feature rows.
    """

    def __init__(self, eps: float = 1.0, min_pts: int = DEFAULT_MIN_PTS,
                 real_fraction_threshold: float = DEFAULT_REAL_FRACTION,
                 fit_on_union: bool = True):
        self.eps = eps
        self.min_pts = min_pts
        self.real_fraction_threshold = real_fraction_threshold
        self.fit_on_union = fit_on_union

    def fit(self, X, y=None):
        X = as_float_matrix(X, N_FEATURES)
        self.profile_ = VoiceProfile(
            subject_id="reference",
            reference=tuple((f"ref_{i:04d}", FeatureVector.from_array(row))
                            for i, row in enumerate(X)),
        )
        return self

    def predict(self, X) -> np.ndarray:
        X = as_float_matrix(X, N_FEATURES)
        queries = [(f"query_{i:04d}", FeatureVector.from_array(row)) for i, row in enumerate(X)]
        report = classify(
            self.profile_, queries, DbscanParams(self.eps, self.min_pts),
            self.real_fraction_threshold, self.fit_on_union,
        )
        return np.array([v.verdict for v in report.verdicts])


def _round(value: float, digits: int) -> float:
    return float(f"{value:.{digits}g}")
