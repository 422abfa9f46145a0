import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from voicetrace.detect import (
    DBSCAN,
    NOISE,
    DbscanParams,
    VoiceProfile,
    VoiceProfileDetector,
    classify,
    dbscan,
    evaluate,
    k_distance_curve,
)
from voicetrace.errors import EmptyQuerySet, KTooLarge, MissingGroundTruth
from voicetrace.features import FeatureVector

from oracles import naive_dbscan, naive_kth_distances


def vec8(rng=None, values=None):
    if values is not None:
        return FeatureVector.from_array(np.asarray(values, dtype=float))
    return FeatureVector.from_array(rng.normal(size=8))


def random_instance(rng, n_points, dims):
    points = rng.normal(size=(n_points, dims)) * rng.uniform(0.5, 2.0)
    dists = np.sqrt(((points[:, None] - points[None, :]) ** 2).sum(-1))
    eps = float(np.quantile(dists[dists > 0], rng.uniform(0.05, 0.3)))
    min_pts = int(rng.integers(2, 8))
    return points, eps, min_pts


class TestDbscan:
    def test_identical_points_single_cluster(self):
        points = np.zeros((5, 8))
        assert np.array_equal(dbscan(points, 0.1, 3), np.zeros(5, dtype=int))

    def test_isolated_point_is_noise(self):
        points = np.array([[0.0, 0.0], [100.0, 100.0], [100.1, 100.0], [100.0, 100.1]])
        labels = dbscan(points, 0.5, 2)
        assert labels[0] == NOISE
        assert set(labels[1:]) == {0}

    def test_empty_input(self):
        assert dbscan(np.empty((0, 4)), 1.0, 2).size == 0

    def test_matches_naive_oracle(self, rng):
        for trial in range(30):
            dims = 2 if trial % 2 == 0 else 8
            points, eps, min_pts = random_instance(rng, int(rng.integers(20, 120)), dims)
            assert np.array_equal(dbscan(points, eps, min_pts),
                                  np.array(naive_dbscan(points, eps, min_pts)))

    def test_every_cluster_has_a_core_point(self, rng):
        points, eps, min_pts = random_instance(rng, 80, 2)
        labels = dbscan(points, eps, min_pts)
        dists = np.sqrt(((points[:, None] - points[None, :]) ** 2).sum(-1))
        core = (dists <= eps).sum(axis=1) >= min_pts
        for cluster in set(labels[labels != NOISE].tolist()):
            assert core[labels == cluster].any()

    def test_translation_invariance(self, rng):
        # integer grid + eps^2 = 2.25 keeps every <=eps decision exact
        points = rng.integers(0, 15, size=(60, 2)).astype(float)
        base = dbscan(points, 1.5, 3)
        shifted = dbscan(points + np.array([1e3, -2e3]), 1.5, 3)
        assert np.array_equal(base, shifted)

    def test_rotation_invariance(self, rng):
        points = rng.integers(0, 15, size=(60, 2)).astype(float)
        theta = 0.7
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        base = dbscan(points, 1.5, 3)
        rotated = dbscan(points @ rot.T, 1.5, 3)
        assert np.array_equal(base, rotated)

    def test_border_point_joins_first_cluster(self):
        # two dense pairs share one border point equidistant from both;
        # cluster 0 is discovered first and must claim it
        points = np.array([[0.0], [0.1], [1.0], [2.0], [1.9]])
        labels = dbscan(points, 1.0, 3)
        assert labels[2] == 0

    def test_estimator_wrapper(self, rng):
        points, eps, min_pts = random_instance(rng, 50, 2)
        est = DBSCAN(eps=eps, min_pts=min_pts)
        labels = est.fit_predict(points)
        assert np.array_equal(labels, dbscan(points, eps, min_pts))
        assert est.get_params() == {"eps": eps, "min_pts": min_pts}

    @given(st.integers(0, 2**31), st.integers(5, 40))
    @settings(max_examples=25, deadline=None)
    def test_partition_property(self, seed, n):
        rng = np.random.default_rng(seed)
        points, eps, min_pts = random_instance(rng, n, 2)
        labels = dbscan(points, eps, min_pts)
        assert labels.shape == (n,)
        non_noise = labels[labels != NOISE]
        if non_noise.size:
            assert set(non_noise.tolist()) == set(range(non_noise.max() + 1))

    @given(st.lists(st.tuples(st.integers(0, 12), st.integers(0, 12)),
                    min_size=1, max_size=40),
           st.integers(1, 5))
    @settings(max_examples=40, deadline=None)
    def test_oracle_agreement_property(self, coords, min_pts):
        # integer grid with eps^2 = 2.25 makes neighborhood decisions exact,
        # so implementation and oracle cannot diverge on boundary ties
        points = np.array(coords, dtype=float)
        got = dbscan(points, 1.5, min_pts)
        assert np.array_equal(got, np.array(naive_dbscan(points, 1.5, min_pts)))


class TestDbscanParams:
    def test_eps_positive(self):
        with pytest.raises(ValueError):
            DbscanParams(0.0)

    def test_min_pts(self):
        with pytest.raises(ValueError):
            DbscanParams(1.0, 0)


class TestKDistance:
    def test_collinear_points(self):
        curve = k_distance_curve(np.array([[0.0], [1.0], [2.0]]), 1)
        assert np.array_equal(curve, [1.0, 1.0, 1.0])

    def test_identical_points(self):
        assert np.all(k_distance_curve(np.zeros((4, 3)), 2) == 0.0)

    def test_matches_naive(self, rng):
        points = rng.normal(size=(40, 5))
        for k in (1, 3, 7):
            assert k_distance_curve(points, k) == pytest.approx(
                naive_kth_distances(points, k), abs=1e-12)

    def test_k_too_large(self):
        with pytest.raises(KTooLarge):
            k_distance_curve(np.zeros((3, 2)), 3)


def identity_standardizer():
    from voicetrace.features import FeatureStandardizer

    return FeatureStandardizer.from_state({"mean": [0.0] * 8, "std": [1.0] * 8})


def profile_from(rng, n=12, subject="prof", tight=False):
    """Random reference profile; `tight` adds an identity standardizer and a
    compact blob so raw-space geometry carries over into clustering."""
    scale = 0.1 if tight else 1.0
    return VoiceProfile(
        subject_id=subject,
        reference=tuple((f"ref_{i:03d}", vec8(values=scale * rng.normal(size=8)))
                        for i in range(n)),
        standardizer=identity_standardizer() if tight else None,
    )


def far_query(i: int, distance: float = 3000.0):
    """Isolated point far along basis axis i; stays noise for min_pts >= 2."""
    values = np.zeros(8)
    values[i % 8] = distance * (1 + i // 8)
    return (f"far_{i}", vec8(values=values))


class TestClassify:
    def test_queries_equal_to_reference_are_real(self, rng):
        profile = profile_from(rng)
        queries = [(f"q{i}", v) for i, (_, v) in enumerate(profile.reference)]
        # generous eps co-clusters the union; ref fraction is exactly 0.5
        report = classify(profile, queries, DbscanParams(eps=10.0, min_pts=3))
        assert all(v.verdict == "real" for v in report.verdicts)

    def test_far_queries_are_noise_fake(self, rng):
        profile = profile_from(rng, tight=True)
        far = [far_query(i) for i in range(3)]
        report = classify(profile, far, DbscanParams(eps=3.0, min_pts=3),
                          fit_on_union=False)
        assert all(v.verdict == "fake" and v.cluster_id == NOISE for v in report.verdicts)

    def test_empty_queries(self, rng):
        with pytest.raises(EmptyQuerySet):
            classify(profile_from(rng), [], DbscanParams(1.0))

    def test_fake_cluster_detected_by_majority_rule(self, rng):
        # a tight blob of queries away from the reference clusters as fake
        profile = profile_from(rng, n=10, tight=True)
        blob = [(f"q{i}", vec8(values=50.0 + 0.01 * rng.normal(size=8))) for i in range(8)]
        report = classify(profile, blob, DbscanParams(eps=2.0, min_pts=3),
                          fit_on_union=False)
        assert all(v.verdict == "fake" for v in report.verdicts)
        assert any(v.cluster_id != NOISE for v in report.verdicts)

    def test_deterministic(self, rng):
        profile = profile_from(rng)
        queries = [(f"q{i}", vec8(rng)) for i in range(6)]
        a = classify(profile, queries, DbscanParams(2.0, 3))
        b = classify(profile, queries, DbscanParams(2.0, 3))
        assert a == b

    def test_fit_on_reference_uses_profile_standardizer(self, rng):
        from voicetrace.features import FeatureStandardizer

        reference = tuple((f"r{i}", vec8(rng)) for i in range(8))
        matrix = np.array([v.as_array() for _, v in reference])
        profile = VoiceProfile("p", reference,
                               standardizer=FeatureStandardizer().fit(matrix))
        queries = [("q0", reference[0][1]), ("q1", reference[1][1])]
        report = classify(profile, queries, DbscanParams(3.0, 2), fit_on_union=False)
        assert not report.fit_on_union
        assert all(v.verdict == "real" for v in report.verdicts)


class TestEvaluate:
    def make_report(self, rng, verdicts_by_id):
        profile = profile_from(rng, tight=True)
        queries = []
        for i, (sid, want) in enumerate(verdicts_by_id.items()):
            if want == "real":
                queries.append((sid, profile.reference[0][1]))
            else:
                queries.append((sid, far_query(i)[1]))
        return classify(profile, queries, DbscanParams(eps=3.0, min_pts=3),
                        fit_on_union=False)

    def test_perfect_predictions(self, rng):
        report = self.make_report(rng, {"a": "real", "b": "fake"})
        scored = evaluate(report, {"a": "real", "b": "fake"})
        assert scored.precision_fake == 1.0
        assert scored.recall_fake == 1.0
        assert scored.confusion.total == 2

    def test_half_precision(self, rng):
        report = self.make_report(rng, {"a": "fake", "b": "fake"})
        scored = evaluate(report, {"a": "fake", "b": "real"})
        assert scored.precision_fake == 0.5

    def test_zero_fake_predictions_flagged(self, rng):
        report = self.make_report(rng, {"a": "real", "b": "real"})
        scored = evaluate(report, {"a": "real", "b": "real"})
        precision, degenerate = scored.confusion.precision_fake()
        assert precision == 0.0 and degenerate

    def test_missing_ground_truth(self, rng):
        report = self.make_report(rng, {"a": "real"})
        with pytest.raises(MissingGroundTruth):
            evaluate(report, {"other": "real"})

    def test_metrics_recompute_from_confusion(self, rng):
        report = self.make_report(rng, {"a": "fake", "b": "real", "c": "fake"})
        scored = evaluate(report, {"a": "fake", "b": "fake", "c": "real"})
        c = scored.confusion
        assert c.total == 3
        precision, _ = c.precision_fake()
        assert precision == pytest.approx(c.tp_fake / (c.tp_fake + c.fp_fake))


class TestProfileJson:
    def test_round_trip(self, rng):
        profile = VoiceProfile(
            subject_id="chancellor",
            reference=tuple((f"r{i}", vec8(rng)) for i in range(3)),
            params=DbscanParams(1.5, 4),
            created_at="2021-07-14T00:00:00Z",
        )
        restored = VoiceProfile.from_json(profile.to_json())
        assert restored.subject_id == profile.subject_id
        assert restored.params == profile.params
        assert restored.created_at == profile.created_at
        for (sid_a, va), (sid_b, vb) in zip(restored.reference, profile.reference):
            assert sid_a == sid_b
            assert va.as_array() == pytest.approx(vb.as_array(), rel=1e-8)

    def test_schema_versioned(self, rng):
        doc = json.loads(profile_from(rng).to_json())
        assert doc["schema_version"] == 1
        with pytest.raises(ValueError):
            VoiceProfile.from_json(json.dumps({**doc, "schema_version": 99}))

    def test_unique_ids_enforced(self, rng):
        v = vec8(rng)
        with pytest.raises(ValueError):
            VoiceProfile("x", (("a", v), ("a", v)))


class TestReportArtifacts:
    def test_json_and_confusion_csv(self, rng):
        profile = profile_from(rng, tight=True)
        queries = [("good", profile.reference[0][1]), ("bad", far_query(0)[1])]
        report = evaluate(
            classify(profile, queries, DbscanParams(3.0, 3), fit_on_union=False),
            {"good": "real", "bad": "fake"},
        )
        doc = json.loads(report.to_json())
        assert doc["metrics"]["precision_fake"] == 1.0
        assert {q["sample_id"] for q in doc["queries"]} == {"good", "bad"}
        csv_text = report.confusion_csv()
        assert csv_text.splitlines()[0] == ",predicted_real,predicted_fake"
        assert csv_text.splitlines()[2] == "actual_fake,0,1"

    def test_table_lists_all_queries(self, rng):
        profile = profile_from(rng)
        queries = [("q0", profile.reference[0][1])]
        table = classify(profile, queries, DbscanParams(2.0, 3)).to_table()
        assert "q0" in table and "verdict" in table


class TestDetectorEstimator:
    def test_fit_predict_shapes(self, rng):
        reference = rng.normal(size=(20, 8))
        queries = np.vstack([reference[:5], np.full((4, 8), 300.0)])
        detector = VoiceProfileDetector(eps=3.0, min_pts=3)
        verdicts = detector.fit(reference).predict(queries)
        assert list(verdicts[:5]) == ["real"] * 5
        assert list(verdicts[5:]) == ["fake"] * 4

    def test_get_params_round_trip(self):
        detector = VoiceProfileDetector(eps=2.5)
        params = detector.get_params()
        assert params["eps"] == 2.5
        clone = VoiceProfileDetector(**params)
        assert clone.get_params() == params
