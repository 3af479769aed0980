import numpy as np
import pytest
from sklearn.base import clone

from kerndiv import (
    DivergenceAgglomerative,
    DivergenceOptions,
    GlcmTextureFeatures,
    InputError,
    KernelSpec,
    PairwiseDivergence,
    distance_matrix,
    kernel_w2_sq,
    synth_populations,
)


def toy_images(rng, count=4):
    return [rng.integers(0, 200, size=(10, 10)).astype(float) for _ in range(count)]


class TestSklearnProtocol:
    @pytest.mark.parametrize(
        "estimator",
        [
            GlcmTextureFeatures(levels=16, percentile=2.0),
            PairwiseDivergence(metric="mmd", gamma=2.0),
            DivergenceAgglomerative(n_clusters=3, linkage="complete"),
        ],
    )
    def test_get_params_set_params_clone(self, estimator):
        params = estimator.get_params()
        rebuilt = type(estimator)(**params)
        assert rebuilt.get_params() == params
        cloned = clone(estimator)
        assert cloned.get_params() == params
        estimator.set_params(**params)
        assert estimator.get_params() == params

    def test_fit_returns_self(self):
        rng = np.random.default_rng(0)
        images = toy_images(rng)
        est = GlcmTextureFeatures(levels=8)
        assert est.fit(images) is est


class TestGlcmTextureFeatures:
    def test_fit_transform_in_unit_interval(self):
        rng = np.random.default_rng(1)
        out = GlcmTextureFeatures(levels=8).fit_transform(toy_images(rng, 5))
        assert out.shape == (5, 25)
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_fit_transform_matches_fit_then_transform(self):
        rng = np.random.default_rng(2)
        images = toy_images(rng, 4)
        a = GlcmTextureFeatures(levels=8).fit_transform(images)
        b = GlcmTextureFeatures(levels=8).fit(images).transform(images)
        np.testing.assert_array_equal(a, b)

    def test_unnormalized_features(self):
        rng = np.random.default_rng(3)
        images = toy_images(rng, 3)
        out = GlcmTextureFeatures(levels=8, normalize=False).fit_transform(images)
        assert out.max() > 1.0  # raw feature scales exceed the unit interval

    def test_transform_before_fit_rejected(self):
        rng = np.random.default_rng(4)
        with pytest.raises(InputError):
            GlcmTextureFeatures().transform(toy_images(rng, 1))


class TestPairwiseDivergence:
    def test_fit_transform_matches_distance_matrix(self):
        rng = np.random.default_rng(5)
        sets = [rng.uniform(size=(5, 1)) for _ in range(4)]
        est = PairwiseDivergence(metric="kernel_w2", gamma=1.0)
        values = est.fit_transform(sets)
        expected = distance_matrix(sets, "kernel_w2").values
        np.testing.assert_array_equal(values, expected)

    def test_cross_transform_matches_pair_function(self):
        rng = np.random.default_rng(6)
        refs = [rng.uniform(size=(5, 1)) for _ in range(3)]
        query = [rng.uniform(size=(4, 1)) for _ in range(2)]
        est = PairwiseDivergence(metric="kernel_w2").fit(refs)
        cross = est.transform(query)
        assert cross.shape == (2, 3)
        opts = DivergenceOptions(kernel=KernelSpec())
        for i, q in enumerate(query):
            for j, r in enumerate(refs):
                assert cross[i, j] == pytest.approx(
                    kernel_w2_sq(q, r, opts), rel=1e-12, abs=1e-15
                )

    def test_invalid_metric_rejected_at_fit(self):
        with pytest.raises(InputError):
            PairwiseDivergence(metric="bogus").fit([np.zeros((2, 1))])

    def test_transform_before_fit_rejected(self):
        with pytest.raises(InputError):
            PairwiseDivergence().transform([np.zeros((2, 1))])


class TestDivergenceAgglomerative:
    def test_fit_predict_equals_labels(self):
        d = np.array(
            [
                [0.0, 1.0, 5.0],
                [1.0, 0.0, 5.0],
                [5.0, 5.0, 0.0],
            ]
        )
        est = DivergenceAgglomerative(n_clusters=2)
        labels = est.fit_predict(d)
        np.testing.assert_array_equal(labels, est.labels_)
        np.testing.assert_array_equal(labels, [0, 0, 1])
        assert est.dendrogram_.n_leaves == 3

    def test_invalid_cluster_count(self):
        with pytest.raises(InputError):
            DivergenceAgglomerative(n_clusters=5).fit(np.zeros((3, 3)))

    def test_asymmetric_matrix_rejected(self):
        with pytest.raises(InputError):
            DivergenceAgglomerative().fit([[0.0, 1.0], [2.0, 0.0]])


class TestPipelineComposition:
    def test_divergence_then_clustering_recovers_classes(self):
        sets, truth = synth_populations(per_class=12, samples_per_set=25, seed=3)
        matrix = PairwiseDivergence(metric="kernel_w2").fit_transform(sets)
        labels = DivergenceAgglomerative(n_clusters=2).fit_predict(matrix)
        truth = np.asarray(truth)
        # one cluster per class, up to label swap
        first = labels[truth == "clean"]
        second = labels[truth == "noisy"]
        assert len(set(first)) == 1 and len(set(second)) == 1
        assert first[0] != second[0]
