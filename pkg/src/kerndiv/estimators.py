"""Scikit-learn compatible estimators wrapping the package primitives.

Three pieces compose into the full pipeline:

    GlcmTextureFeatures   images        -> (n, 25) normalized feature rows
    PairwiseDivergence    sample sets   -> pairwise divergence matrix
    DivergenceAgglomerative  precomputed matrix -> cluster labels

All follow the fit/transform/predict conventions, so they interoperate
with model selection and pipeline tooling that understands get_params.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin

from .clustering import agglomerate, cut
from .divergences import (
    METRICS,
    DivergenceOptions,
    cross_distance_matrix,
    distance_matrix,
)
from .exceptions import InputError
from .kernels import KernelSpec, SampleSet
from .texture import GrayImage, glcm, haralick_features, threshold_mask
from .validation import as_samples, check_square_distances


class GlcmTextureFeatures(BaseEstimator, TransformerMixin):
    """Extract 25 co-occurrence texture features per grayscale image.

    ``fit`` learns per-feature minima and maxima over the training corpus;
    ``transform`` maps each image through threshold mask, co-occurrence
    matrix, and feature computation, then min-max scales with the fitted
    ranges (features with no spread map to 0).
    """

    def __init__(self, levels: int = 64, percentile: float = 5.0, normalize: bool = True):
        self.levels = levels
        self.percentile = percentile
        self.normalize = normalize

    def _raw_features(self, images) -> np.ndarray:
        rows = []
        for image in images:
            if not isinstance(image, GrayImage):
                image = GrayImage(pixels=np.asarray(image, dtype=float))
            mask = threshold_mask(image, self.percentile)
            rows.append(haralick_features(glcm(image, mask, levels=self.levels)))
        if not rows:
            raise InputError("need at least one image")
        return np.stack(rows)

    def fit(self, X, y=None):
        raw = self._raw_features(X)
        self.data_min_ = raw.min(axis=0)
        self.data_max_ = raw.max(axis=0)
        self.n_features_in_ = raw.shape[1]
        return self

    def _scale(self, raw: np.ndarray) -> np.ndarray:
        if not self.normalize:
            return raw
        span = self.data_max_ - self.data_min_
        out = np.zeros_like(raw)
        live = span > 0
        out[:, live] = (raw[:, live] - self.data_min_[live]) / span[live]
        return out

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "data_min_"):
            raise InputError("GlcmTextureFeatures must be fitted before transform")
        return self._scale(self._raw_features(X))

    def fit_transform(self, X, y=None, **fit_params) -> np.ndarray:
        raw = self._raw_features(X)
        self.data_min_ = raw.min(axis=0)
        self.data_max_ = raw.max(axis=0)
        self.n_features_in_ = raw.shape[1]
        return self._scale(raw)


class PairwiseDivergence(BaseEstimator, TransformerMixin):
    """Divergence matrix between sample sets.

    ``fit`` stores reference sets; ``transform(Y)`` returns the rectangular
    matrix of divergences from each set in Y to each fitted set, and
    ``fit_transform(X)`` the square symmetric matrix over X itself, ready
    for consumers expecting a precomputed dissimilarity matrix.

    Each element of X is one empirical distribution: an (n_samples, d)
    array or a SampleSet.
    """

    def __init__(
        self,
        metric: str = "kernel_w2",
        kernel: str = "rbf",
        gamma: float = 1.0,
        degree: int = 2,
        offset: float = 1.0,
        rho: float = 0.1,
        squared: bool = True,
        n_workers: int | None = None,
    ):
        self.metric = metric
        self.kernel = kernel
        self.gamma = gamma
        self.degree = degree
        self.offset = offset
        self.rho = rho
        self.squared = squared
        self.n_workers = n_workers

    def _options(self) -> DivergenceOptions:
        if self.metric not in METRICS:
            raise InputError(f"unknown metric {self.metric!r}; choose from {METRICS}")
        spec = KernelSpec(
            family=self.kernel,
            gamma=self.gamma,
            degree=self.degree,
            offset=self.offset,
        )
        return DivergenceOptions(kernel=spec, rho=self.rho, report_squared=self.squared)

    @staticmethod
    def _as_sets(X) -> list:
        return [x if isinstance(x, SampleSet) else SampleSet(as_samples(x)) for x in X]

    def fit(self, X, y=None):
        self._options()  # validate parameters early
        self.reference_sets_ = self._as_sets(X)
        if not self.reference_sets_:
            raise InputError("need at least one reference sample set")
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "reference_sets_"):
            raise InputError("PairwiseDivergence must be fitted before transform")
        return cross_distance_matrix(
            self._as_sets(X), self.reference_sets_, self.metric, self._options()
        )

    def fit_transform(self, X, y=None, **fit_params) -> np.ndarray:
        self.fit(X)
        result = distance_matrix(
            self.reference_sets_, self.metric, self._options(), self.n_workers
        )
        self.labels_in_ = list(result.labels)
        return result.values


class DivergenceAgglomerative(BaseEstimator, ClusterMixin):
    """Agglomerative clustering of a precomputed divergence matrix.

    ``fit`` expects the square symmetric matrix (for example the output of
    :class:`PairwiseDivergence.fit_transform`) and exposes ``labels_`` and
    the merge history ``dendrogram_``.
    """

    def __init__(self, n_clusters: int = 2, linkage: str = "average"):
        self.n_clusters = n_clusters
        self.linkage = linkage

    def fit(self, X, y=None):
        values = check_square_distances(np.asarray(X, dtype=float))
        if not 1 <= self.n_clusters <= values.shape[0]:
            raise InputError(
                f"n_clusters must be between 1 and {values.shape[0]}, "
                f"got {self.n_clusters}"
            )
        self.dendrogram_ = agglomerate(values, linkage=self.linkage)
        self.labels_ = cut(self.dendrogram_, self.n_clusters)
        return self
