"""Kernel-space Wasserstein and Kullback-Leibler divergences between
empirical distributions, with the supporting texture-feature, clustering,
and evaluation pipeline."""

from .clustering import (
    LINKAGES,
    ContingencyTable,
    Dendrogram,
    PredictionRates,
    agglomerate,
    chi_square,
    contingency,
    cut,
    prediction_rates,
)
from .datasets import synth_populations
from .divergences import (
    METRICS,
    DistanceMatrix,
    DivergenceOptions,
    cross_distance_matrix,
    distance_matrix,
    kernel_kl,
    kernel_kl_sym,
    kernel_w2_sq,
    kl_sym_gaussian,
    mmd_sq,
)
from .estimators import (
    DivergenceAgglomerative,
    GlcmTextureFeatures,
    PairwiseDivergence,
)
from .exceptions import InputError, NumericError
from .gaussian import GaussianMoments, kl_gaussian, moments, w2_gaussian_sq
from .kernels import (
    KERNEL_FAMILIES,
    CenteringFactors,
    ExplicitFeatureMap,
    GramBundle,
    KernelSpec,
    SampleSet,
    WoodburyFactors,
    centering,
    explicit_feature_map,
    gram,
    kernel_eval,
    trace_centered,
    trace_sqrt_cross,
    woodbury,
)
from .texture import (
    DEFAULT_OFFSETS,
    FEATURE_NAMES,
    Glcm,
    GrayImage,
    glcm,
    haralick_features,
    load_gray_image,
    normalize_corpus,
    threshold_mask,
)

__version__ = "0.1.0"

__all__ = [
    "CenteringFactors",
    "ContingencyTable",
    "Dendrogram",
    "DistanceMatrix",
    "DivergenceAgglomerative",
    "DivergenceOptions",
    "ExplicitFeatureMap",
    "FEATURE_NAMES",
    "GaussianMoments",
    "Glcm",
    "GlcmTextureFeatures",
    "GramBundle",
    "GrayImage",
    "InputError",
    "KERNEL_FAMILIES",
    "KernelSpec",
    "LINKAGES",
    "METRICS",
    "NumericError",
    "PairwiseDivergence",
    "PredictionRates",
    "SampleSet",
    "WoodburyFactors",
    "agglomerate",
    "centering",
    "chi_square",
    "contingency",
    "cross_distance_matrix",
    "cut",
    "DEFAULT_OFFSETS",
    "distance_matrix",
    "explicit_feature_map",
    "glcm",
    "gram",
    "haralick_features",
    "kernel_eval",
    "kernel_kl",
    "kernel_kl_sym",
    "kernel_w2_sq",
    "kl_gaussian",
    "kl_sym_gaussian",
    "load_gray_image",
    "mmd_sq",
    "moments",
    "normalize_corpus",
    "prediction_rates",
    "synth_populations",
    "threshold_mask",
    "trace_centered",
    "trace_sqrt_cross",
    "w2_gaussian_sq",
    "woodbury",
]
