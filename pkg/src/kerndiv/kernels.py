"""Kernel evaluation, Gram matrices, and the centering algebra behind them.

Every kernel-space divergence in this package reduces to expressions in the
three Gram blocks K11, K22, K12 of a pair of sample sets, combined with
per-set centering factors.  This module owns those building blocks:

* the kernel functions (RBF, polynomial, linear) and Gram-matrix assembly,
* the centering vector s and matrix J that express the feature-space mean
  as ``Phi s`` and the feature-space covariance as ``Phi J Jt Phit``,
* the trace primitives ``tr(J Jt K)`` and the nuclear-norm evaluation of
  ``tr((K12 J2 J2t K21 J1 J1t)^(1/2))``,
* the regularized-inverse factors ``M = rho I + Jt K J`` and
  ``B = J Minv Jt`` that let ``(covariance + rho I)^(-1)`` be applied
  without ever materializing the feature space.

All operations are pure functions on immutable values and are safe to call
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .exceptions import InputError, NumericError
from .validation import as_float_matrix, as_float_vector, as_samples, check_same_dim

KERNEL_FAMILIES = ("rbf", "polynomial", "linear")

# Relative threshold below which singular values / eigenvalues of
# theoretically-PSD spectra are treated as roundoff and clamped to zero.
SPECTRUM_CLIP = 1e-12


@dataclass(frozen=True, eq=False)
class SampleSet:
    """An empirical distribution given by n samples (rows) in d dimensions."""

    data: np.ndarray
    id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "data", as_float_matrix(self.data, "sample set"))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class KernelSpec:
    """Parameters of a symmetric positive-definite kernel.

    family
        ``"rbf"``: k(x, y) = exp(-gamma * ||x - y||^2)
        ``"polynomial"``: k(x, y) = (x . y + offset) ** degree
        ``"linear"``: k(x, y) = x . y
    gamma
        RBF width parameter, must be positive.  Ignored by the other families.
    degree, offset
        Polynomial parameters; degree >= 1 and offset >= 0.
    """

    family: str = "rbf"
    gamma: float = 1.0
    degree: int = 2
    offset: float = 1.0

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise InputError(
                f"unknown kernel family {self.family!r}; choose from {KERNEL_FAMILIES}"
            )
        if not self.gamma > 0:
            raise InputError("gamma must be positive")
        if int(self.degree) != self.degree or self.degree < 1:
            raise InputError("degree must be a positive integer")
        if self.offset < 0:
            raise InputError("offset must be nonnegative")


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Evaluate k(x, y) for two individual points."""
    xv = as_float_vector(x, "x")
    yv = as_float_vector(y, "y")
    if xv.size != yv.size:
        raise InputError(f"point dimensions differ: {xv.size} vs {yv.size}")
    if spec.family == "rbf":
        diff = xv - yv
        return float(np.exp(-spec.gamma * (diff @ diff)))
    if spec.family == "polynomial":
        return float((xv @ yv + spec.offset) ** spec.degree)
    return float(xv @ yv)


def gram(spec: KernelSpec, a, b) -> np.ndarray:
    """Gram matrix with entry (i, j) = k(a_i, b_j).

    When ``a`` and ``b`` are the same object the result is explicitly
    symmetrized and, for the RBF family, given an exact unit diagonal.
    """
    av = as_samples(a, "first sample set")
    bv = av if b is a else as_samples(b, "second sample set")
    check_same_dim(av, bv)
    # value-equal inputs take the self-gram path so that identical sample
    # sets yield exactly zero divergences downstream
    same = bv is av or (av.shape == bv.shape and np.array_equal(av, bv))

    if spec.family == "rbf":
        sq = (
            np.sum(av * av, axis=1)[:, None]
            + np.sum(bv * bv, axis=1)[None, :]
            - 2.0 * (av @ bv.T)
        )
        np.maximum(sq, 0.0, out=sq)
        if same:
            np.fill_diagonal(sq, 0.0)
        k = np.exp(-spec.gamma * sq)
    elif spec.family == "polynomial":
        k = (av @ bv.T + spec.offset) ** spec.degree
    else:
        k = av @ bv.T

    if same:
        k = (k + k.T) / 2.0
    return k


@dataclass(frozen=True, eq=False)
class CenteringFactors:
    """Centering algebra for a set of n samples.

    ``s`` is the uniform weight vector (every entry 1/n) so that the
    feature-space mean is ``Phi s``.  ``J = (I - 1 1t / n) / sqrt(n)`` makes
    ``Phi J`` the matrix of mean-centered mapped samples scaled by
    1/sqrt(n), hence the feature-space covariance is ``Phi J Jt Phit``.
    ``S = J Jt = (I - 1 1t / n) / n``.
    """

    n: int
    s: np.ndarray
    J: np.ndarray
    S: np.ndarray


def centering(n: int) -> CenteringFactors:
    """Build the centering factors for n samples; n must be >= 1."""
    if n < 1:
        raise InputError("centering requires at least one sample")
    s = np.full(n, 1.0 / n)
    proj = np.eye(n) - np.full((n, n), 1.0 / n)
    return CenteringFactors(n=n, s=s, J=proj / np.sqrt(n), S=proj / n)


@dataclass(frozen=True, eq=False)
class GramBundle:
    """The Gram blocks of a pair of sample sets plus their centering factors.

    ``k21`` is never stored; use ``k12.T``.
    """

    k11: np.ndarray
    k22: np.ndarray
    k12: np.ndarray
    cf1: CenteringFactors
    cf2: CenteringFactors

    @classmethod
    def from_sets(cls, spec: KernelSpec, x, y) -> "GramBundle":
        xv = as_samples(x, "first sample set")
        yv = as_samples(y, "second sample set")
        check_same_dim(xv, yv)
        return cls(
            k11=gram(spec, xv, xv),
            k22=gram(spec, yv, yv),
            k12=gram(spec, xv, yv),
            cf1=centering(xv.shape[0]),
            cf2=centering(yv.shape[0]),
        )


def trace_centered(k: np.ndarray, cf: CenteringFactors) -> float:
    """tr(J Jt K) for a symmetric Gram matrix K of the matching size.

    Equals the trace of the feature-space covariance of the underlying set.
    Uses the closed form (tr K - sum(K)/n) / n rather than materializing the
    product.
    """
    k = np.asarray(k, dtype=float)
    if k.shape != (cf.n, cf.n):
        raise InputError(
            f"gram matrix shape {k.shape} does not match centering size {cf.n}"
        )
    n = cf.n
    return float((np.trace(k) - k.sum() / n) / n)


def cross_nuclear_norm(
    k12: np.ndarray, cf1: CenteringFactors, cf2: CenteringFactors
) -> float:
    """Nuclear norm of J1t K12 J2, see :func:`trace_sqrt_cross`."""
    if not np.all(np.isfinite(k12)):
        raise NumericError("cross Gram matrix contains non-finite entries")
    g = cf1.J.T @ k12 @ cf2.J
    sv = np.linalg.svd(g, compute_uv=False)
    if sv.size and sv[0] > 0.0:
        sv = np.where(sv < SPECTRUM_CLIP * sv[0], 0.0, sv)
    return float(sv.sum())


def trace_sqrt_cross(bundle: GramBundle) -> float:
    """tr((K12 J2 J2t K21 J1 J1t)^(1/2)) via the nuclear norm of J1t K12 J2.

    With G = J1t K12 J2, the matrix G Gt shares its nonzero eigenvalues with
    the product above (cyclic trace property), so the sum of singular values
    of G equals the trace of the matrix square root.  The spectrum is
    nonnegative by construction; singular values below ``SPECTRUM_CLIP``
    relative to the largest are clamped to zero.
    """
    return cross_nuclear_norm(bundle.k12, bundle.cf1, bundle.cf2)


@dataclass(frozen=True, eq=False)
class WoodburyFactors:
    """Low-rank factors of (covariance + rho I)^(-1) in feature space.

    ``m_matrix`` is M = rho I_n + Jt K J (symmetric positive definite) and
    ``b_matrix`` is B = J Minv Jt, so that the regularized inverse is
    ``(I_l - Phi B Phit) / rho`` without forming the feature space.
    ``m_logdet`` caches log det M from the Cholesky factor; it also yields
    ``log det(I_n - K B) = n log rho - log det M``.
    """

    rho: float
    m_matrix: np.ndarray
    b_matrix: np.ndarray
    m_logdet: float = field(repr=False, default=0.0)


def woodbury(k: np.ndarray, cf: CenteringFactors, rho: float) -> WoodburyFactors:
    """Factor M = rho I + Jt K J and B = J Minv Jt for a symmetric PSD Gram."""
    if not rho > 0:
        raise InputError("rho must be positive")
    k = np.asarray(k, dtype=float)
    if k.shape != (cf.n, cf.n):
        raise InputError(
            f"gram matrix shape {k.shape} does not match centering size {cf.n}"
        )
    jkj = cf.J.T @ k @ cf.J
    m = rho * np.eye(cf.n) + (jkj + jkj.T) / 2.0
    try:
        chol = scipy.linalg.cho_factor(m, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            "rho I + Jt K J is not positive definite; the Gram matrix is corrupted"
        ) from exc
    b = cf.J @ scipy.linalg.cho_solve(chol, cf.J.T)
    b = (b + b.T) / 2.0
    m_logdet = 2.0 * float(np.log(np.diagonal(chol[0])).sum())
    return WoodburyFactors(rho=rho, m_matrix=m, b_matrix=b, m_logdet=m_logdet)


@dataclass(frozen=True, eq=False)
class ExplicitFeatureMap:
    """A kernel's feature map realized explicitly, for finite-dimensional kernels.

    ``map`` sends a d-vector to an ``dim``-vector phi(x) such that
    ``phi(x) . phi(y) == k(x, y)``.
    """

    map: Callable[[np.ndarray], np.ndarray]
    dim: int

    def matrix(self, samples) -> np.ndarray:
        """Stack phi(x_i) as columns: the (dim, n) mapped-data matrix."""
        arr = as_samples(samples)
        return np.stack([self.map(row) for row in arr], axis=1)


def explicit_feature_map(spec: KernelSpec, dim: int) -> ExplicitFeatureMap:
    """Explicit feature map for the linear or degree-2 polynomial kernel.

    ``dim`` is the native-space dimension d.  The RBF kernel has no
    finite-dimensional map and is rejected.
    """
    if dim < 1:
        raise InputError("native dimension must be >= 1")
    if spec.family == "linear":
        return ExplicitFeatureMap(map=lambda x: np.asarray(x, dtype=float), dim=dim)
    if spec.family == "polynomial" and spec.degree == 2:
        c = spec.offset
        sqrt2 = np.sqrt(2.0)
        sqrt2c = np.sqrt(2.0 * c)

        def poly2(x, d=dim, c=c):
            x = np.asarray(x, dtype=float)
            feats = list(x * x)
            for i in range(d):
                for j in range(i + 1, d):
                    feats.append(sqrt2 * x[i] * x[j])
            feats.extend(sqrt2c * x)
            feats.append(c)
            return np.array(feats)

        out_dim = dim + dim * (dim - 1) // 2 + dim + 1
        return ExplicitFeatureMap(map=poly2, dim=out_dim)
    raise InputError(
        f"no finite-dimensional feature map for family={spec.family!r}, "
        f"degree={spec.degree}"
    )
