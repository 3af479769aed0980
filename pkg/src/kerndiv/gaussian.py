"""Closed-form divergences between Gaussian approximations in native space.

Provides moment estimation from samples (with 1/n covariance normalization,
matching the feature-space covariance convention used by the kernel
divergences) plus the classical squared L2-Wasserstein distance and
Kullback-Leibler divergence between Gaussians.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import InputError, NumericError
from .validation import as_float_vector, as_samples

# PSD tolerance: eigenvalues above -PSD_RTOL * max(eigenvalue) are treated as
# roundoff zeros; anything more negative is a hard error.
PSD_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class GaussianMoments:
    """Mean vector and covariance matrix of a Gaussian approximation."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = as_float_vector(self.mean, "mean")
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape != (mean.size, mean.size):
            raise InputError(
                f"covariance shape {cov.shape} does not match mean length {mean.size}"
            )
        if not np.all(np.isfinite(cov)):
            raise InputError("covariance contains non-finite entries")
        scale = max(np.abs(cov).max(), 1.0)
        if np.abs(cov - cov.T).max() > 1e-12 * scale:
            raise InputError("covariance is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", (cov + cov.T) / 2.0)

    @property
    def dim(self) -> int:
        return self.mean.size


def moments(x) -> GaussianMoments:
    """Empirical mean and covariance of a sample set.

    The covariance uses the biased 1/n normalization so that a single sample
    yields a zero covariance.
    """
    arr = as_samples(x)
    mean = arr.mean(axis=0)
    centered = arr - mean
    cov = centered.T @ centered / arr.shape[0]
    return GaussianMoments(mean=mean, cov=cov)


def _psd_sqrt_factor(cov: np.ndarray, name: str) -> np.ndarray:
    """Factor a PSD matrix as L Lt via eigendecomposition.

    Works for singular covariances, unlike Cholesky.  Raises NumericError
    when the spectrum is negative beyond roundoff tolerance.
    """
    w, v = np.linalg.eigh(cov)
    top = max(w[-1], 0.0)
    if w[0] < -PSD_RTOL * max(top, 1e-300):
        raise NumericError(
            f"{name} covariance is not positive semidefinite "
            f"(eigenvalue {w[0]:.3e} vs largest {top:.3e})"
        )
    return v * np.sqrt(np.clip(w, 0.0, None))


def _check_dims(a: GaussianMoments, b: GaussianMoments) -> None:
    if a.dim != b.dim:
        raise InputError(f"moment dimensions differ: {a.dim} vs {b.dim}")


def w2_gaussian_sq(a: GaussianMoments, b: GaussianMoments) -> float:
    """Squared L2-Wasserstein distance between two Gaussians.

    ||m1 - m2||^2 + tr(C1) + tr(C2) - 2 tr((C2 C1)^(1/2)), with the trace
    root evaluated through a symmetric factorization: C2 = L Lt makes
    Lt C1 L a symmetric PSD matrix whose spectrum matches C2 C1, so the
    trace root is the sum of square roots of its eigenvalues.  Negative
    roundoff in the final value is clamped to zero; a negative beyond
    1e-8 of the term scale raises NumericError.
    """
    _check_dims(a, b)
    dm = a.mean - b.mean
    mean_term = float(dm @ dm)
    tr1 = float(np.trace(a.cov))
    tr2 = float(np.trace(b.cov))

    l2 = _psd_sqrt_factor(b.cov, "second argument")
    ev = np.linalg.eigvalsh(l2.T @ a.cov @ l2)
    cross = float(np.sqrt(np.clip(ev, 0.0, None)).sum())

    value = mean_term + tr1 + tr2 - 2.0 * cross
    scale = max(mean_term + tr1 + tr2, 1e-300)
    if value < -1e-8 * scale:
        raise NumericError(
            f"squared Wasserstein distance came out negative beyond roundoff: {value:.3e}"
        )
    return max(value, 0.0)


def _chol_logdet(cov: np.ndarray, which: str):
    try:
        chol = scipy.linalg.cho_factor(cov, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            f"{which} covariance is singular or indefinite; KL divergence "
            "needs strictly positive-definite covariances"
        ) from exc
    logdet = 2.0 * float(np.log(np.diagonal(chol[0])).sum())
    return chol, logdet


def kl_gaussian(a: GaussianMoments, b: GaussianMoments) -> float:
    """KL divergence KL(N(m1, C1) || N(m2, C2)) between Gaussians.

    0.5 * [ (m1-m2)t C2inv (m1-m2) + log(det C2 / det C1)
            + tr(C1 C2inv) - d ].

    Both covariances must be strictly positive definite; a singular input
    raises NumericError naming the offending argument.
    """
    _check_dims(a, b)
    _, logdet_a = _chol_logdet(a.cov, "first argument")
    chol_b, logdet_b = _chol_logdet(b.cov, "second argument")

    dm = a.mean - b.mean
    quad = float(dm @ scipy.linalg.cho_solve(chol_b, dm))
    tr_term = float(np.trace(scipy.linalg.cho_solve(chol_b, a.cov)))
    value = 0.5 * (quad + logdet_b - logdet_a + tr_term - a.dim)
    if -1e-10 < value < 0.0:
        return 0.0
    return value
