"""Divergences between empirical sample sets, in native and kernel space.

The two headline quantities are the kernel squared L2-Wasserstein distance

    mmd_sq + tr(J1 J1t K11) + tr(J2 J2t K22)
           - 2 tr((K12 J2 J2t K21 J1 J1t)^(1/2))

and the kernel KL divergence, obtained by treating the mapped samples as a
Gaussian with ridge-regularized covariance H = Sigma + rho I in feature
space and eliminating the (unknown, possibly infinite) feature dimension
through the Woodbury identity and a determinant transposition trick.  Both
are computed purely from Gram matrices.

Native-space comparators (Gaussian Wasserstein / symmetrized KL on sample
moments) and the pairwise distance-matrix builder live here as well.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .exceptions import InputError, NumericError
from .gaussian import GaussianMoments, kl_gaussian, moments, w2_gaussian_sq
from .kernels import (
    CenteringFactors,
    GramBundle,
    KernelSpec,
    SampleSet,
    WoodburyFactors,
    centering,
    cross_nuclear_norm,
    gram,
    trace_centered,
    trace_sqrt_cross,
    woodbury,
)
from .validation import as_samples, check_same_dim

METRICS = ("w2", "kernel_w2", "kl_sym", "kernel_kl_sym", "mmd")


@dataclass(frozen=True)
class DivergenceOptions:
    """Knobs shared by the kernel divergences.

    ``rho`` is the covariance ridge used by the KL family (and by the
    native symmetrized KL when a sample covariance is singular).
    ``report_squared`` controls whether Wasserstein values are returned
    squared (the natural output of the formula) or as their square root.
    """

    kernel: KernelSpec = KernelSpec()
    rho: float = 0.1
    report_squared: bool = True

    def __post_init__(self):
        if not self.rho > 0:
            raise InputError("rho must be positive")


def _clamp_nonneg(value: float, tol: float, what: str) -> float:
    """Clamp roundoff negatives to zero; larger negatives are hard errors."""
    if value >= 0.0:
        return value
    if value >= -tol:
        return 0.0
    raise NumericError(f"{what} came out negative beyond roundoff: {value:.6e}")


def mmd_sq(x, y, kernel: KernelSpec | None = None) -> float:
    """Squared maximum mean discrepancy between two sample sets.

    mean(K11) - 2 mean(K12) + mean(K22), i.e. the squared distance between
    the kernel mean embeddings of the two sets.
    """
    kernel = kernel or KernelSpec()
    xv = as_samples(x, "first sample set")
    yv = as_samples(y, "second sample set")
    check_same_dim(xv, yv)
    value = (
        float(gram(kernel, xv, xv).mean())
        - 2.0 * float(gram(kernel, xv, yv).mean())
        + float(gram(kernel, yv, yv).mean())
    )
    return _clamp_nonneg(value, 1e-10, "squared MMD")


def _kernel_w2_sq_parts(bundle: GramBundle) -> float:
    mmd_part = (
        float(bundle.k11.mean())
        - 2.0 * float(bundle.k12.mean())
        + float(bundle.k22.mean())
    )
    bures_part = (
        trace_centered(bundle.k11, bundle.cf1)
        + trace_centered(bundle.k22, bundle.cf2)
        - 2.0 * trace_sqrt_cross(bundle)
    )
    return mmd_part + bures_part


def kernel_w2_sq(x, y, opts: DivergenceOptions | None = None) -> float:
    """Squared L2-Wasserstein distance between two sets in kernel space.

    Returns the square root instead when ``opts.report_squared`` is False.
    """
    opts = opts or DivergenceOptions()
    bundle = GramBundle.from_sets(opts.kernel, x, y)
    value = _clamp_nonneg(
        _kernel_w2_sq_parts(bundle), 1e-9, "squared kernel Wasserstein distance"
    )
    return value if opts.report_squared else float(np.sqrt(value))


@dataclass(frozen=True, eq=False)
class _KlSetState:
    """Per-set quantities reused across directed KL evaluations."""

    k: np.ndarray
    cf: CenteringFactors
    wf: WoodburyFactors
    ks: np.ndarray        # K s
    bks: np.ndarray       # B K s
    sks: float            # st K s
    tr_sk: float          # tr(J Jt K)
    tr_bk: float          # tr(B K)


def _kl_set_state(k: np.ndarray, cf: CenteringFactors, rho: float) -> _KlSetState:
    wf = woodbury(k, cf, rho)
    ks = k @ cf.s
    return _KlSetState(
        k=k,
        cf=cf,
        wf=wf,
        ks=ks,
        bks=wf.b_matrix @ ks,
        sks=float(cf.s @ ks),
        tr_sk=trace_centered(k, cf),
        tr_bk=float(np.sum(wf.b_matrix * k)),
    )


def _kl_directed(a: _KlSetState, b: _KlSetState, k_ab: np.ndarray, rho: float) -> float:
    """Directed kernel KL of set a from set b, from Gram blocks only.

    Implements, for Gaussians with ridge-regularized feature-space
    covariances H_i = Sigma_i + rho I:

        2 KL = (theta_aba + theta_bbb - theta_abb - theta_bba) / rho
             + [n log rho - log det M_a] - [m log rho - log det M_b]
             + tr(S_a K_aa) / rho - tr(S_a K_ab B_b K_ba) / rho
             - tr(B_b K_bb)

    where theta_ijk = s_it K_ik s_k - s_it K_ij B_j K_jk s_k.  The
    determinant identity det(I - K B) = rho^n / det M keeps the
    log-determinants on Cholesky factors of positive-definite matrices.
    """
    s_b = b.cf.s
    b_b = b.wf.b_matrix
    c_ab = k_ab.T @ a.cf.s  # K_ba s_a
    bc_ab = b_b @ c_ab

    theta_aba = a.sks - float(c_ab @ bc_ab)
    theta_bbb = b.sks - float(b.ks @ b.bks)
    theta_abb = float(c_ab @ s_b) - float(c_ab @ b.bks)
    theta_bba = float(s_b @ c_ab) - float(b.ks @ bc_ab)

    n, m = a.cf.n, b.cf.n
    log_term = (n * np.log(rho) - a.wf.m_logdet) - (m * np.log(rho) - b.wf.m_logdet)

    sk_ab = a.cf.S @ k_ab
    tr_cross = float(np.sum((sk_ab @ b_b) * k_ab))

    value = 0.5 * (
        (theta_aba + theta_bbb - theta_abb - theta_bba) / rho
        + log_term
        + (a.tr_sk - tr_cross) / rho
        - b.tr_bk
    )
    return _clamp_nonneg(value, 1e-8, "kernel KL divergence")


def kernel_kl(x, y, opts: DivergenceOptions | None = None) -> float:
    """Directed kernel KL divergence of x from y (not symmetric)."""
    opts = opts or DivergenceOptions()
    bundle = GramBundle.from_sets(opts.kernel, x, y)
    state_x = _kl_set_state(bundle.k11, bundle.cf1, opts.rho)
    state_y = _kl_set_state(bundle.k22, bundle.cf2, opts.rho)
    return _kl_directed(state_x, state_y, bundle.k12, opts.rho)


def kernel_kl_sym(x, y, opts: DivergenceOptions | None = None) -> float:
    """Symmetrized kernel KL: the average of the two directed divergences."""
    opts = opts or DivergenceOptions()
    bundle = GramBundle.from_sets(opts.kernel, x, y)
    state_x = _kl_set_state(bundle.k11, bundle.cf1, opts.rho)
    state_y = _kl_set_state(bundle.k22, bundle.cf2, opts.rho)
    forward = _kl_directed(state_x, state_y, bundle.k12, opts.rho)
    backward = _kl_directed(state_y, state_x, bundle.k12.T, opts.rho)
    return 0.5 * (forward + backward)


def _is_strictly_pd(cov: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(cov)
        return True
    except np.linalg.LinAlgError:
        return False


def kl_sym_gaussian(x, y, opts: DivergenceOptions | None = None) -> float:
    """Symmetrized Gaussian KL on sample moments, ridged when singular.

    If either sample covariance is not strictly positive definite the same
    ridge ``rho I`` is added to both, mirroring the regularization the
    kernel KL applies in feature space.
    """
    opts = opts or DivergenceOptions()
    mx = moments(x)
    my = moments(y)
    if not (_is_strictly_pd(mx.cov) and _is_strictly_pd(my.cov)):
        ridge = opts.rho * np.eye(mx.dim)
        mx = GaussianMoments(mean=mx.mean, cov=mx.cov + ridge)
        my = GaussianMoments(mean=my.mean, cov=my.cov + ridge)
    return 0.5 * (kl_gaussian(mx, my) + kl_gaussian(my, mx))


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric nonnegative matrix of pairwise divergences.

    ``metric`` records which divergence filled the matrix; the canonical
    tags are the entries of ``METRICS``.
    """

    labels: tuple
    values: np.ndarray
    metric: str

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InputError(f"distance matrix must be square, got {values.shape}")
        if len(labels) != values.shape[0]:
            raise InputError(
                f"{len(labels)} labels for a {values.shape[0]}-row matrix"
            )
        if not np.all(np.isfinite(values)):
            raise InputError("distance matrix contains non-finite entries")
        if values.size:
            if np.abs(values - values.T).max() > 1e-9:
                raise InputError("distance matrix is asymmetric beyond tolerance")
            if np.abs(np.diagonal(values)).max() > 1e-9:
                raise InputError("distance matrix diagonal is not zero")
            if values.min() < -1e-9:
                raise InputError("distance matrix has negative entries")
        if not self.metric:
            raise InputError("metric tag must be a non-empty string")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.labels)

    def to_csv(self) -> str:
        """Header row of labels followed by the square numeric body."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.labels)
        for row in self.values:
            writer.writerow([format(v, ".17g") for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, metric: str = "precomputed") -> "DistanceMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        rows = [row for row in rows if row]
        if len(rows) < 2:
            raise InputError("distance CSV needs a label header and a numeric body")
        labels = tuple(rows[0])
        try:
            values = np.array([[float(v) for v in row] for row in rows[1:]])
        except ValueError as exc:
            raise InputError(f"distance CSV has a non-numeric body entry: {exc}") from exc
        return cls(labels=labels, values=values, metric=metric)

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "metric": self.metric,
            "values": [[float(v) for v in row] for row in self.values],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "DistanceMatrix":
        try:
            return cls(
                labels=tuple(obj["labels"]),
                values=np.asarray(obj["values"], dtype=float),
                metric=str(obj["metric"]),
            )
        except KeyError as exc:
            raise InputError(f"distance JSON object is missing key {exc}") from exc


def _coerce_sets(sets) -> list[SampleSet]:
    coerced = []
    for index, item in enumerate(sets):
        if isinstance(item, SampleSet):
            if not item.id:
                item = SampleSet(data=item.data, id=f"set-{index:04d}")
        else:
            item = SampleSet(data=as_samples(item), id=f"set-{index:04d}")
        coerced.append(item)
    if len(coerced) < 2:
        raise InputError("need at least two sample sets")
    dim = coerced[0].dim
    for item in coerced:
        if item.dim != dim:
            raise InputError(
                f"sample set {item.id!r} has dimension {item.dim}, expected {dim}"
            )
    return coerced


def _centering_cache():
    cache: dict[int, CenteringFactors] = {}

    def get(n: int) -> CenteringFactors:
        if n not in cache:
            cache[n] = centering(n)
        return cache[n]

    return get


def _pair_engine(metric, sets: list[SampleSet], opts: DivergenceOptions):
    """Build a pure pair function (i, j) -> float with per-set state cached."""
    if callable(metric):
        return lambda i, j: float(metric(sets[i], sets[j]))

    if metric == "w2":
        mom = [moments(s) for s in sets]
        root = not opts.report_squared

        def w2_pair(i, j):
            value = w2_gaussian_sq(mom[i], mom[j])
            return float(np.sqrt(value)) if root else value

        return w2_pair

    if metric == "kl_sym":
        return lambda i, j: kl_sym_gaussian(sets[i], sets[j], opts)

    cf_for = _centering_cache()
    kernel = opts.kernel

    if metric == "mmd":
        self_means = [float(gram(kernel, s, s).mean()) for s in sets]

        def mmd_pair(i, j):
            k12 = gram(kernel, sets[i], sets[j])
            value = self_means[i] - 2.0 * float(k12.mean()) + self_means[j]
            return _clamp_nonneg(value, 1e-10, "squared MMD")

        return mmd_pair

    if metric == "kernel_w2":
        self_means = []
        self_traces = []
        for s in sets:
            k = gram(kernel, s, s)
            self_means.append(float(k.mean()))
            self_traces.append(trace_centered(k, cf_for(s.n)))
        root = not opts.report_squared

        def kernel_w2_pair(i, j):
            k12 = gram(kernel, sets[i], sets[j])
            value = (
                self_means[i]
                - 2.0 * float(k12.mean())
                + self_means[j]
                + self_traces[i]
                + self_traces[j]
                - 2.0 * cross_nuclear_norm(k12, cf_for(sets[i].n), cf_for(sets[j].n))
            )
            value = _clamp_nonneg(value, 1e-9, "squared kernel Wasserstein distance")
            return float(np.sqrt(value)) if root else value

        return kernel_w2_pair

    if metric == "kernel_kl_sym":
        states = [
            _kl_set_state(gram(kernel, s, s), cf_for(s.n), opts.rho) for s in sets
        ]

        def kernel_kl_pair(i, j):
            k12 = gram(kernel, sets[i], sets[j])
            forward = _kl_directed(states[i], states[j], k12, opts.rho)
            backward = _kl_directed(states[j], states[i], k12.T, opts.rho)
            return 0.5 * (forward + backward)

        return kernel_kl_pair

    raise InputError(f"unknown metric {metric!r}; choose from {METRICS}")


def distance_matrix(
    sets,
    metric="kernel_w2",
    opts: DivergenceOptions | None = None,
    n_workers: int | None = None,
) -> DistanceMatrix:
    """Pairwise divergence matrix over a collection of sample sets.

    ``metric`` is one of ``METRICS`` or a callable ``(a, b) -> float``.
    Pairs are independent pure computations; ``n_workers`` > 1 evaluates
    them on a thread pool with identical results regardless of scheduling.
    The result is symmetrized as (D + Dt)/2 with an exactly zero diagonal.
    A failing pair raises an error naming the two set ids.
    """
    opts = opts or DivergenceOptions()
    coerced = _coerce_sets(sets)
    labels = tuple(s.id for s in coerced)
    pair_fn = _pair_engine(metric, coerced, opts)

    n = len(coerced)
    values = np.zeros((n, n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    builtin_metric = not callable(metric)

    def guarded(pair):
        i, j = pair
        try:
            # any divergence of a set from an identical set is exactly zero
            if builtin_metric and np.array_equal(coerced[i].data, coerced[j].data):
                return 0.0
            return pair_fn(i, j)
        except (InputError, NumericError) as exc:
            raise type(exc)(
                f"pair ({labels[i]!r}, {labels[j]!r}): {exc}"
            ) from exc

    if n_workers is not None and n_workers > 1 and pairs:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            futures = {pair: pool.submit(guarded, pair) for pair in pairs}
        for (i, j), future in futures.items():
            values[i, j] = future.result()
    else:
        for i, j in pairs:
            values[i, j] = guarded((i, j))

    # mirroring the strict upper triangle is the exact form of (D + Dt) / 2
    values = values + values.T
    np.fill_diagonal(values, 0.0)

    tag = metric if isinstance(metric, str) else getattr(metric, "__name__", "custom")
    return DistanceMatrix(labels=labels, values=values, metric=tag)


def cross_distance_matrix(
    row_sets,
    col_sets,
    metric="kernel_w2",
    opts: DivergenceOptions | None = None,
) -> np.ndarray:
    """Rectangular divergence matrix between two collections of sample sets.

    Unlike :func:`distance_matrix` the result carries no symmetry or zero
    diagonal guarantees; it is the raw (len(row_sets), len(col_sets)) grid.
    """
    opts = opts or DivergenceOptions()
    rows = [r if isinstance(r, SampleSet) else SampleSet(as_samples(r)) for r in row_sets]
    cols = [c if isinstance(c, SampleSet) else SampleSet(as_samples(c)) for c in col_sets]
    if not rows or not cols:
        raise InputError("need at least one sample set on each side")
    combined = list(rows) + list(cols)
    dim = combined[0].dim
    for item in combined:
        if item.dim != dim:
            raise InputError("all sample sets must share one feature dimension")
    pair_fn = _pair_engine(metric, combined, opts)
    out = np.empty((len(rows), len(cols)))
    for i in range(len(rows)):
        for j in range(len(cols)):
            out[i, j] = pair_fn(i, len(rows) + j)
    return out
