"""Gray-level co-occurrence texture features for 2-d images.

Pipeline: percentile threshold mask -> quantization to equal-width gray
levels over the masked range -> one pooled symmetric co-occurrence matrix
over the four unit directions -> 25 scalar features -> per-feature min-max
normalization across a corpus.

Feature definitions follow the standard Haralick/radiomics formulas; each
is spelled out in :func:`haralick_features`.  Degenerate denominators
(e.g. zero marginal variance on a constant image) yield 0 by convention so
the feature vector is always defined.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import InputError

FEATURE_NAMES = (
    "f01_autocorrelation",
    "f02_joint_average",
    "f03_cluster_prominence",
    "f04_cluster_shade",
    "f05_cluster_tendency",
    "f06_contrast",
    "f07_correlation",
    "f08_difference_entropy",
    "f09_dissimilarity",
    "f10_difference_variance",
    "f11_joint_energy",
    "f12_joint_entropy",
    "f13_inverse_difference",
    "f14_inverse_difference_moment",
    "f15_first_informal_correlation",
    "f16_second_informal_correlation",
    "f17_inverse_difference_moment_normalized",
    "f18_inverse_difference_normalized",
    "f19_inverse_variance",
    "f20_sum_average",
    "f21_sum_entropy",
    "f22_sum_variance",
    "f23_haralick_correlation",
    "f24_joint_maximum",
    "f25_joint_variance",
)

# Unit offsets (row, col) for the 0, 45, 90, and 135 degree directions.
# Symmetric accumulation of each offset covers all 8 neighbors of a pixel.
DEFAULT_OFFSETS = ((0, 1), (-1, 1), (-1, 0), (-1, -1))


@dataclass(frozen=True, eq=False)
class GrayImage:
    """A 2-d grayscale intensity grid with an identifying label."""

    pixels: np.ndarray
    id: str = ""

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=float)
        if arr.ndim != 2 or arr.size < 2:
            raise InputError(
                f"image must be 2-d with at least two pixels, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise InputError("image contains non-finite intensities")
        object.__setattr__(self, "pixels", arr)


@dataclass(frozen=True, eq=False)
class Glcm:
    """A normalized, symmetric gray-level co-occurrence matrix."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 2:
            raise InputError(f"co-occurrence matrix must be square, got {p.shape}")
        if np.any(p < 0):
            raise InputError("co-occurrence entries must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-9:
            raise InputError("co-occurrence matrix must sum to 1")
        if np.abs(p - p.T).max() > 1e-12:
            raise InputError("co-occurrence matrix must be symmetric")
        object.__setattr__(self, "p", p)

    @property
    def levels(self) -> int:
        return self.p.shape[0]


def threshold_mask(img: GrayImage, percentile: float = 5.0) -> np.ndarray:
    """Boolean mask of pixels strictly above the given intensity percentile.

    The percentile is the linearly interpolated order statistic.  Raises
    InputError when no pixel survives (e.g. a constant image with a
    positive percentile).
    """
    if not 0.0 <= percentile <= 100.0:
        raise InputError("percentile must lie in [0, 100]")
    cutoff = np.percentile(img.pixels, percentile)
    mask = img.pixels > cutoff
    if percentile == 0.0:
        # Nothing can sit below the 0th percentile; keep everything.
        mask = np.ones_like(mask)
    if not mask.any():
        raise InputError("all pixels excluded by the threshold")
    return mask


def _quantize(pixels: np.ndarray, mask: np.ndarray, levels: int) -> np.ndarray:
    """Equal-width quantization over the masked min..max range.

    Values exactly on a bin edge fall into the lower bin; a constant region
    maps everything to level 0.
    """
    vals = pixels[mask]
    vmin = vals.min()
    vmax = vals.max()
    if vmax == vmin:
        return np.zeros(pixels.shape, dtype=np.intp)
    width = (vmax - vmin) / levels
    q = np.ceil((pixels - vmin) / width).astype(np.intp) - 1
    return np.clip(q, 0, levels - 1)


def glcm(
    img: GrayImage,
    mask: np.ndarray | None = None,
    levels: int = 64,
    offsets=DEFAULT_OFFSETS,
) -> Glcm:
    """Pooled symmetric co-occurrence matrix of a masked image.

    For every offset, every in-bounds pixel pair with both ends unmasked
    contributes its level pair and the reversed pair; the counts of all
    offsets are pooled into one matrix and normalized to sum 1.
    """
    if levels < 2:
        raise InputError("need at least two gray levels")
    pixels = img.pixels
    if mask is None:
        mask = np.ones(pixels.shape, dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != pixels.shape:
            raise InputError(
                f"mask shape {mask.shape} does not match image shape {pixels.shape}"
            )
    if not mask.any():
        raise InputError("mask excludes every pixel")

    q = _quantize(pixels, mask, levels)
    h, w = pixels.shape
    counts = np.zeros((levels, levels), dtype=np.int64)
    for dr, dc in offsets:
        r0, r1 = max(0, -dr), min(h, h - dr)
        c0, c1 = max(0, -dc), min(w, w - dc)
        a = q[r0:r1, c0:c1]
        b = q[r0 + dr : r1 + dr, c0 + dc : c1 + dc]
        valid = mask[r0:r1, c0:c1] & mask[r0 + dr : r1 + dr, c0 + dc : c1 + dc]
        va = a[valid]
        vb = b[valid]
        np.add.at(counts, (va, vb), 1)
        np.add.at(counts, (vb, va), 1)

    total = counts.sum()
    if total == 0:
        raise InputError("no valid co-occurrence pairs inside the mask")
    return Glcm(p=counts / total)


def _entropy_bits(weights: np.ndarray, log_args: np.ndarray | None = None) -> float:
    """-sum w log2(a) over entries with positive log argument."""
    args = weights if log_args is None else log_args
    live = args > 0
    if not np.any(live):
        return 0.0
    return float(-(weights[live] * np.log2(args[live])).sum())


def haralick_features(g: Glcm) -> np.ndarray:
    """The 25 co-occurrence features, in ``FEATURE_NAMES`` order.

    With p(i, j) the matrix entries over 1-based levels i, j = 1..L,
    marginals px, py, marginal means and deviations mu_x, mu_y, sigma_x,
    sigma_y, and the sum/difference distributions
    p+(k) = sum of p(i, j) over i + j = k and p-(k) over |i - j| = k:

     1 autocorrelation            sum p i j
     2 joint average              mu_x
     3 cluster prominence         sum p (i + j - mu_x - mu_y)^4
     4 cluster shade              sum p (i + j - mu_x - mu_y)^3
     5 cluster tendency           sum p (i + j - mu_x - mu_y)^2
     6 contrast                   sum p (i - j)^2
     7 correlation                (sum p i j - mu_x mu_y) / (sigma_x sigma_y)
     8 difference entropy         -sum p-(k) log2 p-(k)
     9 dissimilarity              sum p |i - j|
    10 difference variance        sum (k - diff. average)^2 p-(k)
    11 joint energy               sum p^2
    12 joint entropy              -sum p log2 p
    13 inverse difference         sum p / (1 + |i - j|)
    14 inverse difference moment  sum p / (1 + (i - j)^2)
    15 first informal corr.       (HXY - HXY1) / max(HX, HY)
    16 second informal corr.      sqrt(1 - exp(-2 (HXY2 - HXY)))
    17 idm normalized             sum p / (1 + (i - j)^2 / L^2)
    18 inv. difference normalized sum p / (1 + |i - j| / L)
    19 inverse variance           sum over i != j of p / (i - j)^2
    20 sum average                sum k p+(k)
    21 sum entropy                -sum p+(k) log2 p+(k)
    22 sum variance               sum (k - sum average)^2 p+(k)
    23 haralick correlation       (sum p i j - mu^2) / sigma^2 on the row marginal
    24 joint maximum              max p
    25 joint variance             sum p (i - mu_x)^2

    Entropies are in bits.  HXY1 and HXY2 are the cross entropies between p
    and the product of marginals.
    """
    p = g.p
    nlev = g.levels
    idx = np.arange(1, nlev + 1, dtype=float)
    i_grid, j_grid = np.meshgrid(idx, idx, indexing="ij")

    px = p.sum(axis=1)
    py = p.sum(axis=0)
    mu_x = float(idx @ px)
    mu_y = float(idx @ py)
    sig_x = float(np.sqrt(((idx - mu_x) ** 2) @ px))
    sig_y = float(np.sqrt(((idx - mu_y) ** 2) @ py))

    diff = i_grid - j_grid
    absdiff = np.abs(diff)
    spread = i_grid + j_grid - mu_x - mu_y

    # p+ indexed by k = 2..2L, p- by k = 0..L-1
    ksum = np.arange(2, 2 * nlev + 1, dtype=float)
    kdiff = np.arange(0, nlev, dtype=float)
    p_plus = np.zeros(ksum.size)
    np.add.at(p_plus, (i_grid + j_grid).astype(int).ravel() - 2, p.ravel())
    p_minus = np.zeros(kdiff.size)
    np.add.at(p_minus, absdiff.astype(int).ravel(), p.ravel())

    autocorr = float((p * i_grid * j_grid).sum())
    hxy = _entropy_bits(p)
    hx = _entropy_bits(px)
    hy = _entropy_bits(py)
    pxpy = np.outer(px, py)
    hxy1 = _entropy_bits(p, pxpy)
    hxy2 = _entropy_bits(pxpy)

    if sig_x > 0 and sig_y > 0:
        correlation = (autocorr - mu_x * mu_y) / (sig_x * sig_y)
    else:
        correlation = 0.0
    denom = max(hx, hy)
    first_ic = (hxy - hxy1) / denom if denom > 0 else 0.0
    second_ic = float(np.sqrt(max(1.0 - np.exp(-2.0 * (hxy2 - hxy)), 0.0)))

    diff_avg = float(kdiff @ p_minus)
    sum_avg = float(ksum @ p_plus)
    var_m = sig_x * sig_x
    haralick_corr = (autocorr - mu_x * mu_x) / var_m if var_m > 0 else 0.0

    offdiag = absdiff > 0
    inv_var = float((p[offdiag] / diff[offdiag] ** 2).sum())

    return np.array(
        [
            autocorr,
            mu_x,
            float((p * spread**4).sum()),
            float((p * spread**3).sum()),
            float((p * spread**2).sum()),
            float((p * diff**2).sum()),
            correlation,
            _entropy_bits(p_minus),
            float((p * absdiff).sum()),
            float(((kdiff - diff_avg) ** 2 @ p_minus)),
            float((p * p).sum()),
            hxy,
            float((p / (1.0 + absdiff)).sum()),
            float((p / (1.0 + diff**2)).sum()),
            first_ic,
            second_ic,
            float((p / (1.0 + diff**2 / nlev**2)).sum()),
            float((p / (1.0 + absdiff / nlev)).sum()),
            inv_var,
            sum_avg,
            _entropy_bits(p_plus),
            float(((ksum - sum_avg) ** 2 @ p_plus)),
            haralick_corr,
            float(p.max()),
            float((p * (i_grid - mu_x) ** 2).sum()),
        ]
    )


def normalize_corpus(rows) -> np.ndarray:
    """Per-column min-max scaling of a feature table across a corpus.

    Columns with no spread map to 0.  Idempotent: already-normalized rows
    are reproduced exactly.
    """
    arr = np.asarray(rows, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise InputError("need a non-empty 2-d feature table")
    mins = arr.min(axis=0)
    span = arr.max(axis=0) - mins
    out = np.zeros_like(arr)
    live = span > 0
    out[:, live] = (arr[:, live] - mins[live]) / span[live]
    return out


def load_gray_image(path, id: str | None = None) -> GrayImage:
    """Read a grayscale image from an 8/16-bit PNG or a CSV intensity grid."""
    path = Path(path)
    label = id if id is not None else path.stem
    suffix = path.suffix.lower()
    if suffix == ".png":
        from PIL import Image

        with Image.open(path) as img:
            if img.mode not in ("L", "I", "I;16", "F"):
                raise InputError(
                    f"{path.name}: unsupported PNG mode {img.mode!r}; "
                    "expected 8- or 16-bit grayscale"
                )
            arr = np.asarray(img, dtype=float)
        return GrayImage(pixels=arr, id=label)
    if suffix in (".csv", ".txt"):
        try:
            arr = np.loadtxt(path, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise InputError(f"{path.name}: could not parse intensity grid: {exc}") from exc
        return GrayImage(pixels=arr, id=label)
    raise InputError(f"{path.name}: unsupported image format {suffix!r}")
