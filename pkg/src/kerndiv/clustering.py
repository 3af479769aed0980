"""Agglomerative clustering on precomputed dissimilarities plus evaluation stats.

The agglomeration is a deterministic Lance-Williams implementation rather
than a library call so that the tie rule is pinned: among all pairs at the
minimal dissimilarity, the pair with the lexicographically smallest node
indices merges first, on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import InputError
from .validation import check_square_distances

LINKAGES = ("average", "complete", "single")


@dataclass(frozen=True, eq=False)
class Dendrogram:
    """Merge history of an agglomerative clustering.

    Leaves are nodes 0..n-1; the t-th merge creates node n+t.  Each merge
    records (left node, right node, height, resulting cluster size) with
    left < right.
    """

    n_leaves: int
    merges: tuple

    def __post_init__(self):
        if len(self.merges) != self.n_leaves - 1:
            raise InputError(
                f"{self.n_leaves} leaves require {self.n_leaves - 1} merges, "
                f"got {len(self.merges)}"
            )
        object.__setattr__(
            self,
            "merges",
            tuple((int(a), int(b), float(h), int(s)) for a, b, h, s in self.merges),
        )

    def to_dict(self) -> dict:
        return {"n_leaves": self.n_leaves, "merges": [list(m) for m in self.merges]}

    @classmethod
    def from_dict(cls, obj: dict) -> "Dendrogram":
        try:
            return cls(n_leaves=int(obj["n_leaves"]), merges=tuple(map(tuple, obj["merges"])))
        except KeyError as exc:
            raise InputError(f"dendrogram JSON is missing key {exc}") from exc


def agglomerate(d, linkage: str = "average") -> Dendrogram:
    """Hierarchical agglomeration of a precomputed dissimilarity matrix.

    ``d`` is a DistanceMatrix or a square array.  Linkage updates follow the
    Lance-Williams formulas for average, complete, and single linkage, all
    of which produce non-decreasing merge heights.
    """
    if linkage not in LINKAGES:
        raise InputError(f"unknown linkage {linkage!r}; choose from {LINKAGES}")
    values = getattr(d, "values", d)
    work = check_square_distances(values).copy()
    n = work.shape[0]
    if n < 2:
        raise InputError("clustering requires at least two items")

    # Active clusters stay sorted by node id: new nodes get the largest id
    # and are appended, so a row-major argmin realizes the tie rule.
    node_ids = list(range(n))
    sizes = np.ones(n)
    np.fill_diagonal(work, np.inf)
    merges = []

    for step in range(n - 1):
        flat = np.argmin(work)
        i, j = divmod(int(flat), work.shape[0])
        if i > j:
            i, j = j, i
        height = work[i, j]

        di = np.delete(work[i], [i, j])
        dj = np.delete(work[j], [i, j])
        if linkage == "single":
            merged = np.minimum(di, dj)
        elif linkage == "complete":
            merged = np.maximum(di, dj)
        else:
            merged = (sizes[i] * di + sizes[j] * dj) / (sizes[i] + sizes[j])

        new_size = sizes[i] + sizes[j]
        merges.append((node_ids[i], node_ids[j], float(height), int(new_size)))

        keep = [t for t in range(work.shape[0]) if t not in (i, j)]
        reduced = work[np.ix_(keep, keep)]
        m = reduced.shape[0]
        grown = np.full((m + 1, m + 1), np.inf)
        grown[:m, :m] = reduced
        grown[m, :m] = merged
        grown[:m, m] = merged
        work = grown

        sizes = np.append(sizes[keep], new_size)
        node_ids = [node_ids[t] for t in keep] + [n + step]

    return Dendrogram(n_leaves=n, merges=tuple(merges))


def cut(tree: Dendrogram, k: int) -> np.ndarray:
    """Labels for the k-cluster partition obtained by undoing the last k-1 merges.

    Clusters are numbered 0..k-1 by descending size, ties broken by the
    smallest contained leaf index.
    """
    n = tree.n_leaves
    if not 1 <= k <= n:
        raise InputError(f"k must be between 1 and {n}, got {k}")
    members = {leaf: [leaf] for leaf in range(n)}
    for t, (left, right, _height, _size) in enumerate(tree.merges[: n - k]):
        members[n + t] = members.pop(left) + members.pop(right)

    clusters = sorted(members.values(), key=lambda leaves: (-len(leaves), min(leaves)))
    labels = np.empty(n, dtype=int)
    for rank, leaves in enumerate(clusters):
        labels[leaves] = rank
    return labels


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    """Cluster-versus-truth counts; rows are clusters, columns truth classes."""

    counts: np.ndarray
    row_labels: tuple
    col_labels: tuple

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2:
            raise InputError("contingency counts must be a 2-d table")
        if np.any(counts < 0):
            raise InputError("contingency counts must be nonnegative")
        if counts.shape != (len(self.row_labels), len(self.col_labels)):
            raise InputError("contingency labels do not match the counts shape")
        object.__setattr__(self, "counts", counts.astype(np.int64))
        object.__setattr__(self, "row_labels", tuple(self.row_labels))
        object.__setattr__(self, "col_labels", tuple(self.col_labels))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_dict(self) -> dict:
        return {
            "counts": self.counts.tolist(),
            "row_labels": [str(r) for r in self.row_labels],
            "col_labels": [str(c) for c in self.col_labels],
        }


def contingency(labels, truth) -> ContingencyTable:
    """Cross-tabulate cluster labels against ground-truth classes."""
    labels = np.asarray(labels).ravel()
    truth = np.asarray(truth).ravel()
    if labels.size != truth.size:
        raise InputError(
            f"label vectors differ in length: {labels.size} vs {truth.size}"
        )
    if labels.size == 0:
        raise InputError("label vectors must not be empty")
    row_values, row_idx = np.unique(labels, return_inverse=True)
    col_values, col_idx = np.unique(truth, return_inverse=True)
    counts = np.zeros((row_values.size, col_values.size), dtype=np.int64)
    np.add.at(counts, (row_idx, col_idx), 1)
    return ContingencyTable(
        counts=counts,
        row_labels=tuple(row_values.tolist()),
        col_labels=tuple(col_values.tolist()),
    )


def _table_counts(table) -> np.ndarray:
    counts = table.counts if isinstance(table, ContingencyTable) else np.asarray(table)
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 2:
        raise InputError("expected a 2-d contingency table")
    if np.any(counts < 0):
        raise InputError("contingency counts must be nonnegative")
    return counts


def chi_square(table) -> float:
    """Pearson chi-square statistic of a contingency table.

    Sum of (observed - expected)^2 / expected with expected counts from the
    marginals; no continuity correction.  Every row and column total must be
    positive.
    """
    counts = _table_counts(table)
    row = counts.sum(axis=1)
    col = counts.sum(axis=0)
    if np.any(row == 0) or np.any(col == 0):
        raise InputError("chi-square is undefined for a zero row or column total")
    expected = np.outer(row, col) / counts.sum()
    return float(((counts - expected) ** 2 / expected).sum())


class PredictionRates(NamedTuple):
    noisy_rate: float
    clean_rate: float
    overall: float


def prediction_rates(table, noisy_cluster: int, noisy_class: int) -> PredictionRates:
    """Per-class and overall hit rates of a 2x2 cluster-versus-truth table.

    ``noisy_cluster`` / ``noisy_class`` pick the row and column regarded as
    the noisy assignment; the complementary row and column are the clean
    ones.  Rates are fractions in [0, 1].
    """
    counts = _table_counts(table)
    if counts.shape != (2, 2):
        raise InputError(f"prediction rates need a 2x2 table, got {counts.shape}")
    if noisy_cluster not in (0, 1) or noisy_class not in (0, 1):
        raise InputError("noisy_cluster and noisy_class must be 0 or 1")
    noisy_total = counts[:, noisy_class].sum()
    clean_total = counts[:, 1 - noisy_class].sum()
    if noisy_total == 0 or clean_total == 0:
        raise InputError("prediction rates are undefined for an empty class")
    noisy_hits = counts[noisy_cluster, noisy_class]
    clean_hits = counts[1 - noisy_cluster, 1 - noisy_class]
    return PredictionRates(
        noisy_rate=float(noisy_hits / noisy_total),
        clean_rate=float(clean_hits / clean_total),
        overall=float((noisy_hits + clean_hits) / counts.sum()),
    )
