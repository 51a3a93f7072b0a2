"""Microaggregation: build groups of at least k records, replace quasi-identifiers
with group means.

Grouping heuristics
-------------------
* :func:`mdav_partition` -- maximum-distance-to-average-vector heuristic;
  fixed-size groups of k grown around extreme records, sizes always in
  [k, 2k-1].
* :func:`single_axis_partition` -- project records onto one axis (sum of
  z-scores, or the first principal component of the z-scored data), sort,
  and cut into consecutive runs of k.
* :func:`individual_sorting_mask` -- sort and chunk every quasi-identifier
  column independently; good utility, but column-wise masking gives no
  record-level k-anonymity guarantee.
* :func:`diversity_partition` -- like MDAV's extreme-first growth, but each
  group takes k records from *every* confidential class, so groups stay
  diverse in the sensitive attribute.

The hybrid pipeline (:func:`hybrid_anonymize`, method name ``hm_pfsom``)
first splits the table into sub-tables by fuzzy-possibilistic clustering
on the quasi-identifiers, discovers confidential classes inside each
sub-table by clustering the confidential attributes, then runs the
diversity-constrained grouping per sub-table and masks group-by-group.

Distances are computed on min-max-normalized attributes; masking replaces
raw-unit values with exact group means (summed with ``math.fsum``), so
per-group means and column sums of the quasi-identifiers are preserved.
All tie-breaks take the lowest row index, making every method
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .dataset import ColumnStats, Microdata, column_stats, min_max_normalize
from .errors import ClassTooSmallError, DataError, DegenerateModelError, KTooLargeError
from .fpclust import FuzzinessParams, default_c_range, select_partition
from .schema import AttributeRole

METHODS = (
    "mdav",
    "individual_sorting",
    "single_axis_zscore",
    "single_axis_pca",
    "hm_pfsom",
)

SINGLE_AXIS_CRITERIA = ("zscore_sum", "first_pc")


@dataclass(frozen=True)
class Partition:
    """A disjoint, exhaustive grouping of n records into contiguous group ids.

    ``k_declared`` records the privacy parameter the partition was built
    for; equivalence-class partitions derived from masked values carry
    ``k_declared=1`` (no construction-time guarantee).
    """

    labels: np.ndarray
    n_groups: int
    k_declared: int

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("labels must be a non-empty 1-D integer vector")
        if self.n_groups < 1:
            raise ValueError("a partition needs at least one group")
        if self.k_declared < 1:
            raise ValueError("k_declared must be at least 1")
        sizes = np.bincount(labels, minlength=self.n_groups)
        if labels.min() < 0 or labels.max() >= self.n_groups:
            raise ValueError("labels must lie in [0, n_groups)")
        if (sizes == 0).any():
            raise ValueError("every group id in [0, n_groups) must be used")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    def group_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_groups)

    @property
    def min_group_size(self) -> int:
        return int(self.group_sizes().min())

    def members(self, group: int) -> np.ndarray:
        return np.flatnonzero(self.labels == group)

    def to_dict(self) -> dict:
        return {
            "labels": self.labels.tolist(),
            "n_groups": int(self.n_groups),
            "k_declared": int(self.k_declared),
        }


def _qid_matrix(data) -> np.ndarray:
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("expected a non-empty 2-D matrix of quasi-identifiers")
    if not np.isfinite(X).all():
        raise ValueError("quasi-identifiers contain non-finite values")
    return X


def mdav_partition(qids, k: int) -> Partition:
    """Fixed-size microaggregation via the maximum-distance-to-average heuristic.

    While at least 3k records remain: find the record farthest from the
    centroid of the remaining records, group it with its k-1 nearest
    neighbours, then do the same around the record farthest from it.
    Between 2k and 3k-1 leftovers form one far group of k plus one group of
    the rest; fewer than 2k leftovers join as a single group.  All group
    sizes land in [k, 2k-1].
    """
    X = _qid_matrix(qids)
    n = X.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise KTooLargeError(k, n)
    labels = np.full(n, -1, dtype=np.int64)
    unassigned = np.ones(n, dtype=bool)
    next_group = 0

    def take_nearest(anchor: int, pool: np.ndarray, count: int) -> np.ndarray:
        """``count`` pool indices nearest the anchor record (stable on ties)."""
        d = ((X[pool] - X[anchor]) ** 2).sum(axis=1)
        order = np.argsort(d, kind="stable")
        return pool[order[:count]]

    while int(unassigned.sum()) >= 3 * k:
        pool = np.flatnonzero(unassigned)
        centroid = X[pool].mean(axis=0)
        d_c = ((X[pool] - centroid) ** 2).sum(axis=1)
        r = int(pool[np.argmax(d_c)])
        d_r = ((X[pool] - X[r]) ** 2).sum(axis=1)
        far = int(pool[np.argmax(d_r)])
        candidates = pool[(pool != r) & (pool != far)]
        group_r = np.concatenate(([r], take_nearest(r, candidates, k - 1)))
        labels[group_r] = next_group
        unassigned[group_r] = False
        next_group += 1
        pool = np.flatnonzero(unassigned)
        candidates = pool[pool != far]
        group_far = np.concatenate(([far], take_nearest(far, candidates, k - 1)))
        labels[group_far] = next_group
        unassigned[group_far] = False
        next_group += 1

    pool = np.flatnonzero(unassigned)
    if pool.size >= 2 * k:
        centroid = X[pool].mean(axis=0)
        d_c = ((X[pool] - centroid) ** 2).sum(axis=1)
        r = int(pool[np.argmax(d_c)])
        candidates = pool[pool != r]
        group_r = np.concatenate(([r], take_nearest(r, candidates, k - 1)))
        labels[group_r] = next_group
        unassigned[group_r] = False
        next_group += 1
        pool = np.flatnonzero(unassigned)
    if pool.size:
        labels[pool] = next_group
        next_group += 1
    return Partition(labels, next_group, k)


def single_axis_scores(qids, criterion: str = "zscore_sum") -> np.ndarray:
    """Per-record ordering score for single-axis microaggregation.

    ``zscore_sum`` sums each record's per-column z-scores; ``first_pc``
    projects the z-scored records onto the leading eigenvector of their
    covariance, with the sign fixed so the largest-magnitude loading is
    positive.  Zero-variance columns are rejected.
    """
    X = _qid_matrix(qids)
    if criterion not in SINGLE_AXIS_CRITERIA:
        raise ValueError(f"criterion must be one of {SINGLE_AXIS_CRITERIA}, got {criterion!r}")
    stds = X.std(axis=0)
    if (stds == 0.0).any():
        cols = np.flatnonzero(stds == 0.0).tolist()
        raise DataError(f"zero-variance quasi-identifier column(s) {cols}; "
                        "single-axis scoring needs spread in every column")
    Z = (X - X.mean(axis=0)) / stds
    if criterion == "zscore_sum":
        return Z.sum(axis=1)
    cov = (Z.T @ Z) / Z.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)
    lead = eigvecs[:, -1]
    if eigvals[-1] <= 0.0:
        raise DataError("degenerate covariance: no leading principal direction")
    pivot = int(np.argmax(np.abs(lead)))
    if lead[pivot] < 0.0:
        lead = -lead
    return Z @ lead


def _chunk_bounds(n: int, k: int) -> list[tuple[int, int]]:
    """Consecutive runs of k with the remainder absorbed into the last run."""
    n_chunks = n // k
    bounds = [(i * k, (i + 1) * k) for i in range(n_chunks)]
    lo, _ = bounds[-1]
    bounds[-1] = (lo, n)
    return bounds


def single_axis_partition(qids, k: int, criterion: str = "zscore_sum") -> Partition:
    """Sort records by a one-dimensional score and cut into runs of k.

    The last run absorbs the remainder, so sizes are k except the final
    k..2k-1.  Equal scores keep row order (stable sort), so degenerate
    scores fall back to grouping by row index.
    """
    X = _qid_matrix(qids)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    scores = single_axis_scores(X, criterion)
    order = np.argsort(scores, kind="stable")
    labels = np.empty(n, dtype=np.int64)
    bounds = _chunk_bounds(n, k)
    for g, (lo, hi) in enumerate(bounds):
        labels[order[lo:hi]] = g
    return Partition(labels, len(bounds), k)


def individual_sorting_mask(md: Microdata, k: int) -> Microdata:
    """Mask each quasi-identifier column independently by sort-and-chunk means.

    Per column: sort values, cut into runs of k (last run absorbs the
    remainder), replace each value by its run's mean, restore row order.
    Columns are treated independently, so the masked table need not be
    k-anonymous at the record level.
    """
    n = md.n
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rows = np.array(md.rows, copy=True)
    for col in md.schema.indices_for(AttributeRole.QUASI_IDENTIFIER):
        values = rows[:, col]
        order = np.argsort(values, kind="stable")
        for lo, hi in _chunk_bounds(n, k):
            members = order[lo:hi]
            rows[members, col] = math.fsum(values[members]) / members.size
    return md.with_rows(rows)


def centroid_replace(md: Microdata, partition: Partition) -> Microdata:
    """Replace each quasi-identifier cell by its group's exact mean.

    Identifier and confidential columns pass through untouched.  Group
    means are computed with exact summation, so every masked cell equals
    the group mean of the original values and column sums are conserved.
    """
    if partition.n != md.n:
        raise ValueError(f"partition covers {partition.n} records but the table has {md.n}")
    rows = np.array(md.rows, copy=True)
    qid_cols = md.schema.indices_for(AttributeRole.QUASI_IDENTIFIER)
    for g in range(partition.n_groups):
        members = partition.members(g)
        for col in qid_cols:
            rows[members, col] = math.fsum(md.rows[members, col]) / members.size
    return md.with_rows(rows)


def diversity_partition(qids, class_labels, k: int) -> Partition:
    """Group records so every group keeps at least k members of every class.

    Repeatedly seeds a group on the unassigned record farthest from the
    overall centroid (computed once), filling it with the k-1 nearest
    unassigned classmates of the seed plus the k nearest unassigned
    members of every other class -- exactly k * n_classes records.  When
    some class can no longer supply k members, each leftover record joins
    the seeded group with the nearest quasi-identifier centroid (centroids
    computed once after seeding, leftovers processed in row order).

    Raises :class:`ClassTooSmallError` when any class starts with fewer
    than k members.  The number of seeded groups equals
    ``min_class_size // k``.
    """
    X = _qid_matrix(qids)
    n = X.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    y = np.asarray(class_labels)
    if y.shape != (n,):
        raise ValueError("class_labels must have one entry per record")
    _, y_idx = np.unique(y, return_inverse=True)
    cs = int(y_idx.max()) + 1
    sizes = np.bincount(y_idx, minlength=cs)
    if int(sizes.min()) < k:
        raise ClassTooSmallError(k, int(sizes.min()))

    centroid = X.mean(axis=0)  # fixed for the whole run
    d_centroid = ((X - centroid) ** 2).sum(axis=1)
    unassigned = np.ones(n, dtype=bool)
    labels = np.full(n, -1, dtype=np.int64)
    n_groups = 0

    def nearest_of_class(anchor: int, cls: int, count: int) -> np.ndarray:
        pool = np.flatnonzero(unassigned & (y_idx == cls))
        pool = pool[pool != anchor]
        d = ((X[pool] - X[anchor]) ** 2).sum(axis=1)
        return pool[np.argsort(d, kind="stable")[:count]]

    while True:
        remaining = np.bincount(y_idx[unassigned], minlength=cs)
        if int(remaining.min()) < k:
            break
        pool = np.flatnonzero(unassigned)
        seed = int(pool[np.argmax(d_centroid[pool])])
        group = [seed]
        for cls in range(cs):
            need = k - 1 if cls == y_idx[seed] else k
            group.extend(nearest_of_class(seed, cls, need))
        group = np.asarray(group)
        labels[group] = n_groups
        unassigned[group] = False
        n_groups += 1

    leftovers = np.flatnonzero(unassigned)
    if leftovers.size:
        # centroids of the seeded groups, computed once; assignments do not update them
        centroids = np.stack([X[labels == g].mean(axis=0) for g in range(n_groups)])
        for i in leftovers:  # row order
            d = ((centroids - X[i]) ** 2).sum(axis=1)
            labels[i] = int(np.argmin(d))
    return Partition(labels, n_groups, k)


def equivalence_partition(md: Microdata, k_declared: int = 1) -> Partition:
    """Group records sharing an identical quasi-identifier tuple.

    Groups are numbered by first occurrence.  This is the partition an
    observer can reconstruct from a masked table, and the fallback when a
    method (individual sorting) defines no grouping of its own.
    """
    qids = md.project(AttributeRole.QUASI_IDENTIFIER)
    _, first_pos, inverse = np.unique(qids, axis=0, return_index=True, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    ranks = np.argsort(np.argsort(first_pos, kind="stable"), kind="stable")
    labels = ranks[inverse]
    return Partition(labels, int(labels.max()) + 1, k_declared)


@dataclass(frozen=True)
class AnonymizationConfig:
    """Method choice plus shared and hybrid-only knobs.

    ``c_range`` overrides the cluster-count sweep for the quasi-identifier
    split ((1, 1) forces a single sub-table); ``class_c_range`` overrides
    the sweep that discovers confidential classes inside each sub-table.
    ``groups_count``, when set, fixes the number of seeded groups per
    sub-table and derives each sub-table's k as min_class_size //
    groups_count.  ``normalize_mode`` is "strict" (constant columns are
    errors) or "lenient" (constant columns normalize to zero).
    """

    method: str = "mdav"
    k: int = 3
    fuzz: FuzzinessParams = field(default_factory=FuzzinessParams)
    c_range: tuple[int, int] | None = None
    class_c_range: tuple[int, int] | None = None
    groups_count: int | None = None
    normalize_mode: str = "strict"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.groups_count is not None and self.groups_count < 1:
            raise ValueError("groups_count must be >= 1 when given")
        if self.normalize_mode not in ("strict", "lenient"):
            raise ValueError("normalize_mode must be 'strict' or 'lenient'")


@dataclass(frozen=True)
class SubStructure:
    """One sub-table of the hybrid pipeline: its rows, classes, and group count."""

    row_ids: tuple[int, ...]
    class_labels: tuple[int, ...]  # aligned with row_ids, local class ids
    n_groups: int
    k_used: int

    @property
    def size(self) -> int:
        return len(self.row_ids)

    @property
    def n_classes(self) -> int:
        return len(set(self.class_labels))

    def class_sizes(self) -> list[int]:
        counts = np.bincount(np.asarray(self.class_labels, dtype=np.int64))
        return [int(c) for c in counts if c > 0]


@dataclass(frozen=True)
class AnonymizedResult:
    """Masked table plus the grouping that produced it.

    ``sub_structure`` is populated only by the hybrid method; baseline
    methods leave it None.
    """

    masked: Microdata
    partition: Partition
    method: str
    k: int
    sub_structure: tuple[SubStructure, ...] | None = None

    def structure_dict(self) -> dict:
        groups = []
        for g in range(self.partition.n_groups):
            members = self.partition.members(g)
            entry: dict = {"size": int(members.size)}
            if self.sub_structure is not None:
                entry["class_counts"] = self._class_counts(members)
            groups.append(entry)
        doc = {"labels": self.partition.labels.tolist(), "groups": groups}
        if self.sub_structure is not None:
            doc["subs"] = [
                {"size": s.size, "cs": s.n_classes, "class_sizes": s.class_sizes()}
                for s in self.sub_structure
            ]
        return doc

    def _class_counts(self, members: np.ndarray) -> dict:
        by_row: dict[int, int] = {}
        for sub in self.sub_structure:
            by_row.update(zip(sub.row_ids, sub.class_labels))
        counts: dict[str, int] = {}
        for r in members:
            cls = str(by_row[int(r)])
            counts[cls] = counts.get(cls, 0) + 1
        return counts


def _normalized_qids(md: Microdata, mode: str) -> np.ndarray:
    norm = min_max_normalize(md, column_stats(md), mode)
    return norm.project(AttributeRole.QUASI_IDENTIFIER)


def _discover_classes(conf_sub: np.ndarray, config: AnonymizationConfig) -> np.ndarray:
    """Cluster a sub-table's confidential attributes into classes.

    Falls back to a single class when the sub-table is too small or every
    candidate clustering is degenerate (e.g. identical values).
    """
    n_sub = conf_sub.shape[0]
    if n_sub < 2:
        return np.zeros(n_sub, dtype=np.int64)
    if config.class_c_range is not None:
        c_min, c_max = config.class_c_range
    else:
        c_min, c_max = default_c_range(n_sub)
    c_max = min(c_max, n_sub)
    if c_min > c_max:
        return np.zeros(n_sub, dtype=np.int64)
    try:
        _, labels = select_partition(conf_sub, (c_min, c_max), config.fuzz)
    except DegenerateModelError:
        return np.zeros(n_sub, dtype=np.int64)
    return labels


def hybrid_anonymize(md: Microdata, config: AnonymizationConfig) -> AnonymizedResult:
    """Diversity-preserving microaggregation (method name ``hm_pfsom``).

    Splits the table into sub-tables by clustering the normalized
    quasi-identifiers, discovers confidential classes within each
    sub-table, builds diversity-constrained groups per sub-table, then
    masks quasi-identifiers with exact group means in original units.

    A sub-table smaller than k * n_classes collapses to a single group; a
    sub-table with some class smaller than k (but room for one diverse
    group) raises :class:`ClassTooSmallError` naming the sub-table.
    """
    n = md.n
    k = config.k
    if config.groups_count is None and n < 2 * k:
        raise KTooLargeError(k, n // 2, "the hybrid method needs n >= 2k")
    norm = min_max_normalize(md, column_stats(md), config.normalize_mode)
    qids_n = norm.project(AttributeRole.QUASI_IDENTIFIER)
    conf_n = norm.project(AttributeRole.CONFIDENTIAL)

    if config.c_range is not None and tuple(config.c_range) == (1, 1):
        sub_labels = np.zeros(n, dtype=np.int64)
        n_subs = 1
    else:
        model, sub_labels = select_partition(qids_n, config.c_range, config.fuzz)
        n_subs = model.n_clusters

    global_labels = np.full(n, -1, dtype=np.int64)
    next_gid = 0
    subs: list[SubStructure] = []
    for s in range(n_subs):
        ridx = np.flatnonzero(sub_labels == s)
        class_idx = _discover_classes(conf_n[ridx], config)
        cs = int(class_idx.max()) + 1
        class_sizes = np.bincount(class_idx, minlength=cs)
        if config.groups_count is not None:
            k_sub = int(class_sizes.min()) // config.groups_count
            if k_sub < 1:
                raise KTooLargeError(
                    config.groups_count, int(class_sizes.min()),
                    f"groups_count exceeds the smallest class of sub-microdata {s}",
                )
        else:
            k_sub = k
        if ridx.size < k_sub * cs:
            # too few records for even one diverse group: keep the sub-table whole
            part = Partition(np.zeros(ridx.size, dtype=np.int64), 1, max(1, min(k_sub, ridx.size)))
        else:
            try:
                part = diversity_partition(qids_n[ridx], class_idx, k_sub)
            except ClassTooSmallError as exc:
                raise ClassTooSmallError(k_sub, exc.max_feasible_k, sub_index=s) from None
        global_labels[ridx] = part.labels + next_gid
        next_gid += part.n_groups
        subs.append(SubStructure(
            row_ids=tuple(int(r) for r in ridx),
            class_labels=tuple(int(c) for c in class_idx),
            n_groups=part.n_groups,
            k_used=k_sub,
        ))
    partition = Partition(global_labels, next_gid, k)
    masked = centroid_replace(md, partition)
    return AnonymizedResult(masked=masked, partition=partition, method="hm_pfsom",
                            k=k, sub_structure=tuple(subs))


def anonymize(md: Microdata, config: AnonymizationConfig) -> AnonymizedResult:
    """Run one anonymization method end to end on a schema-typed table."""
    n = md.n
    if config.method == "hm_pfsom":
        return hybrid_anonymize(md, config)
    if config.k > n:
        raise KTooLargeError(config.k, n)
    if config.method == "individual_sorting":
        masked = individual_sorting_mask(md, config.k)
        return AnonymizedResult(masked=masked,
                                partition=equivalence_partition(masked),
                                method=config.method, k=config.k)
    qids_n = _normalized_qids(md, config.normalize_mode)
    if config.method == "mdav":
        part = mdav_partition(qids_n, config.k)
    elif config.method == "single_axis_zscore":
        part = single_axis_partition(qids_n, config.k, "zscore_sum")
    else:  # single_axis_pca
        part = single_axis_partition(qids_n, config.k, "first_pc")
    masked = centroid_replace(md, part)
    return AnonymizedResult(masked=masked, partition=part, method=config.method, k=config.k)


class Microaggregation(BaseEstimator):
    """Scikit-learn-style masker over plain matrices.

    Treats every column of X as a quasi-identifier.  ``fit`` computes the
    grouping on X itself (microaggregation is transductive, so there is no
    out-of-sample ``transform``); ``fit_transform`` returns the masked
    matrix and ``fit_predict`` the group labels.

    Methods: ``mdav``, ``individual_sorting``, ``single_axis_zscore``,
    ``single_axis_pca``.  Attributes after ``fit``: ``labels_`` (None for
    individual sorting), ``masked_``, ``n_features_in_``.
    """

    def __init__(self, k=3, method="mdav"):
        self.k = k
        self.method = method

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if self.method not in METHODS or self.method == "hm_pfsom":
            raise ValueError(
                f"method must be one of {tuple(m for m in METHODS if m != 'hm_pfsom')}; "
                f"the hybrid method needs attribute roles, use anonymize()"
            )
        k = int(self.k)
        n = X.shape[0]
        if not 1 <= k <= n:
            raise ValueError(f"k must be in [1, {n}], got {k}")
        if self.method == "individual_sorting":
            masked = np.array(X, copy=True)
            for col in range(X.shape[1]):
                values = X[:, col]
                order = np.argsort(values, kind="stable")
                for lo, hi in _chunk_bounds(n, k):
                    members = order[lo:hi]
                    masked[members, col] = math.fsum(values[members]) / members.size
            self.labels_ = None
        else:
            if self.method == "mdav":
                part = mdav_partition(X, k)
            elif self.method == "single_axis_zscore":
                part = single_axis_partition(X, k, "zscore_sum")
            else:
                part = single_axis_partition(X, k, "first_pc")
            masked = np.array(X, copy=True)
            for g in range(part.n_groups):
                members = part.members(g)
                for col in range(X.shape[1]):
                    masked[members, col] = math.fsum(X[members, col]) / members.size
            self.labels_ = part.labels
            self.partition_ = part
        self.masked_ = masked
        self.n_features_in_ = X.shape[1]
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).masked_

    def fit_predict(self, X, y=None):
        self.fit(X)
        if self.labels_ is None:
            raise ValueError("individual_sorting masks columns independently "
                             "and defines no record grouping")
        return self.labels_
