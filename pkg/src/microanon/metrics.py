"""Utility-loss and disclosure-risk measures for masked microdata.

* :func:`information_loss` -- mean per-record, per-column absolute deviation
  scaled by sqrt(2) times each column's population standard deviation;
  also reported per 100 records.
* :func:`dbrl` -- distance-based record linkage: how many masked records an
  intruder with the original file links back correctly by nearest and
  second-nearest neighbour, plus the expected match count under random
  tie-breaking.
* :func:`group_sse` -- within-group sum of squared distances to the group
  centroid over a chosen attribute role.
* :func:`k_anonymity_check` -- smallest equivalence class under exact
  quasi-identifier tuple equality.
* :func:`diversity_check` -- does every group retain every confidential
  class present in its scope?

:func:`evaluate` bundles all of the above into one report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dataset import Microdata, column_stats
from .microagg import Partition, equivalence_partition
from .schema import AttributeRole
from .errors import DataError


class KAnonymityResult(NamedTuple):
    holds: bool
    k_max: int


@dataclass(frozen=True)
class DbrlCounts:
    """Linkage outcome over n masked records; the three counts sum to n."""

    linked: int
    second_nearest: int
    not_linked: int
    expected_matches: float


@dataclass(frozen=True)
class EvaluationReport:
    il: float
    il_normalized: float
    dbrl: DbrlCounts
    sse_per_group: tuple[float, ...]
    min_sse: float
    k_anonymous_at: int
    diversity_ok: bool | None

    def to_dict(self) -> dict:
        return {
            "il": self.il,
            "il_normalized": self.il_normalized,
            "linked": self.dbrl.linked,
            "second_nearest": self.dbrl.second_nearest,
            "not_linked": self.dbrl.not_linked,
            "expected_matches": self.dbrl.expected_matches,
            "sse_per_group": list(self.sse_per_group),
            "min_sse": self.min_sse,
            "k_anonymous_at": self.k_anonymous_at,
            "diversity_ok": self.diversity_ok,
        }


def _check_pair(original: Microdata, masked: Microdata, role: AttributeRole) -> tuple[np.ndarray, np.ndarray]:
    X = original.project(role)
    Xp = masked.project(role)
    if X.shape != Xp.shape:
        raise DataError(
            f"original and masked tables disagree on shape for role "
            f"'{role.value}': {X.shape} vs {Xp.shape}"
        )
    return X, Xp


class InformationLoss(NamedTuple):
    """Total scaled deviation and its percentage form (100 * il / n)."""

    il: float
    il_normalized: float


def information_loss(original: Microdata, masked: Microdata) -> InformationLoss:
    """Scaled absolute deviation between original and masked quasi-identifiers.

    Per record: the mean over quasi-identifier columns of
    ``|x - x'| / (sqrt(2) * S_j)`` with ``S_j`` the population standard
    deviation of the *original* column; summed over records.  Returns
    ``(il, il_normalized)`` with the latter 100 * il / n.  Invariant under
    any per-column affine rescaling applied to both tables.
    """
    X, Xp = _check_pair(original, masked, AttributeRole.QUASI_IDENTIFIER)
    stds = X.std(axis=0)
    if (stds == 0.0).any():
        cols = np.flatnonzero(stds == 0.0).tolist()
        raise DataError(f"zero-variance quasi-identifier column(s) {cols}; "
                        "information loss is undefined there")
    per_record = (np.abs(X - Xp) / (math.sqrt(2.0) * stds)).mean(axis=1)
    il = float(per_record.sum())
    return InformationLoss(il, 100.0 * il / original.n)


def dbrl(original: Microdata, masked: Microdata,
         role: AttributeRole = AttributeRole.QUASI_IDENTIFIER) -> DbrlCounts:
    """Distance-based record linkage between a masked table and its original.

    Both tables are min-max normalized with the *original* table's
    statistics; each masked record is then ranked against every original
    record by squared Euclidean distance.  A record counts as ``linked``
    when its own original is the unique nearest neighbour, as
    ``second_nearest`` when it is the unique runner-up, and otherwise as
    ``not_linked``.  ``expected_matches`` credits 1/|argmin set| whenever
    the record's own original ties for nearest.

    Constant original columns carry no linkage signal and are skipped.
    """
    role = AttributeRole(role)
    X, Xp = _check_pair(original, masked, role)
    mins = X.min(axis=0)
    span = X.max(axis=0) - mins
    keep = span > 0.0
    if not keep.any():
        raise DataError("every column in the linkage role is constant; "
                        "record linkage is undefined")
    Xn = (X[:, keep] - mins[keep]) / span[keep]
    Xpn = (Xp[:, keep] - mins[keep]) / span[keep]
    n = X.shape[0]
    linked = second = 0
    expected = 0.0
    # temp distance block is (rows, n); keep it around 2e6 cells
    block = max(1, 2_000_000 // max(1, n))
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        d2 = ((Xpn[lo:hi, None, :] - Xn[None, :, :]) ** 2).sum(axis=2)
        rows = np.arange(hi - lo)
        own = d2[rows, lo + rows]  # distance to the record's own original
        m1 = d2.min(axis=1)
        ties1 = d2 == m1[:, None]
        n_ties1 = ties1.sum(axis=1)
        in_first = own == m1
        expected += float((1.0 / n_ties1[in_first]).sum())
        linked += int((in_first & (n_ties1 == 1)).sum())
        m2 = np.where(ties1, np.inf, d2).min(axis=1)
        n_ties2 = (d2 == m2[:, None]).sum(axis=1)
        second += int((~in_first & (own == m2) & (n_ties2 == 1)).sum())
    return DbrlCounts(linked=linked, second_nearest=second,
                      not_linked=n - linked - second, expected_matches=expected)


class GroupSse(NamedTuple):
    """Per-group within-group squared deviation, plus the smallest of them."""

    per_group: tuple[float, ...]
    min_sse: float


def group_sse(md: Microdata, partition: Partition,
              role: AttributeRole = AttributeRole.CONFIDENTIAL,
              normalized: bool = False) -> GroupSse:
    """Within-group sum of squared distances to the group centroid.

    Measured over the columns of ``role`` (confidential by default), in
    raw units unless ``normalized`` puts every column on its [0, 1] min-max
    scale first.
    """
    if partition.n != md.n:
        raise ValueError(f"partition covers {partition.n} records but the table has {md.n}")
    V = md.project(AttributeRole(role))
    if normalized:
        mins = V.min(axis=0)
        span = V.max(axis=0) - mins
        span = np.where(span == 0.0, 1.0, span)
        V = (V - mins) / span
    sses = []
    for g in range(partition.n_groups):
        members = partition.members(g)
        centroid = V[members].mean(axis=0)
        sses.append(float(((V[members] - centroid) ** 2).sum()))
    return GroupSse(tuple(sses), min(sses))


def k_anonymity_check(masked: Microdata, k: int) -> KAnonymityResult:
    """Does every exact quasi-identifier tuple occur at least k times?

    ``k_max`` is the size of the smallest equivalence class, i.e. the
    largest k for which the table is k-anonymous.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    qids = masked.project(AttributeRole.QUASI_IDENTIFIER)
    _, counts = np.unique(qids, axis=0, return_counts=True)
    k_max = int(counts.min())
    return KAnonymityResult(holds=k_max >= k, k_max=k_max)


def diversity_check(md: Microdata, partition: Partition, class_labels,
                    scope_labels=None) -> bool:
    """True iff every group holds at least one member of every class in its scope.

    ``scope_labels`` partitions records into scopes (for the hybrid
    pipeline, the sub-table of each record); a group is only required to
    cover the classes present in its own scope.  Without scopes the whole
    table is one scope.
    """
    y = np.asarray(class_labels)
    if y.shape != (md.n,):
        raise ValueError("class_labels must have one entry per record")
    if partition.n != md.n:
        raise ValueError(f"partition covers {partition.n} records but the table has {md.n}")
    if scope_labels is None:
        scopes = np.zeros(md.n, dtype=np.int64)
    else:
        scopes = np.asarray(scope_labels)
        if scopes.shape != (md.n,):
            raise ValueError("scope_labels must have one entry per record")
    for g in range(partition.n_groups):
        members = partition.members(g)
        member_scopes = np.unique(scopes[members])
        scope_mask = np.isin(scopes, member_scopes)
        required = set(np.unique(y[scope_mask]).tolist())
        present = set(np.unique(y[members]).tolist())
        if not required <= present:
            return False
    return True


def evaluate(original: Microdata, masked: Microdata,
             partition: Partition | None = None,
             class_labels=None, scope_labels=None,
             k: int = 1) -> EvaluationReport:
    """Assemble the full utility/risk report for a masked table.

    Without an explicit ``partition`` the equivalence classes of the
    masked quasi-identifiers stand in for the groups.  ``diversity_ok``
    is only filled in when ``class_labels`` are supplied.
    """
    if partition is None:
        partition = equivalence_partition(masked)
    il, il_norm = information_loss(original, masked)
    linkage = dbrl(original, masked)
    sses, min_sse = group_sse(original, partition)
    anonymity = k_anonymity_check(masked, k)
    diversity = None
    if class_labels is not None:
        diversity = diversity_check(original, partition, class_labels, scope_labels)
    return EvaluationReport(
        il=il,
        il_normalized=il_norm,
        dbrl=linkage,
        sse_per_group=sses,
        min_sse=min_sse,
        k_anonymous_at=anonymity.k_max,
        diversity_ok=diversity,
    )
