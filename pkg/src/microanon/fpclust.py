"""Fuzzy-possibilistic clustering with automatic cluster-count selection.

The clusterer maintains two coupled weight matrices over records and
clusters: memberships ``U`` (each record's weights sum to 1 across
clusters, so a record divides itself among clusters) and typicalities
``T`` (each cluster's weights sum to 1 across records, so a cluster ranks
how representative each record is of it).  Alternating updates:

* ``U[i, j] = [sum_k (d_ij / d_ik) ** (2 / (m_fuzz - 1))] ** -1`` over clusters k,
* ``T[i, j] = [sum_l (d_ij / d_lj) ** (2 / (eta - 1))] ** -1`` over records l,
* ``centers[j] = sum_i (U[i,j]**m_fuzz + T[i,j]**eta) * x_i / sum_i (...)``,

with ``d`` the Euclidean distance to a center.  Each full sweep is a
block-coordinate descent step on the cost
``J = sum_ij (U**m_fuzz + T**eta) * d**2``, so ``J`` never increases.

Cluster-count selection sweeps a candidate range and keeps the count with
the best partition-coefficient-and-exponential-separation (PCAES) score:

``sum_j sum_i U[i,j]**2 / u_M  -  sum_j exp(-min_{k != j} |v_j - v_k|^2 / beta_T)``

where ``u_M`` is the smallest per-cluster sum of squared memberships and
``beta_T`` is the mean squared distance of the centers from the data's
grand mean.  Higher is better: the first term rewards crisp, balanced
memberships, the second penalizes centers that crowd together at the
scale of the data's spread.

Everything here is deterministic: initial centers come from a
farthest-point sweep seeded at the record nearest the grand mean, with
all ties broken by the lowest row index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import DegenerateModelError

# Squared distances are floored here before any division so coincident
# points/centers yield large finite weights instead of NaNs.
DISTANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class FuzzinessParams:
    """Knobs for the alternating updates.

    ``m_fuzz`` and ``eta`` (> 1) control how soft memberships and
    typicalities are; iteration stops when no center moves more than
    ``tol`` or after ``max_iter`` sweeps.  ``seed`` is carried for API
    stability (synthesis, benchmarking); the default initializer is
    deterministic and does not consume it.
    """

    m_fuzz: float = 2.0
    eta: float = 2.0
    max_iter: int = 300
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if not self.m_fuzz > 1.0:
            raise ValueError(f"m_fuzz must be > 1, got {self.m_fuzz}")
        if not self.eta > 1.0:
            raise ValueError(f"eta must be > 1, got {self.eta}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.tol > 0.0:
            raise ValueError(f"tol must be > 0, got {self.tol}")


@dataclass(frozen=True)
class ClusterModel:
    """Fitted clustering state.

    ``membership`` rows sum to 1; ``typicality`` columns sum to 1.
    ``objective_history`` holds the cost after every sweep (non-increasing).
    """

    centers: np.ndarray          # (c, d)
    membership: np.ndarray       # (n, c), rows sum to 1
    typicality: np.ndarray       # (n, c), columns sum to 1
    n_clusters: int
    n_iter: int
    converged: bool
    objective_history: tuple[float, ...] = ()

    def __post_init__(self):
        for field in ("centers", "membership", "typicality"):
            arr = np.array(getattr(self, field), dtype=np.float64, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, field, arr)

    def to_dict(self) -> dict:
        return {
            "centers": self.centers.tolist(),
            "membership": self.membership.tolist(),
            "typicality": self.typicality.tolist(),
            "n_clusters": int(self.n_clusters),
            "n_iter": int(self.n_iter),
            "converged": bool(self.converged),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ClusterModel":
        return cls(
            centers=np.asarray(doc["centers"], dtype=np.float64),
            membership=np.asarray(doc["membership"], dtype=np.float64),
            typicality=np.asarray(doc["typicality"], dtype=np.float64),
            n_clusters=int(doc["n_clusters"]),
            n_iter=int(doc["n_iter"]),
            converged=bool(doc["converged"]),
        )


def _as_matrix(data) -> np.ndarray:
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"data must be a 2-D matrix, got ndim={X.ndim}")
    if X.shape[0] < 1:
        raise ValueError("data must contain at least one record")
    if not np.isfinite(X).all():
        raise ValueError("data contains non-finite values")
    return X


def _sq_distances(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Floored squared Euclidean distances, shape (n, c)."""
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.maximum(d2, DISTANCE_FLOOR)


def _farthest_point_init(X: np.ndarray, c: int) -> np.ndarray:
    """Deterministic seeding: start at the record nearest the grand mean,
    then repeatedly add the record farthest from all chosen seeds."""
    grand = X.mean(axis=0)
    d_grand = ((X - grand) ** 2).sum(axis=1)
    chosen = [int(np.argmin(d_grand))]  # argmin takes the lowest index on ties
    min_d = ((X - X[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < c:
        min_d[chosen] = -1.0  # never re-pick a chosen row
        nxt = int(np.argmax(min_d))
        chosen.append(nxt)
        min_d = np.minimum(min_d, ((X - X[nxt]) ** 2).sum(axis=1))
    return X[chosen].copy()


def fp_cluster(data, n_clusters: int, params: FuzzinessParams | None = None) -> ClusterModel:
    """Run the alternating updates to a fixed point.

    Parameters
    ----------
    data : array-like of shape (n, d)
        Records to cluster; must be finite.
    n_clusters : int
        Number of clusters c, 1 <= c <= n.
    params : FuzzinessParams, optional
        Update knobs; defaults are m_fuzz=2, eta=2, max_iter=300, tol=1e-6.

    Returns
    -------
    ClusterModel
        Centers, membership and typicality matrices, iteration count,
        convergence flag, and the per-sweep cost trajectory.
    """
    X = _as_matrix(data)
    p = params or FuzzinessParams()
    n = X.shape[0]
    if not 1 <= n_clusters <= n:
        raise ValueError(f"n_clusters must be in [1, {n}], got {n_clusters}")

    mexp = 1.0 / (p.m_fuzz - 1.0)   # ratio-of-squared-distance exponents
    texp = 1.0 / (p.eta - 1.0)
    centers = _farthest_point_init(X, n_clusters)
    d2 = _sq_distances(X, centers)
    history: list[float] = []
    converged = False
    n_iter = 0
    U = T = None
    for n_iter in range(1, p.max_iter + 1):
        U = _memberships(d2, mexp)
        T = _typicalities(d2, texp)
        weights = U ** p.m_fuzz + T ** p.eta
        new_centers = (weights.T @ X) / weights.sum(axis=0)[:, None]
        movement = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
        centers = new_centers
        d2 = _sq_distances(X, centers)
        history.append(float((weights * d2).sum()))
        if movement < p.tol:
            converged = True
            break
    # final U/T consistent with the final centers
    U = _memberships(d2, mexp)
    T = _typicalities(d2, texp)
    return ClusterModel(
        centers=centers,
        membership=U,
        typicality=T,
        n_clusters=n_clusters,
        n_iter=n_iter,
        converged=converged,
        objective_history=tuple(history),
    )


def _memberships(d2: np.ndarray, mexp: float) -> np.ndarray:
    w = d2 ** (-mexp)
    return w / w.sum(axis=1, keepdims=True)


def _typicalities(d2: np.ndarray, texp: float) -> np.ndarray:
    w = d2 ** (-texp)
    return w / w.sum(axis=0, keepdims=True)


def hard_labels(data, centers: np.ndarray) -> np.ndarray:
    """Nearest-center assignment; ties go to the lowest cluster index."""
    X = _as_matrix(data)
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1)


def pcaes(data, model: ClusterModel) -> float:
    """PCAES validity score of a fitted model on its data (higher is better).

    Compactness is the summed squared membership mass normalized by the
    per-cluster share n/c (so a maximally crisp, balanced partition scores
    exactly c); each cluster then pays an exponential separation penalty
    exp(-g/beta) where g is the squared distance to its nearest other
    center and beta the mean squared distance of centers from the data's
    grand mean.  Splitting a genuine cluster drives the penalty toward 1
    per affected cluster while gaining little compactness, so inflated
    cluster counts score lower.

    Raises
    ------
    ValueError
        If the model has fewer than two clusters.
    DegenerateModelError
        If all centers sit on the data's grand mean (zero separation scale).
    """
    X = _as_matrix(data)
    c = model.n_clusters
    if c < 2:
        raise ValueError(f"PCAES needs at least 2 clusters, got {c}")
    U = model.membership
    centers = model.centers
    n = U.shape[0]
    compactness = float((U ** 2).sum()) * c / n
    grand = X.mean(axis=0)
    beta_t = float(((centers - grand) ** 2).sum()) / c
    if beta_t <= 0.0:
        raise DegenerateModelError("all centers coincide with the grand mean; "
                                   "no separation scale")
    gaps = ((centers[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(gaps, np.inf)
    nearest = gaps.min(axis=1)
    separation = float(np.exp(-nearest / beta_t).sum())
    return compactness - separation


def _prune_empty(model: ClusterModel, labels: np.ndarray) -> tuple[ClusterModel, np.ndarray]:
    """Drop clusters no record hardens to; renormalize membership rows."""
    keep = np.flatnonzero(np.bincount(labels, minlength=model.n_clusters) > 0)
    if keep.size == model.n_clusters:
        return model, labels
    U = model.membership[:, keep]
    U = U / U.sum(axis=1, keepdims=True)
    T = model.typicality[:, keep]
    pruned = ClusterModel(
        centers=model.centers[keep],
        membership=U,
        typicality=T,
        n_clusters=int(keep.size),
        n_iter=model.n_iter,
        converged=model.converged,
        objective_history=model.objective_history,
    )
    relabel = np.full(model.n_clusters, -1, dtype=np.int64)
    relabel[keep] = np.arange(keep.size)
    return pruned, relabel[labels]


def default_c_range(n: int) -> tuple[int, int]:
    """Candidate cluster counts swept by default: [2, ceil(sqrt(n))], capped at n."""
    return 2, max(2, min(n, math.ceil(math.sqrt(n))))


def select_partition(data, c_range: tuple[int, int] | None = None,
                     params: FuzzinessParams | None = None,
                     ) -> tuple[ClusterModel, np.ndarray]:
    """Sweep cluster counts, score each fit with PCAES, keep the best.

    Returns the winning model (empty clusters pruned) and its hard labels.
    Ties prefer the smallest cluster count.  Raises
    :class:`DegenerateModelError` when every candidate is degenerate.
    """
    X = _as_matrix(data)
    n = X.shape[0]
    if c_range is None:
        c_min, c_max = default_c_range(n)
    else:
        c_min, c_max = int(c_range[0]), int(c_range[1])
    if not 2 <= c_min <= c_max <= n:
        raise ValueError(
            f"c_range must satisfy 2 <= c_min <= c_max <= n={n}, got ({c_min}, {c_max})"
        )
    best: tuple[float, ClusterModel, np.ndarray] | None = None
    for c in range(c_min, c_max + 1):
        model = fp_cluster(X, c, params)
        labels = hard_labels(X, model.centers)
        model, labels = _prune_empty(model, labels)
        if model.n_clusters < 2:
            continue
        try:
            score = pcaes(X, model)
        except DegenerateModelError:
            continue
        if best is None or score > best[0]:
            best = (score, model, labels)
    if best is None:
        raise DegenerateModelError(
            f"no usable clustering in c_range ({c_min}, {c_max}); "
            "every candidate was degenerate"
        )
    return best[1], best[2]


class FuzzyPossibilisticClustering(BaseEstimator, ClusterMixin):
    """Scikit-learn-style front end for the fuzzy-possibilistic clusterer.

    With ``n_clusters`` set, fits that many clusters; with ``n_clusters=None``
    the cluster count is chosen by the PCAES sweep over ``[c_min, c_max]``
    (``c_max=None`` means ``ceil(sqrt(n))``).

    Attributes (after ``fit``): ``cluster_centers_``, ``membership_``,
    ``typicality_``, ``labels_``, ``n_clusters_``, ``n_iter_``,
    ``converged_``, and ``pcaes_score_`` when a sweep ran.
    """

    def __init__(self, n_clusters=None, c_min=2, c_max=None,
                 m_fuzz=2.0, eta=2.0, max_iter=300, tol=1e-6, seed=0):
        self.n_clusters = n_clusters
        self.c_min = c_min
        self.c_max = c_max
        self.m_fuzz = m_fuzz
        self.eta = eta
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed

    def _params(self) -> FuzzinessParams:
        return FuzzinessParams(m_fuzz=self.m_fuzz, eta=self.eta,
                               max_iter=self.max_iter, tol=self.tol, seed=self.seed)

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        params = self._params()
        if self.n_clusters is not None:
            model = fp_cluster(X, int(self.n_clusters), params)
            labels = hard_labels(X, model.centers)
            model, labels = _prune_empty(model, labels)
        else:
            c_max = self.c_max if self.c_max is not None else default_c_range(X.shape[0])[1]
            model, labels = select_partition(X, (int(self.c_min), int(c_max)), params)
            self.pcaes_score_ = pcaes(X, model)
        self.cluster_centers_ = model.centers
        self.membership_ = model.membership
        self.typicality_ = model.typicality
        self.labels_ = labels
        self.n_clusters_ = model.n_clusters
        self.n_iter_ = model.n_iter
        self.converged_ = model.converged
        self.model_ = model
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_array(X, dtype=np.float64)
        return hard_labels(X, self.cluster_centers_)
