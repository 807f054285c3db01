"""Weighted point sets, queries, and the clustering cost they induce.

The quantity everything else builds on is the decomposable k-means cost

    cost(X, Q) = sum_x mu(x) * f_Q(x),      f_Q(x) = min_{q in Q} ||x - q||^2,

evaluated either in plain squared-Euclidean geometry or under a Mahalanobis
inner product ``(x-q)^T A (x-q)``, which reduces exactly to the Euclidean
case through the whitening map x -> Lx with A = L^T L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "WeightedDataset",
    "Query",
    "CostModel",
    "point_cost",
    "total_cost",
    "whiten",
    "nearest_centers",
]


def _validated_points(points, name: str = "points") -> np.ndarray:
    arr = np.array(points, dtype=np.float64, copy=True)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got ndim={arr.ndim}")
    if arr.shape[0] < 1:
        raise ValueError(f"{name} must contain at least one row")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite (no NaN/Inf)")
    arr.flags.writeable = False
    return arr


class WeightedDataset:
    """An immutable weighted point set (mu, X).

    Parameters
    ----------
    points : array-like of shape (n, d)
        Point coordinates. A 1-D array is treated as n points in R^1.
    weights : array-like of shape (n,), optional
        Nonnegative finite weights, at least one positive. Defaults to the
        uniform weighting 1/n.
    """

    __slots__ = ("points", "weights")

    def __init__(self, points, weights=None):
        pts = _validated_points(points)
        n = pts.shape[0]
        if weights is None:
            w = np.full(n, 1.0 / n)
        else:
            w = np.array(weights, dtype=np.float64, copy=True).reshape(-1)
            if w.shape[0] != n:
                raise ValueError(f"weights length {w.shape[0]} does not match n={n}")
            if not np.all(np.isfinite(w)):
                raise ValueError("weights must be finite")
            if np.any(w < 0):
                raise ValueError("weights must be nonnegative")
            if not np.any(w > 0):
                raise ValueError("at least one weight must be positive")
        w.flags.writeable = False
        self.points = pts
        self.weights = w

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    @property
    def has_uniform_weights(self) -> bool:
        # Exact equality on purpose: np.full(n, 1/n) round-trips bit-identically
        # through the serializers, and "close to uniform" has no privileged scale.
        return bool(np.all(self.weights == self.weights[0]))

    def subset(self, indices, weights=None) -> "WeightedDataset":
        """New dataset from rows ``indices``, with ``weights`` or the originals."""
        idx = np.asarray(indices, dtype=np.intp)
        w = self.weights[idx] if weights is None else weights
        return WeightedDataset(self.points[idx], w)

    def __repr__(self) -> str:
        return f"WeightedDataset(n={self.n}, d={self.d}, total_weight={self.total_weight:g})"


class Query:
    """A candidate solution: a set of k centers in R^d (k >= 1)."""

    __slots__ = ("centers",)

    def __init__(self, centers):
        self.centers = _validated_points(centers, name="centers")

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    def __repr__(self) -> str:
        return f"Query(k={self.k}, d={self.d})"


def as_query(query) -> Query:
    return query if isinstance(query, Query) else Query(query)


@dataclass(frozen=True)
class CostModel:
    """Distance model for f_Q: squared Euclidean, or Mahalanobis via an SPD matrix.

    The Mahalanobis form (x-q)^T A (x-q) is handled by factoring A = L^T L once
    (Cholesky) and mapping all inputs through x -> Lx, after which every
    computation runs in squared-Euclidean geometry. The reduction is exact up
    to floating-point roundoff.
    """

    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.matrix is not None:
            a = np.array(self.matrix, dtype=np.float64, copy=True)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise ValueError("Mahalanobis matrix must be square")
            if not np.all(np.isfinite(a)):
                raise ValueError("Mahalanobis matrix must be finite")
            if not np.allclose(a, a.T):
                raise ValueError("Mahalanobis matrix must be symmetric")
            try:
                lower = np.linalg.cholesky(a)
            except np.linalg.LinAlgError as exc:
                raise ValueError("Mahalanobis matrix must be positive definite") from exc
            a.flags.writeable = False
            factor = np.ascontiguousarray(lower.T)  # A = factor^T @ factor
            factor.flags.writeable = False
            object.__setattr__(self, "matrix", a)
            object.__setattr__(self, "_factor", factor)
        else:
            object.__setattr__(self, "_factor", None)

    @classmethod
    def squared_euclidean(cls) -> "CostModel":
        return cls()

    @classmethod
    def mahalanobis(cls, matrix) -> "CostModel":
        return cls(matrix=matrix)

    @property
    def is_euclidean(self) -> bool:
        return self.matrix is None

    def transform(self, points: np.ndarray) -> np.ndarray:
        """Map points into the geometry where distances are squared Euclidean."""
        if self.matrix is None:
            return points
        if points.shape[-1] != self.matrix.shape[0]:
            raise ValueError(
                f"dimension mismatch: points have d={points.shape[-1]}, "
                f"model expects d={self.matrix.shape[0]}"
            )
        return points @ self._factor.T


_EUCLIDEAN = CostModel()


def sq_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Exact (n, k) squared Euclidean distances, one difference per center.

    Computed from explicit differences rather than the norm expansion so the
    result is nonnegative by construction and reproducible in index order.
    """
    n = points.shape[0]
    k = centers.shape[0]
    out = np.empty((n, k))
    for j in range(k):
        diff = points - centers[j]
        out[:, j] = np.einsum("ij,ij->i", diff, diff)
    return out


def nearest_centers(points: np.ndarray, query, model: CostModel = _EUCLIDEAN):
    """Per-point nearest-center cost and index (ties go to the lowest index).

    Returns
    -------
    costs : ndarray of shape (n,)
        f_Q(x) for each point.
    assign : ndarray of shape (n,)
        Index into ``query.centers`` of the closest center.
    """
    q = as_query(query)
    if points.shape[1] != q.d:
        raise ValueError(f"dimension mismatch: points have d={points.shape[1]}, query has d={q.d}")
    pts = model.transform(points)
    ctr = model.transform(q.centers)
    d2 = sq_distances(pts, ctr)
    assign = np.argmin(d2, axis=1)  # argmin returns the first minimum: lowest index wins ties
    costs = d2[np.arange(points.shape[0]), assign]
    return costs, assign


def point_cost(x, query, model: CostModel = _EUCLIDEAN):
    """f_Q(x) and the index of the nearest center for a single point."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if not np.all(np.isfinite(x)):
        raise ValueError("point must be finite")
    costs, assign = nearest_centers(x, query, model)
    return float(costs[0]), int(assign[0])


def total_cost(dataset: WeightedDataset, query, model: CostModel = _EUCLIDEAN,
               compensated: bool = False) -> float:
    """Weighted clustering cost sum_x mu(x) f_Q(x).

    ``compensated=True`` switches the final reduction to exact summation
    (math.fsum) for verification work; the default is the plain index-order
    dot product, which is bit-reproducible for a fixed build.
    """
    costs, _ = nearest_centers(dataset.points, query, model)
    terms = dataset.weights * costs
    if compensated:
        return float(math.fsum(terms.tolist()))
    return float(np.sum(terms))


def whiten(dataset: WeightedDataset, matrix) -> WeightedDataset:
    """Rewrite a Mahalanobis instance as a Euclidean one: x -> Lx, A = L^T L."""
    model = CostModel.mahalanobis(matrix)
    return WeightedDataset(model.transform(dataset.points), dataset.weights)
