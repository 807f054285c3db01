"""Scikit-learn estimator facade over the functional core.

Both estimators follow the fit/attributes contract: construction stores
parameters untouched, ``fit`` validates input and does the work, fitted state
lands in trailing-underscore attributes. Unweighted input is treated as
weight 1.0 per row (the sklearn convention), so ``inertia_`` is a plain sum
of squared distances and coreset weights read as effective row counts.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from ._util import ensure_rng
from .builder import build_details
from .data import CostModel, WeightedDataset, nearest_centers, sq_distances
from .solver import lloyd_best_of, partition_count, ptas_exhaustive

__all__ = ["CoresetSampler", "CoresetKMeans"]


def _as_dataset(X, sample_weight):
    X = check_array(X, dtype=np.float64)
    if sample_weight is None:
        w = np.ones(X.shape[0])
    else:
        w = np.asarray(sample_weight, dtype=np.float64).reshape(-1)
    return WeightedDataset(X, w)


class CoresetSampler(BaseEstimator):
    """Reduce a dataset to a weighted coreset for k-means.

    Parameters mirror the functional builder: ``m`` fixes the number of draws
    directly, otherwise ``epsilon`` picks it through the sample-size recipe.
    ``distribution="uniform"`` is the baseline sampler with no guarantee.

    Attributes after ``fit``: ``coreset_`` (the full artifact with
    provenance), ``coreset_points_`` / ``coreset_weights_`` / ``indices_``,
    ``sensitivities_`` and ``sampling_distribution_`` over the input rows,
    ``total_sensitivity_``, and ``n_features_in_``.
    """

    def __init__(self, k=8, *, m=None, epsilon=None, delta=0.1,
                 distribution="sensitivity", c_size=1.0, c_runs=3.0,
                 algorithm2_constants=False, merge_duplicates=True,
                 random_state=None):
        self.k = k
        self.m = m
        self.epsilon = epsilon
        self.delta = delta
        self.distribution = distribution
        self.c_size = c_size
        self.c_runs = c_runs
        self.algorithm2_constants = algorithm2_constants
        self.merge_duplicates = merge_duplicates
        self.random_state = random_state

    def fit(self, X, y=None, sample_weight=None):
        """Build the coreset; y is ignored (present for pipeline compatibility)."""
        data = _as_dataset(X, sample_weight)
        details = build_details(
            data, self.k, epsilon=self.epsilon, delta=self.delta, m=self.m,
            seed=self.random_state, distribution=self.distribution,
            allow_weighted=sample_weight is not None,
            c_size=self.c_size, c_runs=self.c_runs,
            algorithm2_constants=self.algorithm2_constants,
            merge_duplicates=self.merge_duplicates)
        self.n_features_in_ = data.d
        self.coreset_ = details.coreset
        self.coreset_points_ = details.coreset.points
        self.coreset_weights_ = details.coreset.weights
        self.indices_ = details.coreset.indices
        self.sampling_distribution_ = details.q
        self.sensitivities_ = None if details.profile is None else details.profile.values
        self.total_sensitivity_ = None if details.profile is None else details.profile.total
        return self

    def fit_transform(self, X, y=None, sample_weight=None):
        """Fit and return the coreset points; weights via ``coreset_weights_``."""
        return self.fit(X, y, sample_weight=sample_weight).coreset_points_


class CoresetKMeans(ClusterMixin, BaseEstimator):
    """k-means fitted on a coreset instead of the full data.

    ``fit`` builds the coreset, solves on it (``solver="auto"`` takes the
    exhaustive solver when the coreset's distinct rows fit under
    ``partition_cap``, Lloyd restarts otherwise), then labels the full input
    against the resulting centers. ``inertia_`` is the full-data weighted
    cost at ``cluster_centers_``, so it is directly comparable to what a
    full-data solver reports.
    """

    def __init__(self, n_clusters=8, *, m=None, epsilon=None, delta=0.1,
                 solver="auto", restarts=50, partition_cap=1_000_000,
                 random_state=None):
        self.n_clusters = n_clusters
        self.m = m
        self.epsilon = epsilon
        self.delta = delta
        self.solver = solver
        self.restarts = restarts
        self.partition_cap = partition_cap
        self.random_state = random_state

    def fit(self, X, y=None, sample_weight=None):
        data = _as_dataset(X, sample_weight)
        rng = ensure_rng(self.random_state)
        build_stream, solve_stream = rng.spawn(2)
        details = build_details(
            data, self.n_clusters, epsilon=self.epsilon, delta=self.delta,
            m=self.m, seed=build_stream,
            allow_weighted=sample_weight is not None)
        cdata = details.coreset.data

        solver = self.solver
        if solver == "auto":
            distinct = np.unique(cdata.points, axis=0).shape[0]
            solver = ("ptas" if partition_count(distinct, self.n_clusters)
                      <= self.partition_cap else "lloyd")
        if solver == "ptas":
            sol = ptas_exhaustive(cdata, self.n_clusters, self.partition_cap)
        elif solver == "lloyd":
            sol = lloyd_best_of(cdata, self.n_clusters, self.restarts, solve_stream)
        else:
            raise ValueError(f"unknown solver {solver!r}")

        costs, assign = nearest_centers(data.points, sol.query, CostModel())
        self.n_features_in_ = data.d
        self.coreset_ = details.coreset
        self.solution_ = sol
        self.solver_ = solver
        self.cluster_centers_ = sol.centers
        self.labels_ = assign
        self.inertia_ = float(np.dot(data.weights, costs))
        return self

    def _check_X(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features but the model was fitted "
                f"with {self.n_features_in_}")
        return X

    def predict(self, X):
        """Index of the nearest fitted center for each row."""
        X = self._check_X(X)
        _, assign = nearest_centers(X, self.solution_.query, CostModel())
        return assign

    def transform(self, X):
        """Distances (not squared) from each row to each fitted center."""
        X = self._check_X(X)
        return np.sqrt(sq_distances(X, self.cluster_centers_))

    def score(self, X, y=None, sample_weight=None):
        """Negative weighted cost at the fitted centers (higher is better)."""
        X = self._check_X(X)
        costs, _ = nearest_centers(X, self.solution_.query, CostModel())
        w = np.ones(X.shape[0]) if sample_weight is None else \
            np.asarray(sample_weight, dtype=np.float64).reshape(-1)
        return -float(np.dot(w, costs))
