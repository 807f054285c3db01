"""Per-point sensitivity: exact values for k=1 and an upper bound for general k.

The sensitivity of a point is the largest fraction of the clustering cost it
can be responsible for over all candidate solutions,

    sigma(x) = sup_Q  f_Q(x) / sum_x' mu(x') f_Q(x'),

and importance-sampling with per-point probabilities proportional to
mu(x) s(x), for any upper bound s >= sigma, is what turns a sample into a
coreset. For k = 1 the supremum has a closed form. For general k it is
bounded through an (alpha, 1)-bicriteria solution B: with b_x the nearest
center, X_x its cluster, and cbar the mean quantization error of B,

    s(x) = 2 alpha d(x,b_x)^2 / cbar
         + 4 alpha (sum_{x' in X_x} mu' d(x',b_x)^2) / (W_x cbar)
         + 4 / W_x

on weights normalized to total mass 1 (W_x is the cluster's mass; with
uniform weights 1/n this is the familiar counts form with 4n/|X_x| last
term). Summing mu(x) s(x) telescopes exactly to

    total = 6 alpha + 4 * (number of nonempty clusters),

a data-independent conservation law the tests pin to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import CostModel, Query, WeightedDataset, as_query, nearest_centers, sq_distances
from .seeding import Bicriteria

__all__ = [
    "SensitivityProfile",
    "sensitivity_bound",
    "exact_sensitivity_1means",
    "grid_sensitivity_oracle",
    "total_sensitivity_bound",
]

_EUCLIDEAN = CostModel()


@dataclass(frozen=True)
class SensitivityProfile:
    """Sensitivity upper bounds s(x) plus the cluster geometry they came from."""

    values: np.ndarray            # s(x), zero for zero-weight points
    assignment: np.ndarray        # nearest seed center per point
    cluster_mass: np.ndarray      # normalized weight per center's cluster
    cluster_counts: np.ndarray    # point count per center's cluster
    cluster_costs: np.ndarray     # normalized weighted d^2 per cluster
    mean_seed_cost: float         # cbar: normalized cost of the seed centers
    alpha: float
    total: float                  # sum_x mu(x) s(x) on normalized weights
    algorithm2_constants: bool = False

    @property
    def nonempty_clusters(self) -> int:
        return int(np.count_nonzero(self.cluster_counts))

    def sampling_distribution(self, dataset: WeightedDataset) -> np.ndarray:
        """The coreset sampling law q.

        For uniform weights this is s / sum(s); in general q(x) is
        proportional to mu(x) s(x). Both normalize to exactly the same law,
        the uniform special case just avoids multiplying 1/n back in.
        """
        if dataset.has_uniform_weights:
            return self.values / np.sum(self.values)
        mass = dataset.weights * self.values
        return mass / np.sum(mass)


def _require_weight_mode(dataset: WeightedDataset, allow_weighted: bool) -> None:
    if not dataset.has_uniform_weights and not allow_weighted:
        raise ValueError(
            "sensitivity_bound is stated for uniform weights 1/n; pass "
            "allow_weighted=True to use the generalized weighted form"
        )


def sensitivity_bound(dataset: WeightedDataset, seeds, alpha: float | None = None,
                      *, allow_weighted: bool = False,
                      algorithm2_constants: bool = False,
                      model: CostModel = _EUCLIDEAN) -> SensitivityProfile:
    """Sensitivity upper bound from a bicriteria seed set.

    Parameters
    ----------
    dataset : WeightedDataset
    seeds : Bicriteria or Query or array-like
        The seed centers. When a ``Bicriteria`` is given its alpha is used;
        otherwise ``alpha`` must be supplied explicitly.
    alpha : float, optional
        Approximation factor the bound should be stated for.
    allow_weighted : bool
        Opt-in for non-uniform weights (the generalized mass form).
    algorithm2_constants : bool
        Use coefficients (alpha, 2 alpha) for the first two terms instead of
        the default (2 alpha, 4 alpha). The last term is 4/W_x either way,
        and the conservation law becomes 3 alpha + 4 * clusters.
    """
    _require_weight_mode(dataset, allow_weighted)
    if isinstance(seeds, Bicriteria):
        centers = seeds.centers
        alpha = seeds.alpha if alpha is None else float(alpha)
    else:
        centers = as_query(seeds)
        if alpha is None:
            raise ValueError("alpha is required when seeds is not a Bicriteria")
        alpha = float(alpha)
    if alpha <= 0:
        raise ValueError("alpha must be positive")

    w = dataset.weights
    mu = w / np.sum(w)
    d2, assign = nearest_centers(dataset.points, centers, model)

    n_centers = centers.k
    cluster_mass = np.bincount(assign, weights=mu, minlength=n_centers)
    cluster_counts = np.bincount(assign, minlength=n_centers)
    cluster_costs = np.bincount(assign, weights=mu * d2, minlength=n_centers)
    cbar = float(np.sum(mu * d2))

    mass_x = cluster_mass[assign]
    cost_x = cluster_costs[assign]

    c1, c2 = (alpha, 2.0 * alpha) if algorithm2_constants else (2.0 * alpha, 4.0 * alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        quad = np.where(cbar > 0, c1 * d2 / cbar, 0.0)
        spread = np.where((cbar > 0) & (mass_x > 0), c2 * cost_x / (mass_x * cbar), 0.0)
        size = np.where(mass_x > 0, 4.0 / mass_x, 0.0)
    values = quad + spread + size
    values[mu == 0] = 0.0  # zero-mass points carry no sensitivity mass

    total = float(np.sum(mu * values))
    return SensitivityProfile(
        values=values, assignment=assign, cluster_mass=cluster_mass,
        cluster_counts=cluster_counts, cluster_costs=cluster_costs,
        mean_seed_cost=cbar, alpha=alpha, total=total,
        algorithm2_constants=algorithm2_constants,
    )


def total_sensitivity_bound(k: int, n_clusters: int | None = None,
                            algorithm2_constants: bool = False) -> float:
    """The conservation-law value of the bound's total: 6 alpha + 4 * clusters.

    ``n_clusters`` defaults to k (every seed center serving a nonempty
    cluster, the generic case for distinct data).
    """
    from .seeding import alpha_for

    clusters = k if n_clusters is None else n_clusters
    lead = 3.0 if algorithm2_constants else 6.0
    return lead * alpha_for(k) + 4.0 * clusters


def exact_sensitivity_1means(dataset: WeightedDataset) -> np.ndarray:
    """Closed-form sensitivities for k = 1 under squared Euclidean cost.

    Like every sensitivity here, the cost share is measured against weights
    normalized to total mass 1 (the values are invariant to a global weight
    rescaling, and for uniform 1/n this is the literal definition). With m
    the weighted mean and vbar = sum_x mu(x) ||x - m||^2 on that scale,

        sigma(x) = 1 + ||x - m||^2 / vbar,

    attained (in 1-D) at q = m + vbar / (m - x). The weighted total
    sum_x mu(x) sigma(x) is identically 2.
    """
    mu = dataset.weights / np.sum(dataset.weights)
    mean = mu @ dataset.points
    diff = dataset.points - mean
    sq = np.einsum("ij,ij->i", diff, diff)
    vbar = float(np.dot(mu, sq))
    if vbar == 0.0:
        raise ValueError(
            "zero within-set variance: every point has the same sensitivity "
            "(a full share, 1.0, of any query's cost); sampling degenerates "
            "to the weight distribution and no closed-form ratio exists"
        )
    return 1.0 + sq / vbar


def grid_sensitivity_oracle(dataset: WeightedDataset, k: int, queries,
                            model: CostModel = _EUCLIDEAN) -> np.ndarray:
    """Empirical lower bound on sigma(x): max cost share over a finite grid.

    Every grid query must have exactly k centers. Queries with zero total
    cost pin nothing (the share is undefined) and are skipped; if all of them
    are degenerate that way, raises.
    """
    qs = [as_query(q) for q in queries]
    if not qs:
        raise ValueError("query grid is empty")
    for q in qs:
        if q.k != k:
            raise ValueError(f"grid query has {q.k} centers, expected k={k}")
    mu = dataset.weights / np.sum(dataset.weights)
    best = np.zeros(dataset.n)
    used = 0
    for q in qs:
        d2, _ = nearest_centers(dataset.points, q, model)
        denom = float(np.dot(mu, d2))
        if denom == 0.0:
            continue
        np.maximum(best, d2 / denom, out=best)
        used += 1
    if used == 0:
        raise ValueError("every grid query has zero cost; the share ratio is undefined")
    return best
