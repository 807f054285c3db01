"""Adaptive seeding: D^2 sampling and the best-of-runs bicriteria solution.

A single D^2 pass picks the first center with probability proportional to the
point weights and every later center with probability proportional to
mu(x) * d(x, B)^2, the weighted squared distance to the centers chosen so
far. In expectation a full pass is an (alpha, 1)-approximation of the optimal
k-means cost with alpha = 16 (log2 k + 2); taking the best of
ceil(c_runs * ln(1/delta)) independent passes boosts the expectation bound to
a success probability of at least 1 - delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import draw_categorical, ensure_rng
from .data import CostModel, Query, WeightedDataset, total_cost

__all__ = ["Bicriteria", "alpha_for", "d2_sample", "d2_sample_indices", "bicriteria"]

_EUCLIDEAN = CostModel()


def alpha_for(k: int) -> float:
    """Approximation factor 16 (log2 k + 2) guaranteed by a D^2 pass."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 16.0 * (math.log2(k) + 2.0)


@dataclass(frozen=True)
class Bicriteria:
    """Seed centers with the provenance the sensitivity bound needs.

    Attributes
    ----------
    centers : Query
        Exactly k centers, all of them rows of the input dataset.
    alpha : float
        The approximation factor 16 (log2 k + 2) the bound is stated for.
    seed_cost : float
        cost(X, centers) of the winning run.
    runs_taken : int
        Number of independent D^2 passes evaluated.
    padded : bool
        True when k exceeded the number of distinct points and centers were
        repeated to reach k.
    """

    centers: Query
    alpha: float
    seed_cost: float
    runs_taken: int
    padded: bool = False

    @property
    def k(self) -> int:
        return self.centers.k


def d2_sample_indices(dataset: WeightedDataset, k: int, rng=None,
                      model: CostModel = _EUCLIDEAN) -> tuple[np.ndarray, bool]:
    """One D^2-sampling pass; returns (row indices of the k centers, padded).

    The running min-distance cache makes the pass O(nk): after each new
    center only the distances to that center are computed and folded in with
    an elementwise minimum. Distances are measured in the model's geometry.

    Degenerate inputs are handled explicitly. If at some iteration every
    point with positive weight sits on an already-chosen center (zero D^2
    mass), the next center is drawn uniformly among the remaining
    positive-distance points; if no distinct point remains at all, the chosen
    centers are repeated in order until k and the result is flagged padded.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = ensure_rng(rng)
    pts = model.transform(dataset.points)
    w = dataset.weights

    chosen: list[int] = []
    first = int(draw_categorical(rng, w, 1)[0])
    chosen.append(first)
    diff = pts - pts[first]
    dist2 = np.einsum("ij,ij->i", diff, diff)

    padded = False
    while len(chosen) < k:
        mass = w * dist2
        if np.any(mass > 0):
            nxt = int(draw_categorical(rng, mass, 1)[0])
        else:
            # All D^2 mass is covered. Zero-weight points at positive distance
            # are still distinct values worth returning; beyond that, pad.
            candidates = np.flatnonzero(dist2 > 0)
            if candidates.size:
                nxt = int(candidates[rng.integers(candidates.size)])
            else:
                padded = True
                reps = [chosen[i % len(chosen)] for i in range(k - len(chosen))]
                chosen.extend(reps)
                break
        chosen.append(nxt)
        diff = pts - pts[nxt]
        np.minimum(dist2, np.einsum("ij,ij->i", diff, diff), out=dist2)

    return np.asarray(chosen, dtype=np.intp), padded


def d2_sample(dataset: WeightedDataset, k: int, rng=None,
              model: CostModel = _EUCLIDEAN) -> Query:
    """Centers from one D^2 pass, as rows of the dataset (original coordinates)."""
    idx, _ = d2_sample_indices(dataset, k, rng, model)
    return Query(dataset.points[idx])


def bicriteria(dataset: WeightedDataset, k: int, delta: float = 0.1, rng=None,
               c_runs: float = 3.0, model: CostModel = _EUCLIDEAN) -> Bicriteria:
    """Best of max(1, ceil(c_runs * ln(1/delta))) independent D^2 passes.

    Each pass gets its own child stream of ``rng`` (spawned in run order), so
    the winning run is reproducible and independent of evaluation order. Ties
    on cost keep the earliest run. Centers are always rows of the dataset,
    an assumption the downstream sample-size recipe relies on.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    rng = ensure_rng(rng)
    runs = max(1, math.ceil(c_runs * math.log(1.0 / delta)))
    streams = rng.spawn(runs)

    best_cost = math.inf
    best: Query | None = None
    best_padded = False
    for stream in streams:
        idx, padded = d2_sample_indices(dataset, k, stream, model)
        centers = Query(dataset.points[idx])
        cost = total_cost(dataset, centers, model)
        if cost < best_cost:
            best_cost = cost
            best = centers
            best_padded = padded
    assert best is not None
    return Bicriteria(centers=best, alpha=alpha_for(k), seed_cost=best_cost,
                      runs_taken=runs, padded=best_padded)
