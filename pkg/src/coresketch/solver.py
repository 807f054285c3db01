"""Clustering solvers: weighted Lloyd iterations and an exhaustive optimum.

The exhaustive solver enumerates every partition of the (distinct) points
into at most k nonempty groups, takes each group's weighted centroid, and
keeps the cheapest solution. Its cost is the Bell-style partition count, so
it only runs under an explicit cap; on coreset-sized inputs it serves as the
exact reference that turns the (1+3eps) competitiveness statement into a
checkable inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from ._util import ensure_rng
from .data import CostModel, Query, WeightedDataset, nearest_centers, total_cost
from .seeding import d2_sample

__all__ = [
    "Solution",
    "PartitionCapError",
    "weighted_lloyd",
    "lloyd_best_of",
    "ptas_exhaustive",
    "partition_count",
    "solve_via_coreset",
    "CoresetSolveResult",
]

_EUCLIDEAN = CostModel()


@dataclass(frozen=True)
class Solution:
    query: Query
    objective: float
    iterations: int
    converged: bool
    method: str

    @property
    def centers(self) -> np.ndarray:
        return self.query.centers


class PartitionCapError(ValueError):
    """Exhaustive enumeration would exceed the configured partition cap."""

    def __init__(self, required: int, cap: int):
        self.required = required
        self.cap = cap
        super().__init__(
            f"exhaustive search needs {required} partitions, above the cap of {cap}; "
            "raise partition_cap or shrink the input"
        )


def _distinct_rows(points: np.ndarray) -> int:
    return np.unique(points, axis=0).shape[0]


def weighted_lloyd(dataset: WeightedDataset, k: int, init=None, rng=None,
                   max_iters: int = 300, tol: float = 1e-9,
                   model: CostModel = _EUCLIDEAN) -> Solution:
    """Lloyd's alternation on a weighted point set.

    Assignments use the model's geometry; centroid updates are plain weighted
    means, which minimize any Mahalanobis objective as well. Convergence is a
    relative objective decrease below ``tol``. An emptied cluster is re-seeded
    at the point with the largest weighted cost contribution (lowest index on
    ties); if there is no residual cost to reclaim the center stays put, and
    k exceeding the number of distinct points is an error.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > dataset.n:
        raise ValueError(f"k={k} exceeds n={dataset.n}")
    rng = ensure_rng(rng)
    if init is None:
        centers = np.array(d2_sample(dataset, k, rng, model).centers, copy=True)
    else:
        q = init if isinstance(init, Query) else Query(init)
        if q.k != k:
            raise ValueError(f"init has {q.k} centers, expected k={k}")
        centers = np.array(q.centers, copy=True)

    pts = dataset.points
    w = dataset.weights
    costs, assign = nearest_centers(pts, Query(centers), model)
    obj = float(np.dot(w, costs))
    iterations = 0
    converged = obj == 0.0

    for _ in range(max_iters):
        if converged:
            break
        iterations += 1
        mass = np.bincount(assign, weights=w, minlength=k)
        counts = np.bincount(assign, minlength=k)
        sums = np.zeros((k, dataset.d))
        np.add.at(sums, assign, w[:, None] * pts)
        nonempty = mass > 0
        centers[nonempty] = sums[nonempty] / mass[nonempty, None]

        empty = np.flatnonzero(counts == 0)
        if empty.size:
            wcost = w * costs
            for j in empty:
                i = int(np.argmax(wcost))
                if wcost[i] <= 0.0:
                    if k > _distinct_rows(pts):
                        raise ValueError(
                            f"k={k} exceeds the number of distinct points "
                            f"({_distinct_rows(pts)})"
                        )
                    break  # nothing left to reclaim; empty cluster is harmless
                centers[j] = pts[i]
                wcost[i] = -1.0

        costs, assign = nearest_centers(pts, Query(centers), model)
        new_obj = float(np.dot(w, costs))
        if obj - new_obj <= tol * obj:
            obj = new_obj
            converged = True
            break
        obj = new_obj

    return Solution(query=Query(centers), objective=obj, iterations=iterations,
                    converged=converged, method="lloyd")


def lloyd_best_of(dataset: WeightedDataset, k: int, restarts: int = 10, rng=None,
                  max_iters: int = 300, tol: float = 1e-9,
                  model: CostModel = _EUCLIDEAN) -> Solution:
    """Best of ``restarts`` D^2-seeded Lloyd runs (earliest run wins ties)."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = ensure_rng(rng)
    best: Solution | None = None
    for stream in rng.spawn(restarts):
        sol = weighted_lloyd(dataset, k, rng=stream, max_iters=max_iters,
                             tol=tol, model=model)
        if best is None or sol.objective < best.objective:
            best = sol
    return Solution(query=best.query, objective=best.objective,
                    iterations=best.iterations, converged=best.converged,
                    method=f"lloyd-best-of-{restarts}")


def partition_count(n: int, max_blocks: int) -> int:
    """Number of partitions of n labeled items into at most max_blocks blocks."""
    if n < 1:
        raise ValueError("n must be >= 1")
    kmax = min(n, max_blocks)
    # Stirling numbers of the second kind by the standard recurrence.
    row = [0] * (kmax + 1)
    row[0] = 1  # S(0, 0)
    for m in range(1, n + 1):
        new = [0] * (kmax + 1)
        for j in range(1, min(m, kmax) + 1):
            new[j] = j * row[j] + row[j - 1]
        row = new
    return sum(row[1:])


def _restricted_growth_strings(n: int, max_blocks: int) -> Iterator[list[int]]:
    """All partitions of range(n) into <= max_blocks blocks, as label strings.

    Yields the same (mutated) list each time; callers must not hold on to it.
    """
    a = [0] * n
    prefix_max = [0] * n  # prefix_max[i] = max(a[:i]), maintained incrementally
    while True:
        yield a
        i = n - 1
        while i > 0:
            if a[i] < prefix_max[i] + 1 and a[i] < max_blocks - 1:
                a[i] += 1
                cur = max(prefix_max[i], a[i])
                for j in range(i + 1, n):
                    a[j] = 0
                    prefix_max[j] = cur
                break
            i -= 1
        else:
            return


def _merge_duplicate_rows(dataset: WeightedDataset) -> WeightedDataset:
    uniq, inverse = np.unique(dataset.points, axis=0, return_inverse=True)
    if uniq.shape[0] == dataset.n:
        return dataset
    weights = np.bincount(inverse, weights=dataset.weights, minlength=uniq.shape[0])
    return WeightedDataset(uniq, weights)


def ptas_exhaustive(dataset, k: int, partition_cap: int = 1_000_000,
                    model: CostModel = _EUCLIDEAN) -> Solution:
    """Exact weighted k-means by enumerating all <= k-block partitions.

    Duplicate rows are merged (weights summed) before enumeration. Raises
    PartitionCapError when the partition count exceeds ``partition_cap``.
    The returned objective is total_cost of the *input* dataset at the
    winning centers.
    """
    data = dataset.data if hasattr(dataset, "data") else dataset
    if k < 1:
        raise ValueError("k must be >= 1")
    merged = _merge_duplicate_rows(data)
    n = merged.n
    required = partition_count(n, k)
    if required > partition_cap:
        raise PartitionCapError(required, partition_cap)

    work = model.transform(merged.points)
    w = merged.weights
    wpts = w[:, None] * work
    total_sq = float(np.einsum("ij,ij->", wpts, work))

    best_cost = math.inf
    best_labels: np.ndarray | None = None
    evaluated = 0
    for labels in _restricted_growth_strings(n, k):
        evaluated += 1
        lbl = np.asarray(labels)
        nb = int(lbl.max()) + 1
        mass = np.bincount(lbl, weights=w, minlength=nb)
        sums = np.zeros((nb, work.shape[1]))
        np.add.at(sums, lbl, wpts)
        with np.errstate(divide="ignore", invalid="ignore"):
            recovered = np.where(mass > 0, np.einsum("ij,ij->i", sums, sums) / mass, 0.0)
        cost = total_sq - float(np.sum(recovered))
        if cost < best_cost:
            best_cost = cost
            best_labels = lbl.copy()

    # Centroids commute with the whitening map, so compute them in the
    # original coordinates directly from the winning labels.
    lbl = best_labels
    nb = int(lbl.max()) + 1
    mass = np.bincount(lbl, weights=w, minlength=nb)
    sums = np.zeros((nb, merged.d))
    np.add.at(sums, lbl, w[:, None] * merged.points)
    centers = np.empty((nb, merged.d))
    for b in range(nb):
        if mass[b] > 0:
            centers[b] = sums[b] / mass[b]
        else:
            centers[b] = merged.points[lbl == b].mean(axis=0)
    query = Query(centers)
    return Solution(query=query, objective=total_cost(data, query, model),
                    iterations=evaluated, converged=True, method="ptas-exhaustive")


@dataclass(frozen=True)
class CoresetSolveResult:
    """Solve-on-coreset outcome, evaluated against the full data."""

    solution: Solution          # solved on the coreset; objective is on the coreset
    reference: Solution         # solved on the full data
    coreset: object             # the Coreset used (or the identity dataset)
    cost_full_at_solution: float
    cost_full_at_reference: float
    solver: str

    @property
    def query(self) -> Query:
        return self.solution.query

    @property
    def ratio(self) -> float:
        if self.cost_full_at_reference == 0.0:
            return 1.0 if self.cost_full_at_solution == 0.0 else math.inf
        return self.cost_full_at_solution / self.cost_full_at_reference


def solve_via_coreset(dataset: WeightedDataset, k: int, epsilon: float | None = None,
                      delta: float = 0.1, m: int | None = None, seed=None, *,
                      solver: str = "auto", restarts: int = 50,
                      partition_cap: int = 1_000_000, coreset=None,
                      model: CostModel = _EUCLIDEAN, **build_kwargs) -> CoresetSolveResult:
    """Build a coreset, solve on it, and compare against solving in full.

    Both solves use the same method and the same derived seed, so handing in
    the identity coreset (``coreset=dataset``) yields a ratio of exactly 1.
    ``solver="auto"`` picks the exhaustive solver when the full data fits
    under the partition cap, Lloyd restarts otherwise.
    """
    from .builder import Coreset, build_kmeans_coreset

    rng = ensure_rng(seed)
    build_stream, misc = rng.spawn(2)
    solve_seed = int(misc.integers(2 ** 62))

    if coreset is None:
        coreset = build_kmeans_coreset(dataset, k, epsilon=epsilon, delta=delta,
                                       m=m, seed=build_stream, model=model,
                                       **build_kwargs)
    cdata = coreset.data if isinstance(coreset, Coreset) else coreset

    if solver == "auto":
        n_distinct = _distinct_rows(dataset.points)
        solver = "ptas" if partition_count(n_distinct, k) <= partition_cap else "lloyd"
    if solver == "ptas":
        sol = ptas_exhaustive(cdata, k, partition_cap, model)
        ref = ptas_exhaustive(dataset, k, partition_cap, model)
    elif solver == "lloyd":
        sol = lloyd_best_of(cdata, k, restarts, np.random.default_rng(solve_seed), model=model)
        ref = lloyd_best_of(dataset, k, restarts, np.random.default_rng(solve_seed), model=model)
    else:
        raise ValueError(f"unknown solver {solver!r}")

    return CoresetSolveResult(
        solution=sol, reference=ref, coreset=coreset,
        cost_full_at_solution=total_cost(dataset, sol.query, model),
        cost_full_at_reference=total_cost(dataset, ref.query, model),
        solver=solver,
    )
