"""Empirical verification: query suites, observed coreset error, diagnostics.

The coreset property quantifies over *all* queries, so any finite suite only
certifies a lower bound on the true error. The default suite mixes queries
that stress different failure modes: random boxes (coarse global queries),
adaptively seeded queries (cost concentrated where the data is), a solved
reference optimum, and local perturbations of it (the regime the
competitiveness argument actually uses).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import child_rng, ensure_rng
from .builder import Coreset, SampleSizeSpec, build_kmeans_coreset, recommended_m
from .data import CostModel, Query, WeightedDataset, as_query, nearest_centers, total_cost
from .seeding import d2_sample
from .solver import lloyd_best_of

__all__ = [
    "QuerySuite",
    "QueryError",
    "ErrorReport",
    "coreset_error",
    "g_function",
    "hoeffding_m",
    "calibrate_c_size",
    "CalibrationResult",
]

_EUCLIDEAN = CostModel()


@dataclass(frozen=True)
class QuerySuite:
    """A finite family of k-center queries, each tagged with its origin."""

    queries: tuple[Query, ...]
    sources: tuple[str, ...]
    k: int

    def __len__(self) -> int:
        return len(self.queries)

    @classmethod
    def default(cls, dataset: WeightedDataset, k: int, seed=None,
                reference: Query | None = None, n_random: int = 50,
                n_d2: int = 20, n_perturbed: int = 10,
                perturbation_scale: float | None = None,
                reference_restarts: int = 10,
                model: CostModel = _EUCLIDEAN) -> "QuerySuite":
        """The standard mix: random boxes, D^2 seeds, an optimum, its wiggles.

        The perturbation scale defaults to 0.1x the weighted average
        nearest-center distance of the reference solution.
        """
        rng = ensure_rng(seed)
        box_s, d2_s, ref_s, pert_s = rng.spawn(4)
        lo = dataset.points.min(axis=0)
        hi = dataset.points.max(axis=0)
        span = hi - lo

        queries: list[Query] = []
        sources: list[str] = []
        for _ in range(n_random):
            queries.append(Query(lo + box_s.random((k, dataset.d)) * span))
            sources.append("random-box")
        for stream in d2_s.spawn(n_d2):
            queries.append(d2_sample(dataset, k, stream, model))
            sources.append("d2-seeded")

        if reference is None:
            reference = lloyd_best_of(dataset, k, restarts=reference_restarts,
                                      rng=ref_s, model=model).query
        queries.append(reference)
        sources.append("reference-optimum")

        if perturbation_scale is None:
            d2, _ = nearest_centers(dataset.points, reference, model)
            mu = dataset.weights / np.sum(dataset.weights)
            perturbation_scale = 0.1 * float(mu @ np.sqrt(d2))
        for _ in range(n_perturbed):
            noise = pert_s.standard_normal(reference.centers.shape)
            queries.append(Query(reference.centers + perturbation_scale * noise))
            sources.append("perturbed-optimum")

        return cls(queries=tuple(queries), sources=tuple(sources), k=k)

    def extended(self, extra_queries, source: str = "extra") -> "QuerySuite":
        qs = tuple(as_query(q) for q in extra_queries)
        return QuerySuite(queries=self.queries + qs,
                          sources=self.sources + tuple(source for _ in qs),
                          k=self.k)


@dataclass(frozen=True)
class QueryError:
    index: int
    source: str
    cost_full: float
    cost_coreset: float

    @property
    def relative_error(self) -> float | None:
        if self.cost_full == 0.0:
            return None
        return abs(self.cost_full - self.cost_coreset) / self.cost_full

    @property
    def skipped(self) -> bool:
        return self.cost_full == 0.0


@dataclass(frozen=True)
class ErrorReport:
    """Observed coreset error over a suite: a lower bound on the true error."""

    entries: tuple[QueryError, ...]
    max_error: float
    argmax_index: int
    n_skipped: int

    @property
    def errors(self) -> np.ndarray:
        return np.array([e.relative_error for e in self.entries if not e.skipped])

    @property
    def median_error(self) -> float:
        return float(np.median(self.errors))

    def to_dict(self) -> dict:
        return {
            "max_error": self.max_error,
            "median_error": self.median_error,
            "argmax_index": self.argmax_index,
            "argmax_source": self.entries[self.argmax_index].source,
            "n_queries": len(self.entries),
            "n_skipped_zero_cost": self.n_skipped,
            "per_query": [
                {"index": e.index, "source": e.source, "cost_full": e.cost_full,
                 "cost_coreset": e.cost_coreset, "relative_error": e.relative_error}
                for e in self.entries
            ],
        }


def coreset_error(dataset: WeightedDataset, coreset, suite: QuerySuite,
                  model: CostModel = _EUCLIDEAN,
                  compensated: bool = False) -> ErrorReport:
    """Relative cost error per suite query; max over queries with nonzero cost.

    Queries where the full data has zero cost carry no relative scale and are
    skipped (recorded with their absolute coreset cost); it is an error for
    the whole suite to be degenerate that way.
    """
    cdata = coreset.data if isinstance(coreset, Coreset) else coreset
    entries = []
    best = -1.0
    argmax = -1
    skipped = 0
    for i, q in enumerate(suite.queries):
        cf = total_cost(dataset, q, model, compensated=compensated)
        cc = total_cost(cdata, q, model, compensated=compensated)
        e = QueryError(index=i, source=suite.sources[i], cost_full=cf, cost_coreset=cc)
        entries.append(e)
        if e.skipped:
            skipped += 1
            continue
        if e.relative_error > best:
            best = e.relative_error
            argmax = i
    if argmax < 0:
        raise ValueError("every suite query has zero full-data cost; no relative error exists")
    return ErrorReport(entries=tuple(entries), max_error=best,
                       argmax_index=argmax, n_skipped=skipped)


def g_function(dataset: WeightedDataset, s, query, q=None, *,
               check: bool = True, tol: float = 1e-9,
               model: CostModel = _EUCLIDEAN) -> np.ndarray:
    """Normalized per-point cost share g_Q(x) = f_Q(x) / (cost(X, Q) s(x)).

    For a valid sensitivity upper bound s the values lie in [0, 1]; a value
    above 1 + tol means the bound was violated at this query and ``check``
    raises. When the sampling law ``q`` (proportional to mu * s) is supplied,
    the exact identity sum_x q(x) g_Q(x) = 1/S with S = sum_x mu(x) s(x) is
    verified as well. Zero-mass points are reported as 0.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (dataset.n,):
        raise ValueError(f"s must have shape ({dataset.n},)")
    mu = dataset.weights / np.sum(dataset.weights)
    f, _ = nearest_centers(dataset.points, as_query(query), model)
    denom = float(np.dot(mu, f))
    if denom == 0.0:
        raise ValueError("query has zero cost on the dataset; g is undefined")
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(s > 0, f / (denom * s), 0.0)
    if check:
        top = float(np.max(g))
        if top > 1.0 + tol:
            raise ValueError(
                f"sensitivity bound violated: max g = {top} > 1 (query cost share "
                "exceeds its bound)")
        if float(np.min(g)) < 0.0:
            raise ValueError("negative g; inputs are inconsistent")
        if q is not None:
            q = np.asarray(q, dtype=np.float64)
            if q.shape != (dataset.n,):
                raise ValueError(f"q must have shape ({dataset.n},)")
            total_s = float(np.dot(mu, s))
            mean_g = float(np.dot(q, g))
            if abs(mean_g - 1.0 / total_s) > tol:
                raise ValueError(
                    f"mean-of-g identity violated: E_q[g] = {mean_g}, "
                    f"1/S = {1.0 / total_s}")
    return g


def hoeffding_m(total_sensitivity: float, epsilon: float, delta: float) -> int:
    """Draws needed to hit relative error epsilon at one fixed query, w.p. 1-delta.

    The per-draw estimate S * g is bounded in [0, S], so Hoeffding gives
    m >= S^2 ln(2/delta) / (2 eps^2).
    """
    if total_sensitivity <= 0:
        raise ValueError("total sensitivity must be positive")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    raw = total_sensitivity ** 2 / (2.0 * epsilon ** 2) * math.log(2.0 / delta)
    return max(1, math.ceil(raw))


@dataclass(frozen=True)
class CalibrationResult:
    c_size: float
    m: int
    epsilon: float
    max_error_by_c: dict

    def summary(self) -> str:
        return (f"c_size={self.c_size:g} (m={self.m}) achieves observed error "
                f"<= {self.epsilon:g}; sweep: " +
                ", ".join(f"{c:g}->{e:.4f}" for c, e in self.max_error_by_c.items()))


def calibrate_c_size(dataset: WeightedDataset, k: int, epsilon: float,
                     delta: float = 0.1, seeds: int = 3, grid=None,
                     suite: QuerySuite | None = None, base_seed: int = 0,
                     model: CostModel = _EUCLIDEAN) -> CalibrationResult:
    """Smallest c_size in the grid whose coresets meet epsilon on the suite.

    Theory constants are far from tight, so the practical m for a target
    error is best found empirically: sweep c_size upward and keep the first
    value whose observed max error stays at or below epsilon for every seed.
    """
    if grid is None:
        grid = (1e-5, 3e-5, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 1.0)
    if suite is None:
        suite = QuerySuite.default(dataset, k, seed=base_seed, model=model)
    sweep: dict = {}
    chosen = None
    chosen_m = None
    for ci, c in enumerate(grid):
        m = recommended_m(SampleSizeSpec(d=dataset.d, k=k, epsilon=epsilon,
                                         delta=delta / 2.0, c_size=c))
        if m > dataset.n:
            m = dataset.n
        worst = 0.0
        for s in range(seeds):
            cs = build_kmeans_coreset(dataset, k, epsilon=epsilon, delta=delta,
                                      m=m, seed=child_rng(base_seed, ci, s),
                                      model=model)
            worst = max(worst, coreset_error(dataset, cs, suite, model).max_error)
        sweep[c] = worst
        if chosen is None and worst <= epsilon:
            chosen = c
            chosen_m = m
            break
    if chosen is None:
        chosen = grid[-1]
        chosen_m = recommended_m(SampleSizeSpec(d=dataset.d, k=k, epsilon=epsilon,
                                                delta=delta / 2.0, c_size=chosen))
    return CalibrationResult(c_size=float(chosen), m=int(chosen_m),
                             epsilon=float(epsilon), max_error_by_c=sweep)
