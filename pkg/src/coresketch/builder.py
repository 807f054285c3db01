"""Coreset construction: importance sampling, sample-size recipes, pipeline.

The sampler draws m points i.i.d. from a distribution q and reweights each
draw by mu(x) / (m q(x)), which makes the weighted cost of the sample an
unbiased estimator of the full cost for every query. With q proportional to
mu(x) s(x) for a sensitivity upper bound s, a sample of the recommended size
is an epsilon-coreset with probability 1 - delta.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._util import draw_categorical, ensure_rng
from .data import CostModel, WeightedDataset
from .seeding import bicriteria
from .sensitivity import sensitivity_bound, total_sensitivity_bound

__all__ = [
    "Provenance",
    "Coreset",
    "SampleSizeSpec",
    "recommended_m",
    "importance_sample",
    "BuildDetails",
    "build_details",
    "build_kmeans_coreset",
    "uniform_baseline",
]

_EUCLIDEAN = CostModel()


@dataclass(frozen=True)
class Provenance:
    """How a coreset came to be; serialized alongside every artifact."""

    m: int
    seed: int | None
    epsilon_target: float | None
    source_n: int
    distribution: str
    merged_duplicates: bool
    k: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Coreset:
    """A weighted subset standing in for a larger dataset."""

    data: WeightedDataset
    provenance: Provenance
    indices: np.ndarray | None = None   # rows of the source, None after merges

    @property
    def points(self) -> np.ndarray:
        return self.data.points

    @property
    def weights(self) -> np.ndarray:
        return self.data.weights

    @property
    def size(self) -> int:
        return self.data.n


@dataclass(frozen=True)
class SampleSizeSpec:
    """Inputs to the sample-size recipes.

    The default recipe is the k-means-specific bound

        m = ceil(c_size * (d k^3 log2(max(k, 2)) + k^2 ln(1/delta)) / eps^2).

    Setting ``pdim_override`` switches to the generic shape
    ceil(c_size * S^2 (d' + ln(1/delta)) / eps^2) with S the conservation-law
    total 6 alpha + 4k and d' the supplied pseudo-dimension bound (for
    weighted k-means queries d' = O(d k log k)). Theory constants are loose;
    c_size exists to be calibrated empirically and scales m linearly.
    """

    d: int
    k: int
    epsilon: float
    delta: float
    c_size: float = 1.0
    pdim_override: int | None = None

    def __post_init__(self):
        if self.d < 1 or self.k < 1:
            raise ValueError("d and k must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")
        if not self.c_size > 0:
            raise ValueError("c_size must be positive")

    def raw(self) -> float:
        """The recipe's value before rounding up (useful for scaling checks)."""
        if self.pdim_override is not None:
            s_total = total_sensitivity_bound(self.k)
            core = s_total ** 2 * (self.pdim_override + math.log(1.0 / self.delta))
        else:
            core = (self.d * self.k ** 3 * math.log2(max(self.k, 2))
                    + self.k ** 2 * math.log(1.0 / self.delta))
        return self.c_size * core / self.epsilon ** 2


def recommended_m(spec: SampleSizeSpec) -> int:
    """Recommended number of draws for the spec'd guarantee; always >= 1."""
    return max(1, math.ceil(spec.raw()))


def importance_sample(dataset: WeightedDataset, q, m: int, rng=None, *,
                      merge_duplicates: bool = True,
                      distribution: str = "custom",
                      seed: int | None = None,
                      epsilon_target: float | None = None,
                      k: int | None = None) -> Coreset:
    """m independent draws from q, each reweighted by mu(x) / (m q(x)).

    Repeated draws of the same row are merged by summing their weights (the
    default), so the returned points are distinct rows of the source; pass
    ``merge_duplicates=False`` to keep the raw multiset.
    """
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValueError("m must be a positive integer")
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (dataset.n,):
        raise ValueError(f"q must have shape ({dataset.n},), got {q.shape}")
    if not np.all(np.isfinite(q)) or np.any(q < 0):
        raise ValueError("q must be finite and nonnegative")
    if abs(float(np.sum(q)) - 1.0) > 1e-9:
        raise ValueError("q must sum to 1")
    if np.any((dataset.weights > 0) & (q == 0)):
        raise ValueError("q must be strictly positive wherever the weights are")

    rng = ensure_rng(rng)
    idx = draw_categorical(rng, q, m)

    if merge_duplicates:
        uniq, counts = np.unique(idx, return_counts=True)
        weights = counts * dataset.weights[uniq] / (m * q[uniq])
        sel = uniq
    else:
        weights = dataset.weights[idx] / (m * q[idx])
        sel = idx

    prov = Provenance(m=int(m), seed=seed, epsilon_target=epsilon_target,
                      source_n=dataset.n, distribution=distribution,
                      merged_duplicates=merge_duplicates, k=k)
    return Coreset(data=WeightedDataset(dataset.points[sel], weights),
                   provenance=prov, indices=sel)


def _seed_of(rng_arg) -> int | None:
    return int(rng_arg) if isinstance(rng_arg, (int, np.integer)) else None


@dataclass(frozen=True)
class BuildDetails:
    """The pipeline's intermediates alongside its output."""

    coreset: Coreset
    seeds: object | None  # Bicriteria when distribution == "sensitivity"
    profile: object | None  # SensitivityProfile, ditto
    q: np.ndarray


def build_details(dataset: WeightedDataset, k: int, epsilon: float | None = None,
                  delta: float = 0.1, m: int | None = None, seed=None, *,
                  distribution: str = "sensitivity",
                  allow_weighted: bool = False,
                  c_size: float = 1.0, c_runs: float = 3.0,
                  algorithm2_constants: bool = False,
                  merge_duplicates: bool = True,
                  model: CostModel = _EUCLIDEAN) -> BuildDetails:
    """Seed, bound sensitivities, sample: the end-to-end coreset pipeline.

    The failure budget delta is split evenly: delta/2 buys the bicriteria's
    best-of-runs success, delta/2 goes into the sample-size recipe. When m is
    not given it comes from ``recommended_m`` (which requires epsilon).

    ``distribution="uniform"`` short-circuits seeding and sensitivities and
    samples by weight alone — the provably insufficient baseline, kept on the
    same code path for fair comparisons.
    """
    if distribution not in ("sensitivity", "uniform"):
        raise ValueError(f"unknown distribution {distribution!r}")
    if m is None:
        if epsilon is None:
            raise ValueError("either m or epsilon must be given")
        m = recommended_m(SampleSizeSpec(d=dataset.d, k=k, epsilon=epsilon,
                                         delta=delta / 2.0, c_size=c_size))
    rng = ensure_rng(seed)
    seed_stream, sample_stream = rng.spawn(2)

    seeds = profile = None
    if distribution == "sensitivity":
        seeds = bicriteria(dataset, k, delta / 2.0, seed_stream, c_runs, model)
        profile = sensitivity_bound(dataset, seeds, allow_weighted=allow_weighted,
                                    algorithm2_constants=algorithm2_constants,
                                    model=model)
        q = profile.sampling_distribution(dataset)
    else:
        q = dataset.weights / np.sum(dataset.weights)

    coreset = importance_sample(dataset, q, m, sample_stream,
                                merge_duplicates=merge_duplicates,
                                distribution=distribution, seed=_seed_of(seed),
                                epsilon_target=epsilon, k=k)
    return BuildDetails(coreset=coreset, seeds=seeds, profile=profile, q=q)


def build_kmeans_coreset(dataset: WeightedDataset, k: int, epsilon: float | None = None,
                         delta: float = 0.1, m: int | None = None, seed=None,
                         **kwargs) -> Coreset:
    """``build_details`` for callers who only want the coreset."""
    return build_details(dataset, k, epsilon, delta, m, seed, **kwargs).coreset


def uniform_baseline(dataset: WeightedDataset, m: int, seed=None, *,
                     merge_duplicates: bool = True) -> Coreset:
    """Uniform (weight-proportional) sampling baseline, same estimator shape."""
    rng = ensure_rng(seed)
    q = dataset.weights / np.sum(dataset.weights)
    return importance_sample(dataset, q, m, rng, merge_duplicates=merge_duplicates,
                             distribution="uniform", seed=_seed_of(seed))
