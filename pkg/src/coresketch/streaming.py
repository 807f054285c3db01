"""Composable construction: streaming merge-reduce and distributed unions.

Two closure properties make coresets composable. The union of coresets of
disjoint parts is a coreset of the union with the worst part's error
(merging is error-free); and a coreset of a coreset multiplies the factors,
(1+eps)(1+eps') - 1. The streaming tree exploits both with the binary-counter
discipline: one bucket per level, each carry compressing two same-level
summaries into one a level higher, so an n-point stream holds O(log(n/block))
buckets and a level-L summary has gone through L compressions, for an error
budget of (1 + eps')^L - 1.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ._util import child_rng
from .builder import Coreset, Provenance, SampleSizeSpec, build_kmeans_coreset, recommended_m
from .data import CostModel, WeightedDataset
from .io import serialized_size

__all__ = ["MergeReduceTree", "merge_coresets", "distributed_build", "DistributedResult"]

_EUCLIDEAN = CostModel()
_FINAL_AXIS = 2 ** 32  # spawn-key level reserved for the optional final compress


def merge_coresets(*coresets: Coreset) -> Coreset:
    """Error-free union: concatenate points and weights, no reweighting."""
    if not coresets:
        raise ValueError("nothing to merge")
    if len(coresets) == 1:
        return coresets[0]
    pts = np.concatenate([c.points for c in coresets], axis=0)
    w = np.concatenate([c.weights for c in coresets])
    first = coresets[0].provenance
    prov = Provenance(
        m=sum(c.provenance.m for c in coresets), seed=first.seed,
        epsilon_target=first.epsilon_target,
        source_n=sum(c.provenance.source_n for c in coresets),
        distribution="merge", merged_duplicates=False, k=first.k)
    return Coreset(data=WeightedDataset(pts, w), provenance=prov, indices=None)


class MergeReduceTree:
    """Single-pass coreset of an unbounded stream, one bucket per level.

    Points are buffered until ``block_size``, summarized into a level-0
    coreset, and carried up the binary counter: whenever a level already
    holds a bucket, the two are unioned and compressed (the builder re-run on
    the union at ``level_epsilon``) into the next level.

    Every build gets a deterministic child stream of the tree's seed keyed by
    its position — leaf b uses key (0, b), the c-th compression into level L
    uses key (L, c) — so a fixed seed plus a fixed arrival order reproduces
    the output bit for bit, and a stream that fits in one block is the batch
    build under ``leaf_rng(seed, 0)`` exactly.
    """

    def __init__(self, k: int, block_size: int, level_epsilon: float = 0.1,
                 delta: float = 0.1, m: int | None = None, seed: int | None = None,
                 c_size: float = 1.0, algorithm2_constants: bool = False,
                 model: CostModel = _EUCLIDEAN):
        if block_size < 1:
            raise ValueError("block_size must be >= 1")
        if not 0 < level_epsilon:
            raise ValueError("level_epsilon must be positive")
        self.k = k
        self.block_size = int(block_size)
        self.level_epsilon = float(level_epsilon)
        self.delta = float(delta)
        self.c_size = float(c_size)
        self.algorithm2_constants = algorithm2_constants
        self.model = model
        self.seed = int(seed) if seed is not None else int(np.random.SeedSequence().entropy % 2 ** 63)
        self._m = int(m) if m is not None else None
        self._d: int | None = None
        self._buffer_pts: list[np.ndarray] = []
        self._buffer_w: list[float] = []
        self.buckets: dict[int, Coreset] = {}
        self.points_seen = 0
        self.blocks_built = 0
        self._compressions: dict[int, int] = {}  # level -> count of compressions into it
        self.max_compress_depth = 0
        self._finalized = False

    @staticmethod
    def leaf_rng(seed: int, block_index: int) -> np.random.Generator:
        """The exact stream a leaf build uses; exposed for batch-parity checks."""
        return child_rng(seed, 0, block_index)

    @property
    def block_m(self) -> int | None:
        """Per-build sample size; None until fixed (first build resolves it)."""
        return self._m

    def _resolved_m(self, d: int) -> int:
        if self._m is None:
            self._m = recommended_m(SampleSizeSpec(
                d=d, k=self.k, epsilon=self.level_epsilon,
                delta=self.delta / 2.0, c_size=self.c_size))
        return self._m

    def insert(self, point, weight: float | None = None) -> None:
        """Feed one point (default weight 1.0); summarizes when a block fills."""
        if self._finalized:
            raise ValueError("tree is finalized; no further inserts")
        pt = np.asarray(point, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(pt)):
            raise ValueError("stream point must be finite")
        if self._d is None:
            self._d = pt.shape[0]
        elif pt.shape[0] != self._d:
            raise ValueError(f"point has dimension {pt.shape[0]}, stream is {self._d}-dimensional")
        self._buffer_pts.append(pt)
        self._buffer_w.append(1.0 if weight is None else float(weight))
        self.points_seen += 1
        if len(self._buffer_pts) >= self.block_size:
            self._flush_block()

    def extend(self, points, weights=None) -> None:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if weights is None:
            for p in points:
                self.insert(p)
        else:
            weights = np.asarray(weights, dtype=np.float64).reshape(-1)
            if weights.shape[0] != points.shape[0]:
                raise ValueError("weights length must match points")
            for p, w in zip(points, weights):
                self.insert(p, w)

    def _build(self, dataset: WeightedDataset, rng) -> Coreset:
        return build_kmeans_coreset(
            dataset, self.k, epsilon=self.level_epsilon, delta=self.delta,
            m=self._resolved_m(dataset.d), seed=rng, allow_weighted=True,
            algorithm2_constants=self.algorithm2_constants, model=self.model)

    def _flush_block(self) -> None:
        block = WeightedDataset(np.vstack(self._buffer_pts), np.asarray(self._buffer_w))
        self._buffer_pts = []
        self._buffer_w = []
        summary = self._build(block, self.leaf_rng(self.seed, self.blocks_built))
        self.blocks_built += 1
        self._carry(summary, level=0)

    def _carry(self, summary: Coreset, level: int) -> None:
        while level in self.buckets:
            union = merge_coresets(self.buckets.pop(level), summary)
            target = level + 1
            count = self._compressions.get(target, 0)
            self._compressions[target] = count + 1
            summary = self._build(union.data, child_rng(self.seed, target, count))
            self.max_compress_depth = max(self.max_compress_depth, target)
            level = target
        self.buckets[level] = summary

    def occupied_levels(self) -> list[int]:
        return sorted(self.buckets)

    def realized_error_budget(self, extra_compressions: int = 0) -> float:
        """(1 + level_epsilon)^depth - 1 for the deepest compression chain."""
        depth = self.max_compress_depth + extra_compressions
        return (1.0 + self.level_epsilon) ** depth - 1.0

    def finalize(self, final_m: int | None = None) -> Coreset:
        """Flush the partial block and union all live buckets (error-free).

        Passing ``final_m`` adds one last compression of the union down to
        that size, which costs one more (1 + level_epsilon) factor in the
        reported budget.
        """
        if self._finalized:
            raise ValueError("tree already finalized")
        if self._buffer_pts:
            block = WeightedDataset(np.vstack(self._buffer_pts), np.asarray(self._buffer_w))
            self._buffer_pts = []
            self._buffer_w = []
            summary = self._build(block, self.leaf_rng(self.seed, self.blocks_built))
            self.blocks_built += 1
            self._carry(summary, level=0)
        if not self.buckets:
            raise ValueError("empty stream: nothing to finalize")
        self._finalized = True
        parts = [self.buckets[lvl] for lvl in sorted(self.buckets)]
        result = merge_coresets(*parts) if len(parts) > 1 else parts[0]
        if final_m is not None:
            saved, self._m = self._m, int(final_m)
            try:
                result = self._build(result.data, child_rng(self.seed, _FINAL_AXIS, 0))
            finally:
                self._m = saved
            self.max_compress_depth += 1
        return result


@dataclass(frozen=True)
class DistributedResult:
    """Union coreset from independently summarized partitions.

    ``wall_seconds`` is per-worker build time; it is informational only and
    deliberately kept out of serialized reports, which must be byte-stable.
    """

    coreset: Coreset
    parts: tuple
    bytes_per_worker: tuple[int, ...]
    worker_sizes: tuple[int, ...]
    empty_workers: tuple[int, ...]
    partition: str
    workers: int
    wall_seconds: tuple[float, ...] = ()

    @property
    def total_bytes(self) -> int:
        return sum(self.bytes_per_worker)


def _partition_indices(n: int, workers: int, scheme: str) -> list[np.ndarray]:
    if scheme in ("rr", "round-robin"):
        return [np.arange(w, n, workers) for w in range(workers)]
    if scheme in ("contig", "contiguous"):
        return [np.asarray(part) for part in np.array_split(np.arange(n), workers)]
    raise ValueError(f"unknown partition scheme {scheme!r}")


def distributed_build(dataset: WeightedDataset, k: int, workers: int,
                      epsilon: float | None = None, delta: float = 0.1,
                      m: int | None = None, seed: int | None = None, *,
                      partition: str = "rr", threads: int = 1,
                      c_size: float = 1.0, algorithm2_constants: bool = False,
                      model: CostModel = _EUCLIDEAN) -> DistributedResult:
    """Simulate workers each summarizing their partition, then union.

    Each worker w builds on its own slice with the derived stream
    child(seed, w); ``m`` is the per-worker draw count. Communication is
    accounted as the exact serialized size of each worker's summary
    (header + 8 * size * (d + 1) bytes). Workers with empty partitions are
    flagged and contribute nothing. The merge concatenates in worker order,
    so the result is independent of ``threads``.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    seed = int(seed) if seed is not None else int(np.random.SeedSequence().entropy % 2 ** 63)
    slices = _partition_indices(dataset.n, workers, partition)

    def _run(w: int):
        start = time.perf_counter()
        idx = slices[w]
        if idx.size == 0:
            return None, time.perf_counter() - start
        part = dataset.subset(idx)
        built = build_kmeans_coreset(part, k, epsilon=epsilon, delta=delta, m=m,
                                     seed=child_rng(seed, w), allow_weighted=True,
                                     c_size=c_size,
                                     algorithm2_constants=algorithm2_constants,
                                     model=model)
        return built, time.perf_counter() - start

    if threads == 1:
        outcomes = [_run(w) for w in range(workers)]
    else:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_run, range(workers)))

    parts = [p for p, _ in outcomes]
    live = [p for p in parts if p is not None]
    if not live:
        raise ValueError("all partitions are empty")
    merged = merge_coresets(*live) if len(live) > 1 else live[0]
    sizes = tuple(0 if p is None else p.size for p in parts)
    bytes_w = tuple(serialized_size(s, dataset.d, True) for s in sizes)
    empty = tuple(w for w, p in enumerate(parts) if p is None)
    return DistributedResult(coreset=merged, parts=tuple(parts),
                             bytes_per_worker=bytes_w, worker_sizes=sizes,
                             empty_workers=empty, partition=partition,
                             workers=workers,
                             wall_seconds=tuple(t for _, t in outcomes))
