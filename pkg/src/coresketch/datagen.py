"""Synthetic datasets the test harness and CLI share."""

from __future__ import annotations

import numpy as np

from ._util import ensure_rng
from .data import WeightedDataset

__all__ = ["adversarial", "uniform_box", "gaussian_mixture", "generate"]


def adversarial(n: int) -> WeightedDataset:
    """n - 1 points at the origin and a single outlier at 1 (d = 1).

    The classic uniform-sampling killer: cost(X, {0}) = 1/n rests entirely on
    the outlier, which a uniform m-sample misses with probability
    (1 - 1/n)^m.
    """
    if n < 2:
        raise ValueError("adversarial needs n >= 2")
    pts = np.zeros((n, 1))
    pts[-1, 0] = 1.0
    return WeightedDataset(pts)


def uniform_box(n: int, d: int, seed=None) -> WeightedDataset:
    """n uniform points in the unit box [0, 1]^d, uniform weights."""
    rng = ensure_rng(seed)
    return WeightedDataset(rng.random((n, d)))


def gaussian_mixture(n: int, d: int, k: int, separation: float = 10.0,
                     sigma: float = 1.0, seed=None,
                     return_centers: bool = False):
    """Equal-share spherical Gaussian blobs with min center separation.

    Centers are drawn uniformly in a box sized so that rejection sampling to
    pairwise distance >= separation terminates quickly; cluster sizes are
    n // k with the remainder spread over the first clusters; points are laid
    out cluster-block by cluster-block.
    """
    if k < 1 or n < k:
        raise ValueError("need n >= k >= 1")
    if separation <= 0 or sigma < 0:
        raise ValueError("separation must be positive and sigma nonnegative")
    rng = ensure_rng(seed)
    box = separation * max(k, 2) * np.sqrt(d)
    centers = np.empty((k, d))
    placed = 0
    attempts = 0
    while placed < k:
        attempts += 1
        if attempts > 10_000 * k:
            raise RuntimeError("could not place mixture centers; lower separation")
        cand = rng.random(d) * box
        if placed == 0 or np.min(
                np.linalg.norm(centers[:placed] - cand, axis=1)) >= separation:
            centers[placed] = cand
            placed += 1

    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    blocks = [centers[j] + sigma * rng.standard_normal((sizes[j], d)) for j in range(k)]
    data = WeightedDataset(np.concatenate(blocks, axis=0))
    if return_centers:
        return data, centers
    return data


def generate(kind: str, n: int, seed=None, **params) -> WeightedDataset:
    """Dispatch by kind: 'adversarial', 'uniform_box' or 'gmm'."""
    kind = kind.replace("-", "_")
    if kind == "adversarial":
        return adversarial(n)
    if kind == "uniform_box":
        return uniform_box(n, d=int(params.pop("d", 2)), seed=seed)
    if kind == "gmm":
        return gaussian_mixture(
            n, d=int(params.pop("d", 2)), k=int(params.pop("k", 3)),
            separation=float(params.pop("separation", 10.0)),
            sigma=float(params.pop("sigma", 1.0)), seed=seed)
    raise ValueError(f"unknown dataset kind {kind!r}")
