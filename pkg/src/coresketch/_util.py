"""Shared helpers: RNG normalization and deterministic categorical draws."""

from __future__ import annotations

import numpy as np

RngLike = "int | np.random.Generator | np.random.SeedSequence | None"


def ensure_rng(rng) -> np.random.Generator:
    """Return a numpy Generator from an int seed, SeedSequence, Generator or None.

    None draws fresh OS entropy; everything else is deterministic. Child
    streams are derived with ``Generator.spawn`` (SeedSequence spawn keys),
    which is the documented splittable mechanism: child = mix(parent entropy,
    spawn index). All pipeline-level fan-out goes through ``spawn``.
    """
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, np.random.SeedSequence):
        return np.random.default_rng(rng)
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.default_rng(rng)
    raise TypeError(f"expected int seed, Generator, SeedSequence or None, got {type(rng).__name__}")


def child_rng(seed, *spawn_key: int) -> np.random.Generator:
    """Deterministic child generator for an integer seed and a spawn key path."""
    if not isinstance(seed, (int, np.integer)):
        raise TypeError("child_rng requires an integer parent seed")
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(spawn_key)))


def draw_categorical(rng: np.random.Generator, mass: np.ndarray, size: int) -> np.ndarray:
    """Sample ``size`` indices with probability proportional to ``mass``.

    Inverse-CDF on the running sum: a single uniform vector mapped through
    searchsorted, so results are reproducible and independent of thread
    count. ``mass`` must be nonnegative with a positive total; zero-mass
    entries are never selected.
    """
    mass = np.asarray(mass, dtype=np.float64)
    if mass.ndim != 1:
        raise ValueError("mass must be 1-D")
    if np.any(mass < 0) or not np.all(np.isfinite(mass)):
        raise ValueError("mass must be finite and nonnegative")
    cum = np.cumsum(mass)
    total = cum[-1]
    if not total > 0:
        raise ValueError("total mass must be positive")
    u = rng.random(size) * total
    idx = np.searchsorted(cum, u, side="right")
    return np.minimum(idx, mass.size - 1)
