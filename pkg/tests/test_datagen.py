import numpy as np
import pytest

from coresketch.datagen import adversarial, gaussian_mixture, generate, uniform_box
from coresketch.solver import ptas_exhaustive

seed = 2718


def test_adversarial_layout():
    ds = adversarial(4)
    assert np.array_equal(ds.points, [[0.0], [0.0], [0.0], [1.0]])
    assert ds.has_uniform_weights
    with pytest.raises(ValueError):
        adversarial(1)


def test_uniform_box_bounds_and_determinism():
    ds = uniform_box(500, 3, seed)
    assert ds.points.shape == (500, 3)
    assert np.all(ds.points >= 0.0) and np.all(ds.points < 1.0)
    again = uniform_box(500, 3, seed)
    assert np.array_equal(ds.points, again.points)


def test_gmm_cluster_sizes_split_remainder():
    # n = 10, k = 3 -> blocks of 4, 3, 3 laid out in order
    ds, centers = gaussian_mixture(10, 2, 3, separation=50.0, sigma=1e-9,
                                   seed=seed, return_centers=True)
    assert ds.n == 10
    assert centers.shape == (3, 2)
    assert np.allclose(ds.points[:4], centers[0], atol=1e-6)
    assert np.allclose(ds.points[4:7], centers[1], atol=1e-6)
    assert np.allclose(ds.points[7:], centers[2], atol=1e-6)


def test_gmm_centers_respect_separation():
    _, centers = gaussian_mixture(40, 2, 4, separation=25.0, sigma=0.5,
                                  seed=seed, return_centers=True)
    for i in range(4):
        for j in range(i + 1, 4):
            assert np.linalg.norm(centers[i] - centers[j]) >= 25.0


def test_gmm_validation():
    with pytest.raises(ValueError):
        gaussian_mixture(2, 2, 3)
    with pytest.raises(ValueError):
        gaussian_mixture(10, 2, 2, separation=0.0)
    with pytest.raises(ValueError):
        gaussian_mixture(10, 2, 2, sigma=-1.0)


def test_exact_solver_recovers_gmm_centers():
    """Well-separated blobs: the exact optimum sits within 3 sigma / sqrt(n/k)."""
    sigma = 0.5
    ds, centers = gaussian_mixture(12, 2, 3, separation=40.0, sigma=sigma,
                                   seed=seed, return_centers=True)
    sol = ptas_exhaustive(ds, 3)
    tol = 3 * sigma / np.sqrt(12 / 3)
    for c in centers:
        nearest = np.min(np.linalg.norm(sol.centers - c, axis=1))
        assert nearest <= tol


def test_generate_dispatch():
    assert generate("adversarial", 5).n == 5
    assert generate("uniform_box", 20, seed, d=4).d == 4
    assert generate("uniform-box", 20, seed, d=4).d == 4
    gmm = generate("gmm", 30, seed, d=2, k=3, separation=20.0, sigma=0.5)
    assert (gmm.n, gmm.d) == (30, 2)
    with pytest.raises(ValueError, match="unknown dataset kind"):
        generate("spiral", 10)
