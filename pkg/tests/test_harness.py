import numpy as np
import pytest

from coresketch.builder import build_details, build_kmeans_coreset
from coresketch.data import Query, WeightedDataset
from coresketch.harness import (
    QuerySuite,
    calibrate_c_size,
    coreset_error,
    g_function,
    hoeffding_m,
)
from coresketch.sensitivity import exact_sensitivity_1means

seed = 808
rng = np.random.default_rng(seed)
dataset = WeightedDataset(rng.standard_normal((400, 2)) * 3.0)


def test_default_suite_composition():
    suite = QuerySuite.default(dataset, 3, seed=seed)
    assert len(suite) == 50 + 20 + 1 + 10
    assert suite.k == 3
    counts = {s: suite.sources.count(s) for s in set(suite.sources)}
    assert counts == {"random-box": 50, "d2-seeded": 20,
                      "reference-optimum": 1, "perturbed-optimum": 10}
    assert all(q.k == 3 for q in suite.queries)


def test_default_suite_deterministic():
    a = QuerySuite.default(dataset, 2, seed=seed)
    b = QuerySuite.default(dataset, 2, seed=seed)
    for qa, qb in zip(a.queries, b.queries):
        assert np.array_equal(qa.centers, qb.centers)


def test_suite_extended():
    suite = QuerySuite.default(dataset, 2, seed=seed, n_random=3, n_d2=2,
                               n_perturbed=1)
    extra = suite.extended([Query(np.zeros((2, 2)))], source="probe")
    assert len(extra) == len(suite) + 1
    assert extra.sources[-1] == "probe"


def test_identity_coreset_has_zero_error():
    suite = QuerySuite.default(dataset, 2, seed=seed, n_random=5, n_d2=3,
                               n_perturbed=2)
    report = coreset_error(dataset, dataset, suite)
    assert report.max_error == 0.0
    assert report.median_error == 0.0
    assert report.n_skipped == 0


def test_error_is_max_over_suite():
    suite = QuerySuite.default(dataset, 2, seed=seed, n_random=5, n_d2=3,
                               n_perturbed=2)
    coreset = build_kmeans_coreset(dataset, 2, m=50, seed=seed)
    report = coreset_error(dataset, coreset, suite)
    per_query = [e.relative_error for e in report.entries if not e.skipped]
    assert report.max_error == max(per_query)
    assert report.entries[report.argmax_index].relative_error == report.max_error
    extended = coreset_error(dataset, coreset, suite.extended([Query(np.zeros((2, 2)))]))
    assert extended.max_error >= report.max_error


def test_zero_cost_queries_are_skipped():
    tiny = WeightedDataset([[0.0], [4.0]])
    suite = QuerySuite(queries=(Query([[0.0], [4.0]]), Query([[0.0], [5.0]])),
                       sources=("exact", "off"), k=2)
    report = coreset_error(tiny, tiny, suite)
    assert report.n_skipped == 1
    assert report.entries[0].skipped
    assert report.entries[0].relative_error is None
    all_zero = QuerySuite(queries=(Query([[0.0], [4.0]]),), sources=("exact",), k=2)
    with pytest.raises(ValueError, match="zero full-data cost"):
        coreset_error(tiny, tiny, all_zero)


def test_error_report_dict_shape():
    suite = QuerySuite.default(dataset, 2, seed=seed, n_random=2, n_d2=1,
                               n_perturbed=1)
    coreset = build_kmeans_coreset(dataset, 2, m=80, seed=seed)
    d = coreset_error(dataset, coreset, suite).to_dict()
    assert set(d) == {"max_error", "median_error", "argmax_index", "argmax_source",
                      "n_queries", "n_skipped_zero_cost", "per_query"}
    assert d["n_queries"] == 5
    assert len(d["per_query"]) == 5
    assert set(d["per_query"][0]) == {"index", "source", "cost_full",
                                      "cost_coreset", "relative_error"}


def test_g_attains_one_at_the_argmax_query():
    """At x's own worst query, x's cost share equals sigma(x), so g = 1."""
    ds = WeightedDataset(rng.standard_normal((30, 1)))
    sigma = exact_sensitivity_1means(ds)
    mu = ds.weights / ds.total_weight
    m = float(mu @ ds.points[:, 0])
    vbar = float(mu @ (ds.points[:, 0] - m) ** 2)
    x = ds.points[-1, 0]
    q_star = Query([[m - vbar * (x - m) / (x - m) ** 2]])
    g = g_function(ds, sigma, q_star)
    assert g[-1] == pytest.approx(1.0, abs=1e-9)
    assert np.all(g <= 1 + 1e-9) and np.all(g >= 0)


def test_g_mean_identity_under_sampling_law():
    ds = WeightedDataset(rng.standard_normal((60, 2)))
    details = build_details(ds, 2, m=30, seed=seed)
    s = details.profile.values
    mu = ds.weights / ds.total_weight
    total = float(mu @ s)
    for q in (Query(rng.standard_normal((2, 2))), details.seeds.centers):
        g = g_function(ds, s, q, q=details.q)
        assert float(details.q @ g) == pytest.approx(1.0 / total, abs=1e-9)


def test_g_detects_violated_bound():
    ds = WeightedDataset(rng.standard_normal((40, 1)))
    sigma = exact_sensitivity_1means(ds)
    with pytest.raises(ValueError, match="violated"):
        # halving a valid bound makes some share exceed it at its argmax query
        mu = ds.weights / ds.total_weight
        m = float(mu @ ds.points[:, 0])
        vbar = float(mu @ (ds.points[:, 0] - m) ** 2)
        x = ds.points[0, 0]
        g_function(ds, sigma / 2, Query([[m - vbar / (x - m)]]))


def test_g_validation():
    ds = WeightedDataset([[0.0], [1.0]])
    with pytest.raises(ValueError, match="shape"):
        g_function(ds, np.ones(3), Query([[0.5]]))
    with pytest.raises(ValueError, match="zero cost"):
        g_function(ds, np.ones(2), Query([[0.0], [1.0]]))
    with pytest.raises(ValueError, match="shape"):
        g_function(ds, np.ones(2), Query([[0.5]]), q=np.ones(5) / 5)


def test_g_zero_mass_points_report_zero():
    ds = WeightedDataset([[0.0], [1.0], [2.0]], [1.0, 1.0, 0.0])
    g = g_function(ds, np.array([4.0, 4.0, 0.0]), Query([[0.25]]))
    assert g[2] == 0.0


def test_hoeffding_worked_example():
    # S^2 ln(2/delta) / (2 eps^2) at S=2, eps=0.1, delta=0.05
    assert hoeffding_m(2, 0.1, 0.05) == 738
    assert hoeffding_m(2, 0.05, 0.05) == 2952


def test_hoeffding_validation():
    for bad in [(0.0, 0.1, 0.1), (2.0, 0.0, 0.1), (2.0, 0.1, 1.0)]:
        with pytest.raises(ValueError):
            hoeffding_m(*bad)


def test_calibrate_reports_sweep():
    small = WeightedDataset(rng.standard_normal((300, 2)))
    suite = QuerySuite.default(small, 2, seed=seed, n_random=5, n_d2=2,
                               n_perturbed=1)
    result = calibrate_c_size(small, 2, epsilon=0.5, seeds=1,
                              grid=(1e-4, 1e-2), suite=suite, base_seed=seed)
    assert result.c_size in (1e-4, 1e-2)
    assert result.m >= 1
    assert result.epsilon == 0.5
    assert 1 <= len(result.max_error_by_c) <= 2
    assert "c_size" in result.summary()
