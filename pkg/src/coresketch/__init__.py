"""Provably competitive coresets for k-means via sensitivity sampling.

The package reduces a large weighted dataset to a small weighted summary
whose clustering cost agrees with the full data on every candidate solution
up to a relative epsilon, solves k-means on the summary, and measures the
guarantee empirically. Construction composes under merging, which gives the
streaming (merge-reduce) and distributed builders for free.
"""

from .builder import (
    BuildDetails,
    Coreset,
    Provenance,
    SampleSizeSpec,
    build_details,
    build_kmeans_coreset,
    importance_sample,
    recommended_m,
    uniform_baseline,
)
from .data import (
    CostModel,
    Query,
    WeightedDataset,
    as_query,
    nearest_centers,
    point_cost,
    sq_distances,
    total_cost,
    whiten,
)
from .datagen import adversarial, gaussian_mixture, generate, uniform_box
from .estimators import CoresetKMeans, CoresetSampler
from .harness import (
    CalibrationResult,
    ErrorReport,
    QueryError,
    QuerySuite,
    calibrate_c_size,
    coreset_error,
    g_function,
    hoeffding_m,
)
from .io import (
    load_dataset,
    read_binary,
    read_csv,
    save_dataset,
    serialized_size,
    write_binary,
    write_csv,
)
from .seeding import Bicriteria, alpha_for, bicriteria, d2_sample
from .sensitivity import (
    SensitivityProfile,
    exact_sensitivity_1means,
    grid_sensitivity_oracle,
    sensitivity_bound,
    total_sensitivity_bound,
)
from .solver import (
    CoresetSolveResult,
    PartitionCapError,
    Solution,
    lloyd_best_of,
    partition_count,
    ptas_exhaustive,
    solve_via_coreset,
    weighted_lloyd,
)
from .streaming import DistributedResult, MergeReduceTree, distributed_build, merge_coresets

__version__ = "0.1.0"

__all__ = [
    "WeightedDataset", "Query", "as_query", "CostModel",
    "total_cost", "nearest_centers", "point_cost", "sq_distances", "whiten",
    "read_csv", "write_csv", "read_binary", "write_binary",
    "load_dataset", "save_dataset", "serialized_size",
    "alpha_for", "Bicriteria", "bicriteria", "d2_sample",
    "SensitivityProfile", "sensitivity_bound", "total_sensitivity_bound",
    "exact_sensitivity_1means", "grid_sensitivity_oracle",
    "Provenance", "Coreset", "SampleSizeSpec", "recommended_m",
    "importance_sample", "BuildDetails", "build_details",
    "build_kmeans_coreset", "uniform_baseline",
    "Solution", "PartitionCapError", "weighted_lloyd", "lloyd_best_of",
    "partition_count", "ptas_exhaustive", "CoresetSolveResult", "solve_via_coreset",
    "QuerySuite", "QueryError", "ErrorReport", "coreset_error",
    "g_function", "hoeffding_m", "CalibrationResult", "calibrate_c_size",
    "MergeReduceTree", "merge_coresets", "distributed_build", "DistributedResult",
    "generate", "adversarial", "uniform_box", "gaussian_mixture",
    "CoresetSampler", "CoresetKMeans",
    "__version__",
]
