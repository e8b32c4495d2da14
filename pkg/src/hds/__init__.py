"""Hyperellipsoid density sampling.

A non-uniform sequence generator for high-dimensional optimization: an
initial Sobol set is clustered into PCA-oriented hyperellipsoids and the
requested samples are drawn inside them, concentrating density in the
statistically promising interior of the search box. Ships with L2
discrepancy metrics, a best1bin differential-evolution optimizer, and a
paired benchmark harness.
"""

__version__ = "0.1.0"

from .bench import (
    BenchmarkFunction,
    ComparisonSummary,
    evaluate_function,
    format_summary_table,
    get_function,
    run_experiment,
    run_trial,
    summarize,
)
from .clustering import (
    KMeansModel,
    LinkageMerge,
    ahc_linkage,
    initial_cluster_count,
    minibatch_kmeans,
    select_cluster_count,
)
from .core import (
    Bounds,
    EllipsoidModel,
    GaussianWeightSpec,
    HdsConfig,
    HdsDetails,
    allocate_samples,
    apply_gaussian_weights,
    build_ellipsoids,
    denormalize,
    hds_generate,
    normalize,
    reject_and_fill,
    sample_ellipsoid,
    sequence_to_csv,
    sequence_to_json,
)
from .de import (
    DeConfig,
    DeResult,
    TrialRecord,
    differential_evolution,
    make_init_population,
)
from .discrepancy import DiscrepancyReport, centered_l2, l2_star
from .errors import ConfigurationError, StateError
from .numerics import (
    PcaResult,
    chi2_cdf,
    chi2_quantile,
    marsaglia_unit_directions,
    pca_fit,
    radial_scale_factor,
    truncated_normal,
    truncated_normal_draw,
)
from .rng import RngStream
from .sobol import SobolEngine, initial_sample_count, sobol_points

__all__ = [
    "BenchmarkFunction",
    "Bounds",
    "ComparisonSummary",
    "ConfigurationError",
    "DeConfig",
    "DeResult",
    "DiscrepancyReport",
    "EllipsoidModel",
    "GaussianWeightSpec",
    "HdsConfig",
    "HdsDetails",
    "KMeansModel",
    "LinkageMerge",
    "PcaResult",
    "RngStream",
    "SobolEngine",
    "StateError",
    "TrialRecord",
    "ahc_linkage",
    "allocate_samples",
    "apply_gaussian_weights",
    "build_ellipsoids",
    "centered_l2",
    "chi2_cdf",
    "chi2_quantile",
    "denormalize",
    "differential_evolution",
    "evaluate_function",
    "format_summary_table",
    "get_function",
    "hds_generate",
    "initial_cluster_count",
    "initial_sample_count",
    "l2_star",
    "make_init_population",
    "marsaglia_unit_directions",
    "minibatch_kmeans",
    "normalize",
    "pca_fit",
    "radial_scale_factor",
    "reject_and_fill",
    "run_experiment",
    "run_trial",
    "sample_ellipsoid",
    "select_cluster_count",
    "sequence_to_csv",
    "sequence_to_json",
    "sobol_points",
    "summarize",
    "truncated_normal",
    "truncated_normal_draw",
]
