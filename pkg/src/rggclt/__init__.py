"""Circle geometric graphs: clustering-coefficient statistics and experiments."""

from ._version import __version__
from .analytics import (
    KernelValue,
    Regime,
    RegimeConstants,
    RegimeKind,
    RegimeThresholds,
    classify_regime,
    edge_probability_given,
    exact_triangle_probability,
    exact_twopath_probability,
    h1_leading,
    kernel_h,
    mu_n,
    scaling_factor,
    sigma2n_sq_mc,
    standardize,
)
from .density import (
    AsymptoticConstants,
    CircularDensity,
    DensityMoments,
    QuadratureError,
    constants,
    integrate_periodic,
    integrate_periodic_adaptive,
    moments,
    normalizer_I0,
)
from .experiments import (
    ExperimentConfig,
    ExperimentSummary,
    RegimeError,
    ReplicationRecord,
    expansion_scaling_check,
    ks_statistic,
    normal_cdf,
    records_to_csv,
    run_experiment,
    summarize_z,
    summary_to_json,
    table1_reproduce,
)
from .geometry import (
    SubgraphCounts,
    brute_force_counts,
    clustering_coefficient,
    count_triangles_edge_based,
    count_triangles_window,
    count_two_paths,
    counts,
    degrees,
)
from .sampler import PointSample, RngStream, circle_distance, derive_stream, sample_points

__all__ = [name for name in dir() if not name.startswith("_")]
