"""Driver-behaviour segmentation from CAN bus signals.

Signals are resampled to 4 Hz, turned into seven per-user feature vectors,
summarised as 10-bin histograms and clustered with K-means; the number of
clusters is chosen by train/validation V-measure agreement.
"""

from .errors import DriveClusterError
from .experiments import (
    ClusterOptions,
    CrossValResult,
    SubsampleCurve,
    cross_validate,
    robustness_curve,
    select_optimal_k,
    split_train_validation,
    subsample_contiguous,
    subsample_independent,
)
from .features import FeatureKind, FeatureVector, extract_feature, singular_points
from .histogram import BinSpec, build_histogram, global_bin_spec, histogram_set, trim_percentiles
from .ingest import (
    SampleSeries,
    SignalKind,
    UniformSeries,
    UserRecord,
    filter_min_duration,
    parse_session_log,
    resample_linear,
)
from .learn import Clustering, PcaProjection, kmeans, pca_project, v_measure
from .synth import FleetSpec, generate_synthetic_fleet, make_archetype

__version__ = "0.1.0"

__all__ = [
    "BinSpec",
    "build_histogram",
    "Clustering",
    "ClusterOptions",
    "cross_validate",
    "CrossValResult",
    "DriveClusterError",
    "extract_feature",
    "FeatureKind",
    "FeatureVector",
    "filter_min_duration",
    "FleetSpec",
    "generate_synthetic_fleet",
    "global_bin_spec",
    "histogram_set",
    "kmeans",
    "make_archetype",
    "parse_session_log",
    "pca_project",
    "PcaProjection",
    "resample_linear",
    "robustness_curve",
    "SampleSeries",
    "select_optimal_k",
    "SignalKind",
    "singular_points",
    "split_train_validation",
    "subsample_contiguous",
    "subsample_independent",
    "SubsampleCurve",
    "trim_percentiles",
    "UniformSeries",
    "UserRecord",
    "v_measure",
]

