"""propclust: clustering pipeline for vacation-rental property classification.

Stages: ingestion and area-attribute enrichment, skew-aware preprocessing,
correlation-matrix PCA, k-means and CLARA k-medoids clustering with elbow
selection, validity scoring, and cluster profiling.
"""

__version__ = "0.1.0"

from .cluster import ClusterModel, ElbowCurve, clara, elbow_sweep, kmeans, kmeans_pp_init, kneedle, pam
from .ingest import (
    DateWindow,
    IngestReport,
    LsoaAttributes,
    SyntheticSpec,
    generate_synthetic,
    join_lsoa,
    load_properties,
)
from .pca import PcaModel, fit_pca, loadings_table, project
from .preprocess import PreprocessPlan, apply_plan, build_raw_matrix, fit_plan, measure_skewness
from .profiles import ClusterProfile, descriptive_series, profile_clusters, urban_rural_distribution
from .records import ColumnMeta, FeatureMatrix, PropertyRecord, validate_record
from .validate import (
    ValidationReport,
    adjusted_rand_index,
    calinski_harabasz,
    crosstab,
    davies_bouldin,
    select_model,
)

__all__ = [
    "ClusterModel",
    "ClusterProfile",
    "ColumnMeta",
    "DateWindow",
    "ElbowCurve",
    "FeatureMatrix",
    "IngestReport",
    "LsoaAttributes",
    "PcaModel",
    "PreprocessPlan",
    "PropertyRecord",
    "SyntheticSpec",
    "ValidationReport",
    "adjusted_rand_index",
    "apply_plan",
    "build_raw_matrix",
    "calinski_harabasz",
    "clara",
    "crosstab",
    "davies_bouldin",
    "descriptive_series",
    "elbow_sweep",
    "fit_pca",
    "fit_plan",
    "generate_synthetic",
    "join_lsoa",
    "kmeans",
    "kmeans_pp_init",
    "kneedle",
    "load_properties",
    "loadings_table",
    "measure_skewness",
    "pam",
    "profile_clusters",
    "project",
    "select_model",
    "urban_rural_distribution",
    "validate_record",
]
