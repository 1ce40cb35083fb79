"""Breakthrough analytics over scholarly citation graphs.

Builds an immutable citation corpus, scores works with network-normalized
citations (NBNC) and the CD disruption index, selects yearly breakthroughs,
clusters subfield growth trajectories (DTW + Gaussian kernel + Leiden), and
ranks countries and subfields by bipartite complexity (RCA + GENEPY).
"""

from .analysis import (
    GerdMean,
    IndicatorValue,
    InsufficientDataError,
    PowerLawFit,
    gerd_means,
    loglog_fit,
    read_indicator_file,
    spearman,
)
from .clustering import (
    ClusteringResult,
    DistanceMatrix,
    SimilarityMatrix,
    Trajectory,
    cluster_mean_trajectory,
    default_sigma,
    distance_matrix,
    dtw_distance,
    leiden_clusters,
    similarity_matrix,
    trajectories_from_series,
    with_mean_trajectories,
)
from .complexity import (
    BinaryAdjacency,
    GenepyResult,
    RcaMatrix,
    binarize,
    degree_vectors,
    genepy_scores,
    rank_table,
    rca,
)
from .config import ConfigError, PipelineConfig
from .corpus import (
    CitationCorpus,
    CocitedBag,
    FieldMap,
    IngestReport,
    SnapshotError,
    UnknownWorkError,
    WorkRecord,
    YearlyCitationSeries,
    cocited_bag,
    ingest_files,
    ingest_works,
    yearly_citation_series,
)
from .eigen import EigenConvergenceError, EigenPair, top_eigenpairs_symmetric
from .impact import (
    BreakthroughClass,
    CdScore,
    NbncScore,
    cd_all,
    cd_index,
    classify,
    nbnc,
    nbnc_all,
)
from .leiden import LeidenResult, leiden_communities, modularity
from .panel import (
    BreakthroughRecord,
    PanelMatrix,
    SeriesResult,
    SubfieldSeries,
    country_subfield_counts,
    decade_windows,
    scaled_counts,
    select_breakthroughs,
    subfield_series,
)
from .pipeline import StageError, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "BinaryAdjacency",
    "BreakthroughClass",
    "BreakthroughRecord",
    "CdScore",
    "CitationCorpus",
    "ClusteringResult",
    "CocitedBag",
    "ConfigError",
    "DistanceMatrix",
    "EigenConvergenceError",
    "EigenPair",
    "FieldMap",
    "GenepyResult",
    "GerdMean",
    "IndicatorValue",
    "IngestReport",
    "InsufficientDataError",
    "LeidenResult",
    "NbncScore",
    "PanelMatrix",
    "PipelineConfig",
    "PowerLawFit",
    "RcaMatrix",
    "SeriesResult",
    "SimilarityMatrix",
    "SnapshotError",
    "StageError",
    "SubfieldSeries",
    "Trajectory",
    "UnknownWorkError",
    "WorkRecord",
    "YearlyCitationSeries",
    "binarize",
    "cd_all",
    "cd_index",
    "classify",
    "cluster_mean_trajectory",
    "cocited_bag",
    "country_subfield_counts",
    "decade_windows",
    "default_sigma",
    "degree_vectors",
    "distance_matrix",
    "dtw_distance",
    "genepy_scores",
    "gerd_means",
    "ingest_files",
    "ingest_works",
    "leiden_clusters",
    "leiden_communities",
    "loglog_fit",
    "modularity",
    "nbnc",
    "nbnc_all",
    "rank_table",
    "rca",
    "read_indicator_file",
    "run_pipeline",
    "scaled_counts",
    "select_breakthroughs",
    "similarity_matrix",
    "spearman",
    "subfield_series",
    "top_eigenpairs_symmetric",
    "trajectories_from_series",
    "with_mean_trajectories",
    "yearly_citation_series",
]
