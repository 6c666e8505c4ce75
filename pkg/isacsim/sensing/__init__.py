"""Sparse recovery, subspace baselines, data association and line-bundle fusion."""

from isacsim.sensing.association import (
    Clusters,
    KMeansClusters,
    association_cost,
    check_cluster_constraints,
    hungarian,
    kmeans_associate,
    line_point_sqdist,
    sequential_associate,
    symmetrized_cost,
)
from isacsim.sensing.cosamp import cosamp
from isacsim.sensing.fusion import FusedEstimate, fuse, fuse_clusters, fuse_lines
from isacsim.sensing.music import MusicResult, music_estimate, music_snapshots
from isacsim.sensing.omp import (
    CandidateSet,
    ResidualState,
    centralized_omp,
    exhaustive_support_search,
    local_omp,
    local_omp_all,
)

__all__ = [
    "CandidateSet",
    "ResidualState",
    "centralized_omp",
    "local_omp",
    "local_omp_all",
    "exhaustive_support_search",
    "cosamp",
    "MusicResult",
    "music_snapshots",
    "music_estimate",
    "Clusters",
    "KMeansClusters",
    "hungarian",
    "line_point_sqdist",
    "sequential_associate",
    "kmeans_associate",
    "association_cost",
    "symmetrized_cost",
    "check_cluster_constraints",
    "FusedEstimate",
    "fuse",
    "fuse_lines",
    "fuse_clusters",
]
