"""Subfield growth-trajectory clustering.

Each subfield traces a yearly trajectory in the (scaled consolidating,
scaled disruptive) plane.  Pairwise dynamic time warping distances over
those 2-d trajectories feed a Gaussian-kernel similarity matrix, which is
clustered with Leiden community detection on the weighted complete graph.
Size-1 communities are flagged as singletons and excluded from cluster
numbering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .leiden import leiden_communities
from .panel import SubfieldSeries


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered 2-d points of one subfield (or one cluster mean).

    ``filled_years`` lists grid years that had no data and were zero-filled.
    """

    subfield_id: int
    years: tuple[int, ...]
    points: np.ndarray  # shape (n, 2)
    filled_years: tuple[int, ...] = ()

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] != len(self.years):
            raise ValueError(
                f"points must be ({len(self.years)}, 2), got {pts.shape}"
            )
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class DistanceMatrix:
    labels: tuple[int, ...]
    matrix: np.ndarray  # symmetric, zero diagonal


@dataclass(frozen=True)
class SimilarityMatrix:
    labels: tuple[int, ...]
    matrix: np.ndarray  # in (0, 1], unit diagonal
    sigma: float


@dataclass(frozen=True)
class ClusteringResult:
    """Cluster assignment of subfields; singletons carry no cluster id.

    Clusters are numbered from 1 by decreasing size (ties by smallest member
    label).  ``assignments`` maps every label to its cluster id or None for
    singletons.  ``mean_trajectories`` is filled via
    :func:`with_mean_trajectories`.
    """

    assignments: dict[int, int | None]
    cluster_members: dict[int, tuple[int, ...]]
    singletons: tuple[int, ...]
    seed: int
    resolution: float
    quality: float
    mean_trajectories: dict[int, Trajectory] | None = None


def trajectories_from_series(
    series_by_subfield: Mapping[int, SubfieldSeries],
    years: Sequence[int],
) -> list[Trajectory]:
    """Build (scaled CN, scaled DI) trajectories on a common year grid.

    Series must already carry scaled counts.  Grid years missing from a
    series are filled with 0 and flagged on the trajectory.
    """
    years = tuple(int(y) for y in years)
    out: list[Trajectory] = []
    for sub in sorted(series_by_subfield):
        series = series_by_subfield[sub]
        if series.scaled_cn is None or series.scaled_di is None:
            raise ValueError(f"series for subfield {sub} lacks scaled counts")
        have = {
            y: (cn, di)
            for y, cn, di in zip(series.years, series.scaled_cn, series.scaled_di)
        }
        points = np.zeros((len(years), 2))
        filled = []
        for i, y in enumerate(years):
            if y in have:
                points[i] = have[y]
            else:
                filled.append(y)
        out.append(Trajectory(sub, years, points, tuple(filled)))
    return out


def dtw_distance(
    a: Trajectory, b: Trajectory, *, per_component: bool = False
) -> float:
    """Dynamic-time-warping alignment cost between two trajectories.

    Classic unconstrained DP over match/insert/delete steps with Euclidean
    local cost on the 2-d points; no path normalization.  With
    ``per_component`` the two coordinates are warped independently (absolute
    local cost) and the costs summed.
    """
    if len(a.points) == 0 or len(b.points) == 0:
        raise ValueError("cannot warp an empty trajectory")
    if per_component:
        return _dtw_1d(a.points[:, 0], b.points[:, 0]) + _dtw_1d(
            a.points[:, 1], b.points[:, 1]
        )
    pa, pb = a.points, b.points
    n, m = len(pa), len(pb)
    inf = math.inf
    prev = [inf] * (m + 1)
    prev[0] = 0.0
    for i in range(1, n + 1):
        cur = [inf] * (m + 1)
        ax, ay = pa[i - 1]
        for j in range(1, m + 1):
            cost = math.hypot(ax - pb[j - 1, 0], ay - pb[j - 1, 1])
            cur[j] = cost + min(prev[j - 1], prev[j], cur[j - 1])
        prev = cur
    return prev[m]


def _dtw_1d(a: np.ndarray, b: np.ndarray) -> float:
    n, m = len(a), len(b)
    inf = math.inf
    prev = [inf] * (m + 1)
    prev[0] = 0.0
    for i in range(1, n + 1):
        cur = [inf] * (m + 1)
        av = a[i - 1]
        for j in range(1, m + 1):
            cur[j] = abs(av - b[j - 1]) + min(prev[j - 1], prev[j], cur[j - 1])
        prev = cur
    return prev[m]


def distance_matrix(
    trajectories: Sequence[Trajectory], *, per_component: bool = False
) -> DistanceMatrix:
    """Pairwise DTW distances, labels ordered by subfield id."""
    ordered = sorted(trajectories, key=lambda t: t.subfield_id)
    labels = tuple(t.subfield_id for t in ordered)
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate trajectory labels")
    n = len(ordered)
    matrix = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = dtw_distance(ordered[i], ordered[j], per_component=per_component)
            matrix[i, j] = d
            matrix[j, i] = d
    return DistanceMatrix(labels, matrix)


def default_sigma(distances: DistanceMatrix) -> float:
    """Kernel width: standard deviation of the off-diagonal distances.

    Falls back to 1.0 when every pair is equidistant (zero spread), which
    only happens on degenerate inputs where the width has no effect on the
    ordering of similarities anyway.
    """
    n = distances.matrix.shape[0]
    if n < 2:
        return 1.0
    off = distances.matrix[~np.eye(n, dtype=bool)]
    sigma = float(np.std(off))
    return sigma if sigma > 0 else 1.0


def similarity_matrix(distances: DistanceMatrix, sigma: float) -> SimilarityMatrix:
    """Gaussian kernel exp(-D^2 / (2 sigma^2)) applied elementwise."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    matrix = np.exp(-(distances.matrix**2) / (2.0 * sigma * sigma))
    return SimilarityMatrix(distances.labels, matrix, float(sigma))


def leiden_clusters(
    similarity: SimilarityMatrix, resolution: float = 1.0, seed: int = 0
) -> ClusteringResult:
    """Cluster the weighted complete graph of pairwise similarities.

    Labels are reordered canonically before the seeded run, so any input
    permutation of the same data yields the identical assignment mapping.
    """
    labels = similarity.labels
    if len(labels) < 2:
        raise ValueError("need at least 2 labels to cluster")
    matrix = np.asarray(similarity.matrix, dtype=float)
    if not np.allclose(matrix, matrix.T, atol=1e-9):
        raise ValueError("similarity matrix must be symmetric")
    if not np.allclose(np.diag(matrix), 1.0, atol=1e-9):
        raise ValueError("similarity matrix must have a unit diagonal")

    order = np.argsort(np.asarray(labels))
    canonical = tuple(labels[i] for i in order)
    weights = matrix[np.ix_(order, order)].copy()
    np.fill_diagonal(weights, 0.0)

    result = leiden_communities(weights, resolution=resolution, seed=seed)

    groups: dict[int, list[int]] = {}
    for label, community in zip(canonical, result.membership):
        groups.setdefault(community, []).append(label)
    clusters = sorted(
        (members for members in groups.values() if len(members) >= 2),
        key=lambda m: (-len(m), min(m)),
    )
    singletons = tuple(
        sorted(m[0] for m in groups.values() if len(m) == 1)
    )
    assignments: dict[int, int | None] = {label: None for label in canonical}
    cluster_members: dict[int, tuple[int, ...]] = {}
    for cid, members in enumerate(clusters, start=1):
        cluster_members[cid] = tuple(sorted(members))
        for label in members:
            assignments[label] = cid
    return ClusteringResult(
        assignments=assignments,
        cluster_members=cluster_members,
        singletons=singletons,
        seed=seed,
        resolution=resolution,
        quality=result.quality,
    )


def cluster_mean_trajectory(
    result: ClusteringResult, trajectories: Iterable[Trajectory]
) -> dict[int, Trajectory]:
    """Pointwise mean trajectory per cluster (the id is stored as the label).

    All member trajectories must share one year grid.  Attach the returned
    mapping to the result with :func:`with_mean_trajectories`.
    """
    by_label = {t.subfield_id: t for t in trajectories}
    means: dict[int, Trajectory] = {}
    for cid, members in result.cluster_members.items():
        missing = [m for m in members if m not in by_label]
        if missing:
            raise ValueError(f"no trajectory for cluster members {missing}")
        grids = {by_label[m].years for m in members}
        if len(grids) != 1:
            raise ValueError(f"cluster {cid} members have mismatched year grids")
        years = next(iter(grids))
        stack = np.stack([by_label[m].points for m in members])
        means[cid] = Trajectory(cid, years, stack.mean(axis=0))
    return means


def with_mean_trajectories(
    result: ClusteringResult, trajectories: Iterable[Trajectory]
) -> ClusteringResult:
    """Copy of the result with per-cluster mean trajectories filled in."""
    return replace(
        result, mean_trajectories=cluster_mean_trajectory(result, trajectories)
    )
