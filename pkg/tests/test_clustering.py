"""DTW distances, kernel similarity, Leiden clustering, mean trajectories."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scibreak.clustering import (
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
)
from scibreak.leiden import leiden_communities, modularity
from scibreak.panel import SubfieldSeries

from oracles import exhaustive_dtw


def _traj(label, points):
    points = np.asarray(points, dtype=float)
    years = tuple(range(2000, 2000 + len(points)))
    return Trajectory(label, years, points)


class TestDtw:
    def test_identical_trajectories(self):
        t = _traj(1, [[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]])
        assert dtw_distance(t, t) == 0.0

    def test_single_cell(self):
        assert dtw_distance(_traj(1, [[0, 0]]), _traj(2, [[3, 4]])) == 5.0

    def test_diagonal_path(self):
        a = _traj(1, [[0, 0], [1, 1]])
        b = _traj(2, [[0, 0], [2, 2]])
        assert dtw_distance(a, b) == pytest.approx(math.sqrt(2), abs=1e-15)

    def test_empty_rejected(self):
        empty = Trajectory(1, (), np.zeros((0, 2)))
        with pytest.raises(ValueError):
            dtw_distance(empty, _traj(2, [[0, 0]]))

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(41)
        for _ in range(120):
            n = int(rng.integers(1, 7))
            m = int(rng.integers(1, 7))
            a = _traj(1, rng.random((n, 2)))
            b = _traj(2, rng.random((m, 2)))
            assert dtw_distance(a, b) == pytest.approx(
                exhaustive_dtw(a.points, b.points), abs=1e-12
            )

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(
            st.tuples(
                st.floats(0, 1, allow_nan=False), st.floats(0, 1, allow_nan=False)
            ),
            min_size=1,
            max_size=5,
        ),
        st.lists(
            st.tuples(
                st.floats(0, 1, allow_nan=False), st.floats(0, 1, allow_nan=False)
            ),
            min_size=1,
            max_size=5,
        ),
    )
    def test_symmetry_and_self_distance(self, pa, pb):
        a = _traj(1, pa)
        b = _traj(2, pb)
        assert dtw_distance(a, b) == pytest.approx(dtw_distance(b, a), abs=1e-12)
        assert dtw_distance(a, a) == 0.0
        assert dtw_distance(a, b) >= 0.0

    def test_per_component_mode(self):
        a = _traj(1, [[0, 0], [1, 0]])
        b = _traj(2, [[0, 1], [1, 1]])
        # each x-series warps for free, y differs by 1 at both steps
        assert dtw_distance(a, b, per_component=True) == pytest.approx(2.0)


class TestDistanceMatrix:
    def test_symmetric_zero_diagonal(self):
        rng = np.random.default_rng(42)
        trajs = [_traj(i, rng.random((4, 2))) for i in range(5)]
        D = distance_matrix(trajs)
        assert D.labels == (0, 1, 2, 3, 4)
        assert np.allclose(D.matrix, D.matrix.T)
        assert np.diag(D.matrix).tolist() == [0.0] * 5

    def test_duplicate_labels_rejected(self):
        trajs = [_traj(1, [[0, 0]]), _traj(1, [[1, 1]])]
        with pytest.raises(ValueError):
            distance_matrix(trajs)


class TestSimilarity:
    def test_zero_distance_gives_unit(self):
        D = DistanceMatrix((1, 2), np.array([[0.0, 0.0], [0.0, 0.0]]))
        assert similarity_matrix(D, 1.0).matrix.tolist() == [[1, 1], [1, 1]]

    def test_kernel_at_sigma(self):
        D = DistanceMatrix((1, 2), np.array([[0.0, 2.0], [2.0, 0.0]]))
        S = similarity_matrix(D, 2.0)
        assert S.matrix[0, 1] == pytest.approx(math.exp(-0.5), abs=1e-15)

    def test_monotone_decay_and_bounds(self):
        distances = np.array([0.0, 0.5, 1.0, 2.0, 5.0, 50.0])
        n = len(distances)
        D = DistanceMatrix(
            tuple(range(n)), np.abs(distances[:, None] - distances[None, :])
        )
        S = similarity_matrix(D, 1.5)
        row = S.matrix[0]
        assert (np.diff(row) < 0).all()
        assert (S.matrix > 0).all()
        assert (S.matrix <= 1.0).all()

    def test_bad_sigma(self):
        D = DistanceMatrix((1, 2), np.zeros((2, 2)))
        for sigma in (0.0, -1.0):
            with pytest.raises(ValueError):
                similarity_matrix(D, sigma)

    def test_default_sigma_is_offdiagonal_std(self):
        matrix = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [2.0, 3.0, 0.0]])
        D = DistanceMatrix((1, 2, 3), matrix)
        off = matrix[~np.eye(3, dtype=bool)]
        assert default_sigma(D) == pytest.approx(float(np.std(off)))

    def test_default_sigma_degenerate_fallback(self):
        D = DistanceMatrix((1, 2), np.zeros((2, 2)))
        assert default_sigma(D) == 1.0


def _block_similarity(sizes, within=0.9, across=0.01):
    n = sum(sizes)
    matrix = np.full((n, n), across)
    start = 0
    for size in sizes:
        matrix[start : start + size, start : start + size] = within
        start += size
    np.fill_diagonal(matrix, 1.0)
    return SimilarityMatrix(tuple(range(n)), matrix, 1.0)


class TestLeidenClusters:
    def test_two_block_recovery(self):
        similarity = _block_similarity([3, 4])
        result = leiden_clusters(similarity, seed=5)
        assert len(result.cluster_members) == 2
        assert result.singletons == ()
        assert result.cluster_members[1] == (3, 4, 5, 6)  # larger block first
        assert result.cluster_members[2] == (0, 1, 2)

    def test_fixed_seed_reproducible(self):
        similarity = _block_similarity([4, 3, 5], within=0.7, across=0.05)
        first = leiden_clusters(similarity, seed=11)
        second = leiden_clusters(similarity, seed=11)
        assert first.assignments == second.assignments
        assert first.quality == second.quality

    def test_all_equal_similarity_is_deterministic(self):
        n = 6
        matrix = np.ones((n, n))
        similarity = SimilarityMatrix(tuple(range(n)), matrix, 1.0)
        first = leiden_clusters(similarity, seed=3)
        second = leiden_clusters(similarity, seed=3)
        assert first.assignments == second.assignments
        for label, cluster in first.assignments.items():
            if cluster is None:
                assert label in first.singletons
            else:
                assert len(first.cluster_members[cluster]) >= 2

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(43)
        base = _block_similarity([3, 3, 2], within=0.8, across=0.1)
        perm = rng.permutation(8)
        shuffled = SimilarityMatrix(
            tuple(int(base.labels[i]) for i in perm),
            base.matrix[np.ix_(perm, perm)],
            1.0,
        )
        assert leiden_clusters(base, seed=9).assignments == (
            leiden_clusters(shuffled, seed=9).assignments
        )

    def test_too_few_labels(self):
        similarity = SimilarityMatrix((1,), np.ones((1, 1)), 1.0)
        with pytest.raises(ValueError):
            leiden_clusters(similarity, seed=0)

    def test_singleton_flagging(self):
        # two tight blocks plus one node similar to nothing; a uniformly
        # weak node only separates above resolution 1 (the null model makes
        # joining some block a wash at resolution 1)
        matrix = np.full((7, 7), 0.01)
        matrix[:3, :3] = 0.9
        matrix[3:6, 3:6] = 0.9
        matrix[6, :] = 1e-6
        matrix[:, 6] = 1e-6
        np.fill_diagonal(matrix, 1.0)
        result = leiden_clusters(
            SimilarityMatrix(tuple(range(7)), matrix, 1.0),
            resolution=2.0,
            seed=2,
        )
        assert result.singletons == (6,)
        assert result.assignments[6] is None
        assert len(result.cluster_members) == 2


class TestLeidenCore:
    def test_quality_matches_modularity(self):
        rng = np.random.default_rng(44)
        W = rng.random((10, 10))
        W = 0.5 * (W + W.T)
        np.fill_diagonal(W, 0.0)
        result = leiden_communities(W, seed=1)
        assert result.quality == pytest.approx(
            modularity(W, result.membership), abs=1e-12
        )

    def test_partition_beats_singletons_and_whole(self):
        W = np.full((6, 6), 0.01)
        W[:3, :3] = 0.9
        W[3:, 3:] = 0.9
        np.fill_diagonal(W, 0.0)
        result = leiden_communities(W, seed=7)
        q_found = result.quality
        assert q_found >= modularity(W, list(range(6)))
        assert q_found >= modularity(W, [0] * 6)

    def test_negative_weights_rejected(self):
        W = np.array([[0.0, -1.0], [-1.0, 0.0]])
        with pytest.raises(ValueError):
            leiden_communities(W)

    def test_zero_graph_all_singletons(self):
        result = leiden_communities(np.zeros((4, 4)))
        assert result.membership == (0, 1, 2, 3)


class TestMeanTrajectories:
    def test_duplicate_member_mean_is_identity(self):
        t = _traj(1, [[0.1, 0.2], [0.3, 0.4]])
        u = Trajectory(2, t.years, t.points.copy())
        result = _cluster_of([t, u])
        means = cluster_mean_trajectory(result, [t, u])
        assert np.allclose(means[1].points, t.points)

    def test_midpoint(self):
        t = _traj(1, [[0, 0], [0, 0]])
        u = _traj(2, [[1, 1], [1, 1]])
        means = cluster_mean_trajectory(_cluster_of([t, u]), [t, u])
        assert np.allclose(means[1].points, 0.5)

    def test_attached_to_result(self):
        from scibreak.clustering import with_mean_trajectories

        t = _traj(1, [[0, 0], [0, 0]])
        u = _traj(2, [[1, 1], [1, 1]])
        result = with_mean_trajectories(_cluster_of([t, u]), [t, u])
        assert result.mean_trajectories is not None
        assert np.allclose(result.mean_trajectories[1].points, 0.5)

    def test_mean_of_identical_members_invariant_in_count(self):
        base = _traj(1, [[0.2, 0.8], [0.6, 0.4]])
        for k in (2, 3, 5):
            members = [Trajectory(i, base.years, base.points.copy()) for i in range(k)]
            means = cluster_mean_trajectory(_cluster_of(members), members)
            assert np.allclose(means[1].points, base.points)

    def test_mean_inside_convex_hull_per_year(self):
        rng = np.random.default_rng(45)
        members = [_traj(i, rng.random((6, 2))) for i in range(4)]
        means = cluster_mean_trajectory(_cluster_of(members), members)
        stack = np.stack([m.points for m in members])
        assert (means[1].points >= stack.min(axis=0) - 1e-12).all()
        assert (means[1].points <= stack.max(axis=0) + 1e-12).all()

    def test_mismatched_grids_rejected(self):
        t = _traj(1, [[0, 0], [1, 1]])
        u = Trajectory(2, (1990, 1991), np.zeros((2, 2)))
        with pytest.raises(ValueError):
            cluster_mean_trajectory(_cluster_of([t, u]), [t, u])


def _cluster_of(members):
    """A ClusteringResult placing all member labels in cluster 1."""
    from scibreak.clustering import ClusteringResult

    labels = [t.subfield_id for t in members]
    return ClusteringResult(
        assignments={label: 1 for label in labels},
        cluster_members={1: tuple(sorted(labels))},
        singletons=(),
        seed=0,
        resolution=1.0,
        quality=0.0,
    )


class TestTrajectoriesFromSeries:
    def test_missing_years_zero_filled_and_flagged(self):
        series = SubfieldSeries(
            subfield_id=3101,
            years=(2000, 2002),
            n_total=(10, 10),
            n_bt=(2, 2),
            n_cn=(1, 1),
            n_di=(1, 1),
            scaled_cn=(0.1, 0.1),
            scaled_di=(0.1, 0.1),
        )
        trajs = trajectories_from_series({3101: series}, [2000, 2001, 2002])
        assert trajs[0].filled_years == (2001,)
        assert trajs[0].points[1].tolist() == [0.0, 0.0]
        assert trajs[0].points[0].tolist() == [0.1, 0.1]

    def test_requires_scaled_counts(self):
        series = SubfieldSeries(
            subfield_id=3101,
            years=(2000,),
            n_total=(1,),
            n_bt=(0,),
            n_cn=(0,),
            n_di=(0,),
        )
        with pytest.raises(ValueError):
            trajectories_from_series({3101: series}, [2000])
