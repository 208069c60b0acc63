import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from feedback_kmeans import (
    KMeansConfig,
    assign_points,
    init_centroids,
    lloyd,
    lloyd_history,
    repair_empty,
    update_centroids,
    validate_clustering,
)
from feedback_kmeans.kmeans import weighted_rss

from helpers import make_dataset


# ---------------------------------------------------------------- init

def test_init_forced_selection_with_exactly_k_points():
    ds = make_dataset([[0, 0], [5, 5], [9, 1]])
    centroids = init_centroids(ds, k=3, seed=0)
    assert sorted(centroids.tolist()) == sorted(ds.points.tolist())


def test_init_deterministic_per_seed():
    rng = np.random.default_rng(1)
    ds = make_dataset(rng.normal(size=(200, 4)))
    first = init_centroids(ds, k=5, seed=99)
    second = init_centroids(ds, k=5, seed=99)
    np.testing.assert_array_equal(first, second)


def test_init_seeds_differ():
    rng = np.random.default_rng(2)
    ds = make_dataset(rng.normal(size=(1000, 3)))
    a = init_centroids(ds, k=3, seed=0)
    b = init_centroids(ds, k=3, seed=1)
    assert not np.array_equal(a, b)


def test_init_errors_on_too_few_distinct_points():
    ds = make_dataset([[1, 1], [1, 1], [2, 2]])
    with pytest.raises(ValueError, match="k exceeds distinct points"):
        init_centroids(ds, k=3, seed=0)
    centroids = init_centroids(ds, k=2, seed=0)
    assert len(np.unique(centroids, axis=0)) == 2


# ---------------------------------------------------------------- assign

def test_assign_point_on_centroid():
    ds = make_dataset([[3.0, 3.0]])
    centroids = np.array([[0.0, 0.0], [9.0, 9.0], [3.0, 3.0]])
    assert assign_points(ds, centroids).tolist() == [2]


def test_assign_tie_goes_to_lowest_index():
    ds = make_dataset([[1.0, 0.0]])
    centroids = np.array([[0.0, 0.0], [2.0, 0.0]])
    assert assign_points(ds, centroids).tolist() == [0]


def test_assign_hand_computed_two_centroids():
    # squared distances to (0,0) / (10,0): (4,1) -> 17 vs 37; (6,-1) -> 37 vs 17
    ds = make_dataset([[4.0, 1.0], [6.0, -1.0]])
    centroids = np.array([[0.0, 0.0], [10.0, 0.0]])
    assert assign_points(ds, centroids).tolist() == [0, 1]


def test_assign_rejects_dimension_mismatch():
    ds = make_dataset([[1.0, 2.0]])
    with pytest.raises(ValueError, match="dimension"):
        assign_points(ds, np.zeros((2, 3)))


# ---------------------------------------------------------------- update

def test_update_single_cluster_mean():
    ds = make_dataset([[0.0, 0.0], [2.0, 0.0]])
    centroids, empties = update_centroids(ds, np.array([0, 0]), k=1)
    np.testing.assert_array_equal(centroids, [[1.0, 0.0]])
    assert empties == []


def test_update_reports_empties():
    ds = make_dataset([[0.0, 0.0], [2.0, 0.0]])
    centroids, empties = update_centroids(ds, np.array([0, 0]), k=2)
    assert empties == [1]
    assert np.isnan(centroids[1]).all()


def test_update_matches_independent_summation():
    rng = np.random.default_rng(7)
    ds = make_dataset(rng.normal(size=(50, 3)))
    assignment = rng.integers(0, 3, size=50)
    assignment[:3] = [0, 1, 2]
    centroids, empties = update_centroids(ds, assignment, k=3)
    assert empties == []
    for cid in range(3):
        members = ds.points[assignment == cid]
        expected = [sum(float(p[d]) for p in members) / len(members) for d in range(3)]
        np.testing.assert_allclose(centroids[cid], expected, rtol=0, atol=1e-12)


# ---------------------------------------------------------------- repair

def test_repair_moves_farthest_point():
    ds = make_dataset([[0.0, 0.0], [1.0, 0.0], [5.0, 0.0]])
    centroids = np.array([[0.0, 0.0], [0.0, 0.0]])
    assignment = np.array([0, 0, 0])  # everything ties to cluster 0
    repaired = repair_empty(ds, assignment, centroids, [1])
    assert repaired.assignment.tolist() == [0, 0, 1]  # farthest point moved
    np.testing.assert_array_equal(repaired.centroids[1], [5.0, 0.0])
    assert validate_clustering(ds, repaired) == []


def test_repair_without_empties_is_identity():
    ds = make_dataset([[0.0, 0.0], [5.0, 0.0]])
    centroids = np.array([[0.0, 0.0], [5.0, 0.0]])
    assignment = np.array([0, 1])
    repaired = repair_empty(ds, assignment, centroids, [])
    np.testing.assert_array_equal(repaired.assignment, assignment)
    np.testing.assert_array_equal(repaired.centroids, centroids)


def test_repair_line_dataset_passes_validation():
    ds = make_dataset([[float(i), 0.0] for i in range(10)])
    centroids = np.array([[0.0, 0.0], [9.0, 0.0], [100.0, 0.0]])
    assignment = assign_points(ds, centroids)  # cluster 2 ends up empty
    assert 2 not in assignment
    repaired = repair_empty(ds, assignment, centroids, [2])
    assert validate_clustering(ds, repaired) == []


def test_repair_never_drains_a_singleton_donor():
    # all points sit on their centroids (distance ties everywhere); the
    # donor must come from the 2-point cluster, not the singleton, or the
    # repair would just move the hole around
    ds = make_dataset([[5.0], [0.0], [0.0]])
    assignment = np.array([1, 0, 0])
    centroids = np.array([[0.0], [5.0], [7.0]])  # cluster 2 empty
    repaired = repair_empty(ds, assignment, centroids, [2])
    assert validate_clustering(ds, repaired) == []
    assert repaired.assignment[0] == 1  # the singleton kept its point
    assert sorted(repaired.sizes().tolist()) == [1, 1, 1]


def test_repair_impossible_when_k_exceeds_points():
    ds = make_dataset([[0.0, 0.0], [1.0, 0.0]])
    with pytest.raises(ValueError, match="repair"):
        repair_empty(ds, np.array([0, 1]), np.zeros((3, 2)), [2])


# ---------------------------------------------------------------- lloyd

def test_lloyd_recovers_separated_blobs(two_blobs):
    clustering = lloyd(two_blobs, KMeansConfig(k=2, seed=5))
    assert validate_clustering(two_blobs, clustering) == []
    for cid in range(2):
        segments = two_blobs.hidden_segment[clustering.members(cid)]
        _, counts = np.unique(segments, return_counts=True)
        assert counts.max() / counts.sum() >= 0.95


def test_lloyd_every_point_its_own_cluster():
    ds = make_dataset([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0], [9.0, 9.0]])
    clustering = lloyd(ds, KMeansConfig(k=4, seed=0))
    assert sorted(clustering.assignment.tolist()) == [0, 1, 2, 3]
    assert weighted_rss(ds, clustering.assignment, clustering.centroids) == 0.0


def test_lloyd_no_worse_than_first_assignment():
    rng = np.random.default_rng(11)
    ds = make_dataset(rng.normal(size=(120, 4)))
    for seed in range(5):
        _, history = lloyd_history(ds, KMeansConfig(k=4, seed=seed))
        assert history[-1] <= history[0] + 1e-12


def test_lloyd_deterministic_bit_for_bit(two_blobs):
    a = lloyd(two_blobs, KMeansConfig(k=3, seed=21))
    b = lloyd(two_blobs, KMeansConfig(k=3, seed=21))
    np.testing.assert_array_equal(a.assignment, b.assignment)
    np.testing.assert_array_equal(a.centroids, b.centroids)


def test_lloyd_assignment_is_idempotent_after_convergence(two_blobs):
    clustering = lloyd(two_blobs, KMeansConfig(k=3, seed=4))
    again = assign_points(two_blobs, clustering.centroids)
    np.testing.assert_array_equal(again, clustering.assignment)


def test_lloyd_rejects_oversized_k():
    ds = make_dataset([[0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(ValueError):
        lloyd(ds, KMeansConfig(k=3, seed=0))


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2**31),
    n=st.integers(min_value=6, max_value=40),
    k=st.integers(min_value=2, max_value=5),
)
def test_lloyd_objective_monotone(seed, n, k):
    rng = np.random.default_rng(seed)
    ds = make_dataset(rng.normal(size=(n, 2)))
    k = min(k, len(np.unique(ds.points, axis=0)))
    clustering, history = lloyd_history(ds, KMeansConfig(k=k, seed=seed))
    assert validate_clustering(ds, clustering) == []
    for earlier, later in zip(history, history[1:]):
        assert later <= earlier + 1e-12 * max(1.0, abs(earlier))


def test_config_validation():
    with pytest.raises(ValueError):
        KMeansConfig(k=0, seed=1)
    with pytest.raises(ValueError):
        KMeansConfig(k=2, seed=1, max_iterations=0)
    with pytest.raises(ValueError):
        KMeansConfig(k=2, seed=1, tolerance=-1.0)
