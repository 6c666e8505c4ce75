import itertools

import numpy as np
import pytest

from isacsim.errors import ContractViolation
from isacsim.orchestrator.deployment import build_grid
from isacsim.sensing.association import (
    Clusters,
    association_cost,
    association_cost_matrix,
    check_cluster_constraints,
    hungarian,
    kmeans_associate,
    line_line_sqdist,
    line_point_sqdist,
    sequential_associate,
    symmetrized_cost,
)
from isacsim.sensing.omp import CandidateSet

GATEWAYS = np.array([[1.0, 1.0, 0.0], [1.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [-1.0, -1.0, 0.0]])


@pytest.fixture
def grid(desk_scenario):
    return build_grid(desk_scenario.grid)


class TestLineDistances:
    def test_point_to_line(self):
        assert line_point_sqdist([0, 0, 0], [0, 0, 1], [1, 0, 5]) == pytest.approx(1.0)

    def test_point_on_line(self):
        assert line_point_sqdist([0, 0, 0], [1, 1, 1], [3, 3, 3]) == pytest.approx(0.0)

    def test_coincident_endpoints_rejected(self):
        with pytest.raises(ContractViolation):
            line_point_sqdist([1, 2, 3], [1, 2, 3], [0, 0, 0])

    def test_skew_lines(self):
        assert line_line_sqdist([0, 0, 0], [1, 0, 0], [0, 0, 2], [0, 1, 2]) == pytest.approx(4.0)

    def test_parallel_lines(self):
        assert line_line_sqdist([0, 0, 0], [1, 0, 0], [0, 3, 0], [1, 3, 0]) == pytest.approx(9.0)


class TestHungarian:
    def test_identity_favoring(self):
        cost = np.array([[1.0, 2.0], [2.0, 1.0]])
        np.testing.assert_array_equal(hungarian(cost), [0, 1])

    def test_matches_brute_force(self, rng):
        for _ in range(100):
            k = int(rng.integers(1, 6))
            cost = rng.integers(0, 50, (k, k)).astype(float)
            rows = np.arange(k)
            best = min(cost[rows, list(p)].sum() for p in itertools.permutations(range(k)))
            assert cost[rows, hungarian(cost)].sum() == best

    @pytest.mark.parametrize(
        "cost",
        [np.ones((2, 3)), np.array([[np.inf, 1.0], [1.0, 1.0]]), np.array([[-1.0, 0.0], [0.0, 0.0]])],
    )
    def test_invalid_cost_rejected(self, cost):
        with pytest.raises(ContractViolation):
            hungarian(cost)


class TestSequentialAssociation:
    def test_recovers_true_clusters(self, grid, rng):
        truth = [2, 10, 18]
        candidates = [
            CandidateSet(tuple(int(m) for m in rng.permutation(truth)), f"gateway-{l}")
            for l in range(4)
        ]
        clusters = sequential_associate(candidates, GATEWAYS, grid)
        assert clusters.num_clusters == 3
        assert clusters.num_gateways == 4
        for row in clusters.members:
            assert len(set(row.tolist())) == 1
        assert check_cluster_constraints(clusters, candidates)
        assert association_cost(clusters, GATEWAYS, grid) == pytest.approx(0.0, abs=1e-12)
        assert symmetrized_cost(clusters, GATEWAYS, grid) == pytest.approx(0.0, abs=1e-12)

    def test_cost_matrix_sums_line_point_distances(self, grid, rng):
        members = rng.choice(grid.shape[0], size=(3, 4), replace=False)
        new = [int(m) for m in rng.choice(grid.shape[0], size=3, replace=False)]
        cost = association_cost_matrix(GATEWAYS[3], new, members, 3, grid)
        expected = [
            [
                sum(line_point_sqdist(GATEWAYS[3], grid[m], grid[members[j, l]]) for l in range(3))
                for j in range(3)
            ]
            for m in new
        ]
        np.testing.assert_allclose(cost, expected, rtol=1e-10, atol=1e-12)

    def test_first_gateway_seeds_clusters(self, grid):
        candidates = [CandidateSet((5, 9), "gateway-0"), CandidateSet((9, 5), "gateway-1")]
        clusters = sequential_associate(candidates, GATEWAYS[:2], grid)
        np.testing.assert_array_equal(clusters.members[:, 0], [5, 9])

    def test_mismatched_sizes_rejected(self, grid):
        candidates = [CandidateSet((1, 2), "a"), CandidateSet((3,), "b")]
        with pytest.raises(ContractViolation):
            sequential_associate(candidates, GATEWAYS[:2], grid)

    def test_constraint_check_detects_foreign_member(self):
        candidates = [CandidateSet((1, 2), "a"), CandidateSet((3, 4), "b")]
        good = Clusters(np.array([[1, 4], [2, 3]]))
        bad = Clusters(np.array([[1, 4], [2, 5]]))
        assert check_cluster_constraints(good, candidates)
        assert not check_cluster_constraints(bad, candidates)


class TestKMeans:
    def test_single_cluster_is_centroid(self, grid):
        candidates = [CandidateSet((0,), "a"), CandidateSet((10,), "b"), CandidateSet((20,), "c")]
        result = kmeans_associate(candidates, grid, 1, np.random.default_rng(0))
        np.testing.assert_allclose(result.centroids[0], grid[[0, 10, 20]].mean(axis=0))

    def test_well_separated_groups(self, grid):
        truth = [0, 10, 20]
        candidates = [CandidateSet(tuple(truth), f"g{l}") for l in range(4)]
        result = kmeans_associate(candidates, grid, 3, np.random.default_rng(1))
        for point in grid[truth]:
            assert np.min(np.linalg.norm(result.centroids - point, axis=1)) < 1e-9
        assert result.one_per_gateway(4)

    def test_seeded_determinism(self, grid, rng):
        candidates = [
            CandidateSet(tuple(int(m) for m in rng.choice(84, 3, replace=False)), f"g{l}")
            for l in range(4)
        ]
        a = kmeans_associate(candidates, grid, 3, np.random.default_rng(7))
        b = kmeans_associate(candidates, grid, 3, np.random.default_rng(7))
        np.testing.assert_array_equal(a.labels, b.labels)
        np.testing.assert_array_equal(a.centroids, b.centroids)

    def test_too_many_clusters_rejected(self, grid):
        with pytest.raises(ContractViolation):
            kmeans_associate([CandidateSet((1,), "a")], grid, 2, np.random.default_rng(0))
