"""Cross-gateway data association of local estimates.

Each local estimate defines a line from its gateway through the estimated grid point;
estimates of the same target produce lines that pass close to each other.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import linear_sum_assignment

from isacsim.engine.geometry import Position3
from isacsim.errors import ContractViolation
from isacsim.sensing.omp import CandidateSet

logger = logging.getLogger(__name__)


def _point(value: Position3 | ArrayLike) -> NDArray[np.float64]:
    if isinstance(value, Position3):
        return value.as_array()
    return np.asarray(value, dtype=float)


def line_point_sqdist(
    a: Position3 | ArrayLike, b: Position3 | ArrayLike, c: Position3 | ArrayLike
) -> float:
    """Squared distance from ``c`` to the line through ``a`` and ``b``.

    Raises:
        ContractViolation: If ``a`` and ``b`` coincide
    """
    pa, pb, pc = _point(a), _point(b), _point(c)
    d = pb - pa
    dd = float(d @ d)
    if dd == 0.0:
        raise ContractViolation("line endpoints coincide")
    v = pc - pa
    perp = v - (v @ d) / dd * d
    return float(perp @ perp)


def line_line_sqdist(
    a1: ArrayLike, b1: ArrayLike, a2: ArrayLike, b2: ArrayLike
) -> float:
    """Squared distance between two infinite lines (each through two points)."""
    p1, q1, p2, q2 = (np.asarray(x, dtype=float) for x in (a1, b1, a2, b2))
    d1, d2 = q1 - p1, q2 - p2
    n = np.cross(d1, d2)
    nn = float(n @ n)
    if nn <= 1e-24 * float(d1 @ d1) * float(d2 @ d2):
        return line_point_sqdist(p1, q1, p2)
    gap = float((p2 - p1) @ n)
    return gap * gap / nn


def validate_cost(cost: ArrayLike) -> NDArray[np.float64]:
    matrix = np.asarray(cost, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ContractViolation(f"cost matrix must be square, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ContractViolation("cost matrix must be finite")
    if np.any(matrix < 0):
        raise ContractViolation("cost matrix must be nonnegative")
    return matrix


def hungarian(cost: ArrayLike) -> NDArray[np.int64]:
    """Optimal assignment; ``result[k]`` is the column assigned to row ``k``."""
    matrix = validate_cost(cost)
    rows, cols = linear_sum_assignment(matrix)
    assignment = np.empty(matrix.shape[0], dtype=np.int64)
    assignment[rows] = cols
    return assignment


@dataclass(frozen=True)
class Clusters:
    """``members[k, l]`` is the grid index that gateway ``l`` contributes to cluster ``k``."""

    members: NDArray[np.int64]

    @property
    def num_clusters(self) -> int:
        return int(self.members.shape[0])

    @property
    def num_gateways(self) -> int:
        return int(self.members.shape[1])

    def cluster(self, k: int) -> NDArray[np.int64]:
        return self.members[k]


def _check_candidates(candidates: Sequence[CandidateSet]) -> int:
    if not candidates:
        raise ContractViolation("at least one candidate set is required")
    counts = {len(c) for c in candidates}
    if len(counts) != 1:
        raise ContractViolation(f"candidate sets have mismatched sizes {sorted(counts)}")
    return counts.pop()


def association_cost_matrix(
    gateway: NDArray[np.float64],
    new_indices: Sequence[int],
    members: NDArray[np.int64],
    upto: int,
    grid: NDArray[np.float64],
) -> NDArray[np.float64]:
    """Cost of attaching each new candidate (rows) to each partial cluster (columns)."""
    gateway = np.asarray(gateway, dtype=float)
    d = grid[list(new_indices)] - gateway  # (K, 3) line directions
    dd = np.einsum("kx,kx->k", d, d)
    if np.any(dd == 0.0):
        raise ContractViolation("line endpoints coincide")
    v = grid[members[:, :upto]] - gateway  # (K2, upto, 3)
    along = np.einsum("jux,kx->kju", v, d) / dd[:, None, None]
    perp = v[None] - along[..., None] * d[:, None, None, :]
    return np.einsum("kjux,kjux->kj", perp, perp)


def sequential_associate(
    candidates: Sequence[CandidateSet],
    gateways: ArrayLike,
    grid: ArrayLike,
) -> Clusters:
    """Grow clusters gateway by gateway, matching each new candidate set by Hungarian.

    Clusters start from the first gateway's candidates; gateway ``g`` is matched
    against the members contributed by gateways ``0..g-1``.

    Raises:
        ContractViolation: If candidate sets differ in size
    """
    k_count = _check_candidates(candidates)
    gats = np.asarray(gateways, dtype=float).reshape(-1, 3)
    pts = np.asarray(grid, dtype=float).reshape(-1, 3)
    if gats.shape[0] != len(candidates):
        raise ContractViolation("one gateway position is required per candidate set")
    members = np.zeros((k_count, len(candidates)), dtype=np.int64)
    members[:, 0] = candidates[0].indices
    for g in range(1, len(candidates)):
        cost = association_cost_matrix(gats[g], candidates[g].indices, members, g, pts)
        assignment = hungarian(cost)
        for k, m_hat in enumerate(candidates[g].indices):
            members[assignment[k], g] = m_hat
    return Clusters(members=members)


def association_cost(clusters: Clusters, gateways: ArrayLike, grid: ArrayLike) -> float:
    """Association objective over ordered gateway pairs: line of one, point of the other."""
    gats = np.asarray(gateways, dtype=float).reshape(-1, 3)
    pts = np.asarray(grid, dtype=float).reshape(-1, 3)
    total = 0.0
    for row in clusters.members:
        for g in range(len(row)):
            for l in range(len(row)):
                if l != g:
                    total += line_point_sqdist(gats[g], pts[row[g]], pts[row[l]])
    return total


def symmetrized_cost(clusters: Clusters, gateways: ArrayLike, grid: ArrayLike) -> float:
    """Diagnostic: line-to-line squared distances over unordered gateway pairs."""
    gats = np.asarray(gateways, dtype=float).reshape(-1, 3)
    pts = np.asarray(grid, dtype=float).reshape(-1, 3)
    total = 0.0
    for row in clusters.members:
        for g in range(len(row)):
            for l in range(g):
                total += line_line_sqdist(gats[g], pts[row[g]], gats[l], pts[row[l]])
    return total


def check_cluster_constraints(clusters: Clusters, candidates: Sequence[CandidateSet]) -> bool:
    """One member per gateway, drawn from that gateway's set, using every candidate once."""
    if clusters.num_gateways != len(candidates):
        return False
    for l, cand in enumerate(candidates):
        if sorted(clusters.members[:, l].tolist()) != sorted(cand.indices):
            return False
    return True


@dataclass(frozen=True)
class KMeansClusters:
    """K-means grouping of all local estimates.

    Attributes:
        labels: Cluster of each candidate, flattened gateway-major, shape (L*K,)
        centroids: One location per cluster, shape (K, 3)
        iterations: Lloyd iterations performed
    """

    labels: NDArray[np.int64]
    centroids: NDArray[np.float64]
    iterations: int

    def one_per_gateway(self, num_gateways: int) -> bool:
        per_gateway = self.labels.reshape(num_gateways, -1)
        return all(len(set(row.tolist())) == row.shape[0] for row in per_gateway)


def _farthest_point_seeds(
    points: NDArray[np.float64], count: int, rng: np.random.Generator
) -> NDArray[np.float64]:
    seeds = [int(rng.integers(points.shape[0]))]
    dist = np.sum((points - points[seeds[0]]) ** 2, axis=1)
    while len(seeds) < count:
        nxt = int(np.argmax(dist))
        seeds.append(nxt)
        dist = np.minimum(dist, np.sum((points - points[nxt]) ** 2, axis=1))
    return points[seeds].copy()


def kmeans_associate(
    candidates: Sequence[CandidateSet],
    grid: ArrayLike,
    num_clusters: int,
    rng: np.random.Generator,
    max_iterations: int = 50,
) -> KMeansClusters:
    """Euclidean K-means on all candidate grid points.

    Seeding is farthest-point after one random pick. An emptied cluster is re-seeded
    at the point farthest from its current centroid assignment.
    """
    _check_candidates(candidates)
    pts = np.asarray(grid, dtype=float).reshape(-1, 3)
    points = np.concatenate([pts[list(c.indices)] for c in candidates])
    if num_clusters < 1 or num_clusters > points.shape[0]:
        raise ContractViolation(f"cannot form {num_clusters} clusters from {points.shape[0]} points")

    centroids = _farthest_point_seeds(points, num_clusters, rng)
    labels = np.full(points.shape[0], -1, dtype=np.int64)
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        dist = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(dist, axis=1)
        for k in range(num_clusters):
            counts = np.bincount(new_labels, minlength=num_clusters)
            if counts[k] == 0:
                assigned = dist[np.arange(points.shape[0]), new_labels]
                assigned = np.where(counts[new_labels] > 1, assigned, -1.0)
                far = int(np.argmax(assigned))
                logger.debug(f"K-means cluster {k} empty, re-seeding at point {far}")
                centroids[k] = points[far]
                new_labels[far] = k
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for k in range(num_clusters):
            centroids[k] = points[labels == k].mean(axis=0)
    return KMeansClusters(labels=labels, centroids=centroids, iterations=iterations)
