"""Least-squares intersection of gateway-to-estimate lines."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from isacsim.errors import ContractViolation, FusionError
from isacsim.sensing.association import Clusters

logger = logging.getLogger(__name__)

DEFAULT_CONDITION_LIMIT = 1e8


@dataclass(frozen=True)
class FusedEstimate:
    """Fused position of one cluster.

    Attributes:
        position: Estimated location in km, shape (3,)
        condition_number: Condition number of the summed projector matrix
        fallback: True when the bundle was too close to parallel and the centroid was used
        residual: Sum of squared point-to-line distances at ``position``
    """

    position: NDArray[np.float64]
    condition_number: float
    fallback: bool
    residual: float


def projector_sum(directions: NDArray[np.float64]) -> NDArray[np.float64]:
    """Sum of ``I - q q^T`` over unit directions ``q`` (rows)."""
    q = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    return q.shape[0] * np.eye(3) - q.T @ q


def bundle_objective(
    point: ArrayLike, origins: NDArray[np.float64], directions: NDArray[np.float64]
) -> float:
    """Sum of squared distances from ``point`` to every line ``origin + s * direction``."""
    q = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    v = np.asarray(point, dtype=float)[None, :] - origins
    along = np.sum(v * q, axis=1)
    return float(np.sum(np.sum(v * v, axis=1) - along**2))


def fuse_lines(
    origins: ArrayLike,
    directions: ArrayLike,
    fallback_points: ArrayLike | None = None,
    condition_limit: float = DEFAULT_CONDITION_LIMIT,
    strict: bool = False,
) -> FusedEstimate:
    """Point minimizing the summed squared distance to a bundle of lines.

    Args:
        origins: Line origins, shape (L, 3)
        directions: Line directions, shape (L, 3), nonzero
        fallback_points: Points averaged when the bundle is near parallel (defaults to origins)
        condition_limit: Largest accepted condition number of the projector sum
        strict: Raise instead of falling back

    Raises:
        FusionError: In strict mode, when the projector sum is singular or ill conditioned
    """
    origins = np.asarray(origins, dtype=float).reshape(-1, 3)
    directions = np.asarray(directions, dtype=float).reshape(-1, 3)
    if np.any(np.linalg.norm(directions, axis=1) == 0):
        raise ContractViolation("line directions must be nonzero")
    q = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    projectors = np.eye(3)[None, :, :] - q[:, :, None] * q[:, None, :]
    total = projectors.sum(axis=0)
    rhs = np.einsum("lij,lj->i", projectors, origins)
    cond = float(np.linalg.cond(total))

    if not np.isfinite(cond) or cond > condition_limit:
        if strict:
            raise FusionError(
                f"line bundle is degenerate (condition number {cond:.3g} > {condition_limit:.3g}, "
                f"{origins.shape[0]} lines)"
            )
        points = origins if fallback_points is None else np.asarray(fallback_points, dtype=float)
        position = points.reshape(-1, 3).mean(axis=0)
        logger.warning(f"near-parallel bundle (cond={cond:.3g}), using centroid")
        return FusedEstimate(position, cond, True, bundle_objective(position, origins, directions))

    position = np.linalg.solve(total, rhs)
    return FusedEstimate(position, cond, False, bundle_objective(position, origins, directions))


def fuse(
    cluster: Sequence[int],
    gateways: ArrayLike,
    grid: ArrayLike,
    condition_limit: float = DEFAULT_CONDITION_LIMIT,
    strict: bool = False,
) -> FusedEstimate:
    """Fuse one cluster: lines from each gateway through its contributed grid point."""
    gats = np.asarray(gateways, dtype=float).reshape(-1, 3)
    pts = np.asarray(grid, dtype=float).reshape(-1, 3)[list(cluster)]
    if pts.shape[0] != gats.shape[0]:
        raise ContractViolation("cluster needs exactly one grid point per gateway")
    return fuse_lines(gats, pts - gats, pts, condition_limit, strict)


def fuse_clusters(
    clusters: Clusters,
    gateways: ArrayLike,
    grid: ArrayLike,
    condition_limit: float = DEFAULT_CONDITION_LIMIT,
) -> list[FusedEstimate]:
    return [
        fuse(clusters.cluster(k), gateways, grid, condition_limit)
        for k in range(clusters.num_clusters)
    ]
