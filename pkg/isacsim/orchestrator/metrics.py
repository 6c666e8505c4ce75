"""Distance metrics with label-free truth matching."""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import linear_sum_assignment

from isacsim.errors import ContractViolation


def grid_bound(targets: ArrayLike, grid: ArrayLike) -> float:
    """Mean distance from each target to its nearest grid point (km)."""
    tgt = np.asarray(targets, dtype=float).reshape(-1, 3)
    pts = np.asarray(grid, dtype=float).reshape(-1, 3)
    if pts.shape[0] == 0:
        raise ContractViolation("grid must be nonempty")
    dist = np.linalg.norm(tgt[:, None, :] - pts[None, :, :], axis=2)
    return float(dist.min(axis=1).mean())


@dataclass(frozen=True)
class MatchedError:
    """Mean estimate-to-target distance after optimal matching.

    ``assignment[k]`` is the estimate matched to target ``k`` (-1 when unmatched).
    """

    mean_distance_km: float
    distances_km: NDArray[np.float64]
    assignment: NDArray[np.int64]


def average_distance_error(estimates: ArrayLike, targets: ArrayLike) -> MatchedError:
    """Hungarian truth matching on squared distance, then the mean matched distance.

    Targets left without an estimate (fewer estimates than targets) are scored against
    their nearest estimate.
    """
    est = np.asarray(estimates, dtype=float).reshape(-1, 3)
    tgt = np.asarray(targets, dtype=float).reshape(-1, 3)
    if tgt.shape[0] == 0:
        raise ContractViolation("at least one target is required")
    if est.shape[0] == 0:
        return MatchedError(np.inf, np.full(tgt.shape[0], np.inf), np.full(tgt.shape[0], -1))

    sq = np.sum((tgt[:, None, :] - est[None, :, :]) ** 2, axis=2)
    rows, cols = linear_sum_assignment(sq)
    assignment = np.full(tgt.shape[0], -1, dtype=np.int64)
    assignment[rows] = cols
    distances = np.sqrt(sq.min(axis=1))
    distances[rows] = np.sqrt(sq[rows, cols])
    return MatchedError(float(distances.mean()), distances, assignment)
