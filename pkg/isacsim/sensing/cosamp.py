"""CoSaMP adapted to group atoms."""

from __future__ import annotations

import logging

import numpy as np
from numpy.typing import NDArray

from isacsim.errors import ContractViolation
from isacsim.sensing.omp import CandidateSet, group_columns, group_scores, project_out

logger = logging.getLogger(__name__)


def cosamp(
    observations: NDArray[np.complex128],
    blocks: NDArray[np.complex128],
    num_satellites: int,
    num_grid_points: int,
    num_targets: int,
    owner: str,
    max_iterations: int = 50,
    normalize_columns: bool = False,
) -> CandidateSet:
    """Select-merge-solve-prune iterations on grid-point groups.

    Each iteration takes the 2K best-scoring groups, merges them with the current
    support, fits all merged groups by per-gateway least squares, keeps the K groups
    with the largest coefficient energy and updates the residual with the pruned fit.
    Stops when the support repeats or after ``max_iterations``.

    Returns:
        CandidateSet ordered by decreasing coefficient energy
    """
    y = np.atleast_2d(np.asarray(observations, dtype=np.complex128))
    if num_targets < 1 or num_targets > num_grid_points:
        raise ContractViolation(f"cannot select {num_targets} of {num_grid_points} grid points")
    norms = np.linalg.norm(blocks, axis=1) if normalize_columns else None
    width = min(2 * num_targets, num_grid_points)

    support: list[int] = []
    residual = y.copy()
    residual_norms = [float(np.linalg.norm(residual))]
    for iteration in range(max_iterations):
        scores = group_scores(residual, blocks, num_satellites, num_grid_points, norms)
        proposal = np.argsort(-scores, kind="stable")[:width]
        merged = sorted(set(support) | {int(m) for m in proposal})
        columns = group_columns(merged, num_satellites, num_grid_points)
        _, coefs = project_out(y, blocks, columns)

        energy = np.zeros(len(merged))
        for coef in coefs:
            energy += np.sum(np.abs(coef.reshape(len(merged), num_satellites)) ** 2, axis=1)
        keep = np.argsort(-energy, kind="stable")[:num_targets]
        new_support = [merged[j] for j in keep]

        residual = y.copy()
        for g, coef in enumerate(coefs):
            pruned = coef.reshape(len(merged), num_satellites)[keep].reshape(-1)
            kept_columns = group_columns(new_support, num_satellites, num_grid_points)
            residual[g] = y[g] - blocks[g][:, kept_columns] @ pruned
        residual_norms.append(float(np.linalg.norm(residual)))

        converged = set(new_support) == set(support)
        support = new_support
        if converged:
            logger.debug(f"{owner}: CoSaMP converged after {iteration + 1} iterations")
            break

    return CandidateSet(tuple(support), owner, tuple(residual_norms))
