"""Group orthogonal matching pursuit over per-gateway dictionary blocks.

A *group* is one grid point together with all its replicas: one column per satellite
in every participating gateway block. Centralized recovery scores a group over all
gateways; local recovery scores it within one gateway. The selected submatrix is block
diagonal across gateways, so each least-squares update splits into independent
per-gateway solves.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from isacsim.engine.signal import GridDictionary, ObservationSet
from isacsim.errors import ContractViolation

logger = logging.getLogger(__name__)

RIDGE_SCALE = 1e-12
SINGULAR_RCOND = 1e-12

CENTRALIZED_OWNER = "centralized"


def gateway_owner(l: int) -> str:
    return f"gateway-{l}"


@dataclass(frozen=True)
class ResidualState:
    """Snapshot after one greedy iteration.

    Attributes:
        residual: Per-gateway residuals, shape (G, T)
        selected: Grid indices selected so far, in order
        iteration: Number of selections made
    """

    residual: NDArray[np.complex128]
    selected: tuple[int, ...]
    iteration: int


@dataclass(frozen=True)
class CandidateSet:
    """Grid indices chosen by one recovery run, in selection order."""

    indices: tuple[int, ...]
    owner: str
    residual_norms: tuple[float, ...] = ()
    states: tuple[ResidualState, ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        if len(set(self.indices)) != len(self.indices):
            raise ContractViolation(f"candidate indices must be distinct: {self.indices}")

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def positions(self, grid: NDArray[np.float64]) -> NDArray[np.float64]:
        return grid[list(self.indices)]


def least_squares(
    matrix: NDArray[np.complex128], target: NDArray[np.complex128]
) -> NDArray[np.complex128]:
    """Normal-equation LS with a small ridge when the Gram matrix is near singular."""
    cols = matrix.shape[1]
    if cols == 0:
        return np.zeros(0, dtype=np.complex128)
    gram = matrix.conj().T @ matrix
    rhs = matrix.conj().T @ target
    trace = float(np.real(np.trace(gram)))
    if trace <= 0:
        return np.zeros(cols, dtype=np.complex128)
    eig = np.linalg.eigvalsh(gram)
    if eig[0] <= SINGULAR_RCOND * eig[-1]:
        gram = gram + (RIDGE_SCALE * trace / cols) * np.eye(cols)
    try:
        return cho_solve(cho_factor(gram), rhs)
    except LinAlgError:
        gram = gram + (RIDGE_SCALE * trace / cols) * np.eye(cols)
        return np.linalg.solve(gram, rhs)


def group_columns(indices: Sequence[int], num_satellites: int, num_grid_points: int) -> list[int]:
    """Block columns of the given grid points, grouped per point then per satellite."""
    return [i * num_grid_points + m for m in indices for i in range(num_satellites)]


def group_scores(
    residuals: NDArray[np.complex128],
    blocks: NDArray[np.complex128],
    num_satellites: int,
    num_grid_points: int,
    column_norms: Optional[NDArray[np.float64]] = None,
) -> NDArray[np.float64]:
    """Sum over gateways and satellites of ``|residual^H column|`` for each grid point."""
    corr = np.abs(np.einsum("gtc,gt->gc", blocks.conj(), residuals))
    if column_norms is not None:
        corr = corr / np.where(column_norms > 0, column_norms, 1.0)
    return corr.reshape(blocks.shape[0], num_satellites, num_grid_points).sum(axis=(0, 1))


def project_out(
    observations: NDArray[np.complex128],
    blocks: NDArray[np.complex128],
    columns: list[int],
) -> tuple[NDArray[np.complex128], list[NDArray[np.complex128]]]:
    """Per-gateway LS fit on ``columns``; returns residuals and coefficients."""
    residuals = np.empty_like(observations)
    coefs = []
    for g in range(blocks.shape[0]):
        sub = blocks[g][:, columns]
        coef = least_squares(sub, observations[g])
        residuals[g] = observations[g] - sub @ coef
        coefs.append(coef)
    return residuals, coefs


def group_omp(
    observations: NDArray[np.complex128],
    blocks: NDArray[np.complex128],
    num_satellites: int,
    num_grid_points: int,
    num_targets: int,
    owner: str,
    normalize_columns: bool = False,
    residual_tolerance: Optional[float] = None,
    record_states: bool = False,
) -> CandidateSet:
    """Greedy group selection until ``num_targets`` grid points are chosen.

    Args:
        observations: Per-gateway observations, shape (G, T)
        blocks: Per-gateway dictionary blocks, shape (G, T, I*M)
        num_satellites: I
        num_grid_points: M
        num_targets: K, the number of groups to select
        owner: Label stored on the result
        normalize_columns: Divide each score term by its column norm
        residual_tolerance: Stop early once the residual norm is at or below this value
        record_states: Keep a ResidualState per iteration

    Returns:
        CandidateSet in selection order; ties go to the lowest grid index
    """
    y = np.atleast_2d(np.asarray(observations, dtype=np.complex128))
    n_slots = blocks.shape[1]
    if num_targets < 1:
        raise ContractViolation("number of targets must be at least 1")
    if num_targets > num_grid_points:
        raise ContractViolation(f"cannot select {num_targets} of {num_grid_points} grid points")
    if n_slots < num_targets * num_satellites:
        raise ContractViolation(
            f"{n_slots} slots cannot support {num_targets * num_satellites} unknowns per gateway"
        )
    norms = np.linalg.norm(blocks, axis=1) if normalize_columns else None

    residual = y.copy()
    selected: list[int] = []
    residual_norms = [float(np.linalg.norm(residual))]
    states: list[ResidualState] = []
    for _ in range(num_targets):
        if residual_tolerance is not None and residual_norms[-1] <= residual_tolerance:
            logger.debug(f"{owner}: residual below tolerance after {len(selected)} selections")
            break
        scores = group_scores(residual, blocks, num_satellites, num_grid_points, norms)
        scores[selected] = -np.inf
        best = int(np.argmax(scores))
        selected.append(best)
        columns = group_columns(selected, num_satellites, num_grid_points)
        residual, _ = project_out(y, blocks, columns)
        residual_norms.append(float(np.linalg.norm(residual)))
        if record_states:
            states.append(ResidualState(residual.copy(), tuple(selected), len(selected)))

    logger.debug(f"{owner}: selected {selected}")
    return CandidateSet(tuple(selected), owner, tuple(residual_norms), tuple(states))


def centralized_omp(
    observations: ObservationSet,
    dictionary: GridDictionary,
    num_targets: int,
    normalize_columns: bool = False,
    residual_tolerance: Optional[float] = None,
    record_states: bool = False,
) -> CandidateSet:
    return group_omp(
        observations.y,
        dictionary.blocks,
        dictionary.num_satellites,
        dictionary.num_grid_points,
        num_targets,
        CENTRALIZED_OWNER,
        normalize_columns=normalize_columns,
        residual_tolerance=residual_tolerance,
        record_states=record_states,
    )


def local_omp(
    y_l: NDArray[np.complex128],
    dictionary: GridDictionary,
    l: int,
    num_targets: int,
    normalize_columns: bool = False,
    residual_tolerance: Optional[float] = None,
    record_states: bool = False,
) -> CandidateSet:
    """Non-cooperative recovery at gateway ``l`` from its own observations only."""
    return group_omp(
        np.asarray(y_l)[None, :],
        dictionary.blocks[l : l + 1],
        dictionary.num_satellites,
        dictionary.num_grid_points,
        num_targets,
        gateway_owner(l),
        normalize_columns=normalize_columns,
        residual_tolerance=residual_tolerance,
        record_states=record_states,
    )


def local_omp_all(
    observations: ObservationSet,
    dictionary: GridDictionary,
    num_targets: int,
    normalize_columns: bool = False,
) -> list[CandidateSet]:
    return [
        local_omp(observations.y[l], dictionary, l, num_targets, normalize_columns)
        for l in range(dictionary.num_gateways)
    ]


def support_residual(
    observations: NDArray[np.complex128],
    blocks: NDArray[np.complex128],
    num_satellites: int,
    num_grid_points: int,
    support: Sequence[int],
) -> float:
    """Squared residual of the best fit restricted to ``support``."""
    columns = group_columns(support, num_satellites, num_grid_points)
    residuals, _ = project_out(np.atleast_2d(observations), blocks, columns)
    return float(np.sum(np.abs(residuals) ** 2))


def exhaustive_support_search(
    observations: NDArray[np.complex128],
    blocks: NDArray[np.complex128],
    num_satellites: int,
    num_grid_points: int,
    num_targets: int,
) -> tuple[int, ...]:
    """Support minimizing the group-sparse fit residual over every subset of size K."""
    best: tuple[int, ...] = ()
    best_value = np.inf
    for support in itertools.combinations(range(num_grid_points), num_targets):
        value = support_residual(observations, blocks, num_satellites, num_grid_points, support)
        if value < best_value:
            best, best_value = support, value
    return best
