"""Constant-modulus beams, SINR terms and per-slot power minimization.

Sensing beams sweep the grid with the probe mapping ``psi(t) = t mod M`` (0-based);
communication beams point at their UE and do not change across slots. Power
minimization under SINR constraints is solved through its optimality condition, a
linear system whose matrix is strictly diagonally dominant whenever the threshold is
feasible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import lu_factor, lu_solve

from isacsim.engine.channel import CommChannels
from isacsim.engine.geometry import downlook_steering, uplook_steering
from isacsim.errors import PowerAllocationError

if TYPE_CHECKING:
    from isacsim.engine.scene import Deployment

logger = logging.getLogger(__name__)

NEGATIVE_POWER_TOLERANCE = 1e-12


def probe_mapping(n_slots: int, num_grid_points: int) -> NDArray[np.int64]:
    """Grid index probed in each slot (0-based cyclic sweep)."""
    if num_grid_points < 1:
        raise ValueError("grid must contain at least one point")
    return np.arange(n_slots, dtype=np.int64) % num_grid_points


@dataclass(frozen=True)
class BeamPlan:
    """Beams for every slot of a sensing epoch.

    Per-slot beams are not stored; they are rows of the grid steering tables selected
    by ``probe_index``.

    Attributes:
        probe_index: Grid index probed in slot t, shape (T,)
        sat_grid_steering: v^sat-grid, shape (I, M, N^sat)
        gat_grid_steering: v^gat-grid, shape (L, M, N^gat)
        comm_beams: f^c for each flat UE, shape (U, N^sat)
        ue_owner: Serving satellite of each flat UE, shape (U,)
        sensing_power_w: P^r per satellite, shape (I,)
    """

    probe_index: NDArray[np.int64]
    sat_grid_steering: NDArray[np.complex128]
    gat_grid_steering: NDArray[np.complex128]
    comm_beams: NDArray[np.complex128]
    ue_owner: NDArray[np.int64]
    sensing_power_w: NDArray[np.float64]

    @property
    def n_slots(self) -> int:
        return int(self.probe_index.shape[0])

    @property
    def n_sat(self) -> int:
        return int(self.sat_grid_steering.shape[-1])

    @property
    def n_gat(self) -> int:
        return int(self.gat_grid_steering.shape[-1])

    def sensing_beams_at(self, t: int) -> NDArray[np.complex128]:
        """f^r_i(t) for every satellite, shape (I, N^sat)."""
        return self.sat_grid_steering[:, self.probe_index[t], :] / np.sqrt(self.n_sat)

    def gateway_beams_at(self, t: int) -> NDArray[np.complex128]:
        """w_l(t) for every gateway, shape (L, N^gat)."""
        return self.gat_grid_steering[:, self.probe_index[t], :] / np.sqrt(self.n_gat)

    def sensing_beams(self) -> NDArray[np.complex128]:
        """f^r for all slots, shape (I, T, N^sat)."""
        return self.sat_grid_steering[:, self.probe_index, :] / np.sqrt(self.n_sat)

    def gateway_beams(self) -> NDArray[np.complex128]:
        """w for all slots, shape (L, T, N^gat)."""
        return self.gat_grid_steering[:, self.probe_index, :] / np.sqrt(self.n_gat)


def build_beams(deployment: Deployment, n_slots: Optional[int] = None) -> BeamPlan:
    """Sensing, combining and communication beams from geometry alone."""
    scenario = deployment.scenario
    sat_geom = scenario.arrays.satellite
    gat_geom = scenario.arrays.gateway
    n_slots = n_slots if n_slots is not None else deployment.n_slots

    sat_grid = downlook_steering(
        sat_geom, deployment.satellites[:, None, :], deployment.grid[None, :, :]
    )
    gat_grid = uplook_steering(
        gat_geom, deployment.gateways[:, None, :], deployment.grid[None, :, :]
    )
    if deployment.num_ues:
        comm = downlook_steering(
            sat_geom, deployment.satellites[deployment.ue_owner], deployment.ue_positions
        ) / np.sqrt(sat_geom.n)
    else:
        comm = np.zeros((0, sat_geom.n), dtype=np.complex128)
    power = np.full(deployment.num_satellites, scenario.sensing.sensing_power_w, dtype=float)
    return BeamPlan(
        probe_index=probe_mapping(n_slots, deployment.num_grid_points),
        sat_grid_steering=sat_grid,
        gat_grid_steering=gat_grid,
        comm_beams=comm,
        ue_owner=deployment.ue_owner.astype(np.int64),
        sensing_power_w=power,
    )


@dataclass(frozen=True)
class SinrTerms:
    """Beamformed channel powers of one slot.

    ``chi[a, b]`` is the power UE ``a`` receives through the beam of UE ``b`` (sent by
    b's serving satellite); ``nu[a]`` is sensing interference plus noise at UE ``a``.
    """

    chi: NDArray[np.float64]
    nu: NDArray[np.float64]
    noise_power_w: float

    def sinr(self, powers: NDArray[np.float64]) -> NDArray[np.float64]:
        signal = powers * np.diag(self.chi)
        interference = self.chi @ powers - signal
        return signal / (interference + self.nu)


def sinr_terms(
    channels: CommChannels, beams: BeamPlan, t: int, noise_power_w: float
) -> SinrTerms:
    h = channels.slot(t)  # (I, U, N^sat)
    n_ues = h.shape[1]
    if n_ues == 0:
        return SinrTerms(np.zeros((0, 0)), np.zeros(0), noise_power_w)
    through_comm = np.einsum("jan,bn->jab", h.conj(), beams.comm_beams)
    rows = np.arange(n_ues)
    chi = np.abs(through_comm[beams.ue_owner[None, :], rows[:, None], rows[None, :]]) ** 2
    through_sensing = np.einsum("jan,jn->ja", h.conj(), beams.sensing_beams_at(t))
    nu = beams.sensing_power_w @ (np.abs(through_sensing) ** 2) + noise_power_w
    return SinrTerms(chi=chi, nu=nu, noise_power_w=noise_power_w)


@dataclass(frozen=True)
class PowerAllocation:
    """Communication powers of one slot.

    Attributes:
        powers: Watts per flat UE; zeros when infeasible
        feasible: Whether a nonnegative SINR-tight solution was found
        threshold: Effective linear SINR threshold after backoff
        requested_threshold: Threshold before backoff
        backoff_steps: Number of threshold reductions applied
        achieved_sinr: SINR of every UE at ``powers``
    """

    powers: NDArray[np.float64]
    feasible: bool
    threshold: float
    requested_threshold: float
    backoff_steps: int
    achieved_sinr: NDArray[np.float64]


def is_diagonally_dominant(chi: NDArray[np.float64], threshold: float) -> bool:
    diag = np.diag(chi)
    off = chi.sum(axis=1) - diag
    return bool(np.all(diag > threshold * off))


def allocate_power(
    terms: SinrTerms,
    threshold: float,
    backoff_factor: float = 0.5,
    max_backoff_steps: int = 20,
) -> PowerAllocation:
    """Minimum total power meeting ``SINR >= threshold`` for every UE.

    Solves ``(diag(chi) - threshold * offdiag(chi)) p = threshold * nu`` by LU with
    partial pivoting once the dominance test passes, backing the threshold off
    geometrically while it does not.

    Raises:
        PowerAllocationError: If chi or nu are non-finite or a diagonal entry is not positive
    """
    chi, nu = terms.chi, terms.nu
    if not (np.all(np.isfinite(chi)) and np.all(np.isfinite(nu))):
        raise PowerAllocationError("non-finite SINR terms")
    n_ues = nu.shape[0]
    if n_ues == 0:
        empty = np.zeros(0)
        return PowerAllocation(empty, True, threshold, threshold, 0, empty)
    diag = np.diag(chi)
    if np.any(diag <= 0):
        raise PowerAllocationError("every UE needs a positive direct-beam channel power")

    off = chi - np.diag(diag)
    tau = threshold
    for step in range(max_backoff_steps + 1):
        if is_diagonally_dominant(chi, tau):
            system = np.diag(diag) - tau * off
            powers = lu_solve(lu_factor(system), tau * nu)
            if np.all(np.isfinite(powers)) and powers.min() >= -NEGATIVE_POWER_TOLERANCE:
                powers = np.clip(powers, 0.0, None)
                return PowerAllocation(
                    powers=powers,
                    feasible=True,
                    threshold=tau,
                    requested_threshold=threshold,
                    backoff_steps=step,
                    achieved_sinr=terms.sinr(powers),
                )
        if step < max_backoff_steps:
            logger.debug(f"SINR threshold {tau:.4g} infeasible, backing off")
            tau *= backoff_factor

    logger.warning(f"power allocation infeasible after {max_backoff_steps} backoff steps")
    zeros = np.zeros(n_ues)
    return PowerAllocation(
        powers=zeros,
        feasible=False,
        threshold=tau,
        requested_threshold=threshold,
        backoff_steps=max_backoff_steps,
        achieved_sinr=terms.sinr(zeros),
    )


@dataclass(frozen=True)
class PowerSchedule:
    """Power allocations of every slot, powers shape (T, U)."""

    slots: list[PowerAllocation]

    @property
    def powers(self) -> NDArray[np.float64]:
        if not self.slots:
            return np.zeros((0, 0))
        return np.stack([s.powers for s in self.slots])

    @property
    def feasible(self) -> bool:
        return all(s.feasible for s in self.slots)

    @property
    def min_threshold(self) -> float:
        return min(s.threshold for s in self.slots)

    def average_comm_power(self, num_satellites: int) -> float:
        """Total communication power averaged over slots and satellites."""
        return float(self.powers.sum() / (len(self.slots) * num_satellites))


def allocate_all_slots(
    channels: CommChannels,
    beams: BeamPlan,
    noise_power_w: float,
    threshold: float,
    backoff_factor: float = 0.5,
    max_backoff_steps: int = 20,
) -> PowerSchedule:
    slots = []
    for t in range(beams.n_slots):
        terms = sinr_terms(channels, beams, t, noise_power_w)
        slots.append(allocate_power(terms, threshold, backoff_factor, max_backoff_steps))
    return PowerSchedule(slots=slots)
