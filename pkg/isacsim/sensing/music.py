"""MUSIC baseline on un-combined gateway snapshots.

One satellite illuminates the region alone at power ``P^r * I`` while its sensing beam
sweeps the grid; every gateway records full antenna snapshots. The pseudo-spectrum of a
grid point is the inverse of its steering vector's energy in the noise subspace, summed
over the participating gateways.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np
from numpy.typing import NDArray

from isacsim.engine.beamforming import BeamPlan, probe_mapping
from isacsim.engine.channel import bistatic_gains
from isacsim.engine.geometry import downlook_steering, uplook_steering
from isacsim.engine.signal import unit_symbols
from isacsim.engine.streams import RngStreams, StreamTag
from isacsim.errors import RecoveryError
from isacsim.sensing.omp import CandidateSet

if TYPE_CHECKING:
    from isacsim.engine.scene import Deployment

logger = logging.getLogger(__name__)

# Peaks whose normalized crosstalk reaches this level share one main lobe.
MAIN_LOBE_LEVEL = 0.5


def music_snapshots(
    streams: RngStreams,
    deployment: Deployment,
    beams: BeamPlan,
    reflections: NDArray[np.complex128],
    n_snapshots: int,
    satellite: int = 0,
) -> NDArray[np.complex128]:
    """Antenna-level echoes at every gateway, shape (L, S, N^gat)."""
    scenario = deployment.scenario
    sats, gats, targets = deployment.satellites, deployment.gateways, deployment.targets
    power = beams.sensing_power_w[satellite] * deployment.num_satellites
    probe = probe_mapping(n_snapshots, deployment.num_grid_points)
    beam = beams.sat_grid_steering[satellite, probe, :] / np.sqrt(beams.n_sat)
    symbols = unit_symbols(streams.rng(StreamTag.MUSIC, satellite), (n_snapshots,))
    x = np.sqrt(power) * beam * symbols[:, None]  # (S, N^sat)

    sat_steer = downlook_steering(scenario.arrays.satellite, sats[satellite], targets)  # (K, N^sat)
    sat_view = sat_steer.conj() @ x.T  # (K, S)
    gains = bistatic_gains(scenario.link.link_budget, sats[satellite], targets, gats)[0]  # (K, L)
    gat_steer = uplook_steering(scenario.arrays.gateway, gats[:, None, :], targets[None, :, :])

    n_gat = scenario.arrays.gateway.n
    snapshots = np.empty((deployment.num_gateways, n_snapshots, n_gat), dtype=np.complex128)
    for l in range(deployment.num_gateways):
        amplitude = reflections[satellite, :, l] * gains[:, l]  # (K,)
        snapshots[l] = (amplitude[:, None] * sat_view).T @ gat_steer[l]
        if scenario.sensing.noise_enabled:
            rng = streams.rng(StreamTag.MUSIC_NOISE, satellite, l)
            scale = np.sqrt(scenario.noise_power_w / 2.0)
            snapshots[l] += scale * (
                rng.standard_normal((n_snapshots, n_gat))
                + 1j * rng.standard_normal((n_snapshots, n_gat))
            )
    return snapshots


def sample_covariance(snapshots: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """``(1/S) sum_s r_s r_s^H`` for snapshots of shape (S, N)."""
    return snapshots.T @ snapshots.conj() / snapshots.shape[0]


def noise_subspace(covariance: NDArray[np.complex128], num_targets: int) -> NDArray[np.complex128]:
    """Eigenvectors beyond the ``num_targets`` largest eigenvalues, shape (N, N - K)."""
    try:
        eigvals, eigvecs = np.linalg.eigh(covariance)
    except np.linalg.LinAlgError as e:
        raise RecoveryError(f"eigendecomposition failed: {e}") from e
    order = np.argsort(eigvals)[::-1]
    return eigvecs[:, order[num_targets:]]


@dataclass(frozen=True)
class MusicResult:
    spectrum: NDArray[np.float64]
    candidates: CandidateSet


def music_spectrum(
    snapshots: NDArray[np.complex128],
    gat_grid_steering: NDArray[np.complex128],
    num_targets: int,
) -> NDArray[np.float64]:
    """Pseudo-spectrum over grid points from the snapshots of the given gateways.

    Args:
        snapshots: Shape (G, S, N^gat)
        gat_grid_steering: Grid steering vectors of the same gateways, shape (G, M, N^gat)
        num_targets: Signal subspace dimension K
    """
    n_gat = snapshots.shape[-1]
    if snapshots.shape[1] < n_gat:
        raise RecoveryError(f"{snapshots.shape[1]} snapshots cannot estimate a {n_gat}x{n_gat} covariance")
    if num_targets >= n_gat:
        raise RecoveryError(f"noise subspace is empty for K={num_targets}, N={n_gat}")
    denominator = np.zeros(gat_grid_steering.shape[1])
    for g in range(snapshots.shape[0]):
        basis = noise_subspace(sample_covariance(snapshots[g]), num_targets)
        projection = basis.conj().T @ gat_grid_steering[g].T  # (N-K, M)
        denominator += np.sum(np.abs(projection) ** 2, axis=0)
    return 1.0 / np.maximum(denominator, np.finfo(float).tiny)


def pick_peaks(
    spectrum: NDArray[np.float64],
    gat_grid_steering: NDArray[np.complex128],
    num_targets: int,
    owner: str,
) -> CandidateSet:
    """Largest spectrum values, skipping points inside an already chosen main lobe.

    A point is suppressed when its normalized crosstalk with a chosen peak reaches
    ``MAIN_LOBE_LEVEL`` at every participating gateway.
    """
    n_gat = gat_grid_steering.shape[-1]
    order = np.argsort(-spectrum, kind="stable")
    chosen: list[int] = []
    for m in order:
        m = int(m)
        if len(chosen) == num_targets:
            break
        suppressed = False
        for c in chosen:
            overlap = np.abs(np.einsum("gn,gn->g", gat_grid_steering[:, m].conj(), gat_grid_steering[:, c]))
            if np.all(overlap**2 / n_gat**2 >= MAIN_LOBE_LEVEL):
                suppressed = True
                break
        if not suppressed:
            chosen.append(m)
    for m in order:
        if len(chosen) == num_targets:
            break
        if int(m) not in chosen:
            chosen.append(int(m))
    return CandidateSet(tuple(chosen), owner)


def music_estimate(
    snapshots: NDArray[np.complex128],
    gat_grid_steering: NDArray[np.complex128],
    gateways: Sequence[int],
    num_targets: int,
    owner: str,
) -> MusicResult:
    idx = list(gateways)
    spectrum = music_spectrum(snapshots[idx], gat_grid_steering[idx], num_targets)
    candidates = pick_peaks(spectrum, gat_grid_steering[idx], num_targets, owner)
    logger.debug(f"{owner}: MUSIC peaks {candidates.indices}")
    return MusicResult(spectrum=spectrum, candidates=candidates)
