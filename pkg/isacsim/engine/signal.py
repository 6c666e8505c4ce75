"""ISAC transmit signals, gateway echo observations and the grid dictionary.

The dictionary and the observations are built from the same transmitted signals, so an
on-grid target is represented exactly by its dictionary columns. The block-diagonal
stacked dictionary is never formed; every routine works on the per-gateway blocks of
shape ``(T, I*M)`` whose column ``i*M + m`` belongs to satellite ``i`` and grid point ``m``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import ArrayLike, NDArray

from isacsim.engine.beamforming import BeamPlan
from isacsim.engine.channel import bistatic_gains
from isacsim.engine.geometry import downlook_steering, uplook_steering
from isacsim.engine.streams import RngStreams, StreamTag

if TYPE_CHECKING:
    from isacsim.engine.scene import Deployment


@dataclass(frozen=True)
class SymbolStreams:
    """Unit-modulus symbols: ``sensing[i, t]`` per satellite, ``comm[a, t]`` per flat UE."""

    sensing: NDArray[np.complex128]
    comm: NDArray[np.complex128]


def unit_symbols(rng: np.random.Generator, shape: tuple[int, ...]) -> NDArray[np.complex128]:
    return np.exp(2j * np.pi * rng.random(shape))


def draw_symbols(
    rng: np.random.Generator, num_satellites: int, num_ues: int, n_slots: int
) -> SymbolStreams:
    return SymbolStreams(
        sensing=unit_symbols(rng, (num_satellites, n_slots)),
        comm=unit_symbols(rng, (num_ues, n_slots)),
    )


def synthesize_tx(
    beams: BeamPlan,
    powers: NDArray[np.float64],
    symbols: SymbolStreams,
    i: int,
    t: int,
) -> NDArray[np.complex128]:
    """Transmitted vector of satellite ``i`` in slot ``t``; ``powers`` has shape (T, U)."""
    x = np.sqrt(beams.sensing_power_w[i]) * beams.sensing_beams_at(t)[i] * symbols.sensing[i, t]
    for a in np.flatnonzero(beams.ue_owner == i):
        x = x + np.sqrt(powers[t, a]) * beams.comm_beams[a] * symbols.comm[a, t]
    return x


def synthesize_all_tx(
    beams: BeamPlan, powers: NDArray[np.float64], symbols: SymbolStreams
) -> NDArray[np.complex128]:
    """Transmitted vectors of every satellite and slot, shape (I, T, N^sat)."""
    scale = np.sqrt(beams.sensing_power_w)[:, None] * symbols.sensing
    x = beams.sensing_beams() * scale[:, :, None]
    if beams.comm_beams.shape[0]:
        weights = np.sqrt(powers).T * symbols.comm  # (U, T)
        contrib = weights[:, :, None] * beams.comm_beams[:, None, :]
        np.add.at(x, beams.ue_owner, contrib)
    return x


def response_matrix(
    deployment: Deployment,
    beams: BeamPlan,
    tx: NDArray[np.complex128],
    points: ArrayLike,
) -> NDArray[np.complex128]:
    """Beamformed bistatic responses of arbitrary points.

    Entry ``[l, t, i*P + p]`` is
    ``gain(i, p, l) * w_l(t)^H v^gat(l, p) * v^sat(i, p)^H x_i(t)``.

    Returns:
        Array of shape (L, T, I*P)
    """
    scenario = deployment.scenario
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    sats, gats = deployment.satellites, deployment.gateways
    gains = bistatic_gains(scenario.link.link_budget, sats, pts, gats)
    sat_steer = downlook_steering(scenario.arrays.satellite, sats[:, None, :], pts[None, :, :])
    gat_steer = uplook_steering(scenario.arrays.gateway, gats[:, None, :], pts[None, :, :])
    sat_resp = np.einsum("ipn,itn->ipt", sat_steer.conj(), tx)
    gat_resp = np.einsum("ltn,lpn->ltp", beams.gateway_beams().conj(), gat_steer)
    resp = np.einsum("ipl,ltp,ipt->ltip", gains, gat_resp, sat_resp)
    n_gat, n_slots = gat_resp.shape[0], gat_resp.shape[1]
    return resp.reshape(n_gat, n_slots, -1)


@dataclass(frozen=True)
class GridDictionary:
    """Per-gateway dictionary blocks ``A_l`` of shape (L, T, I*M)."""

    blocks: NDArray[np.complex128]
    num_satellites: int
    num_grid_points: int

    @property
    def num_gateways(self) -> int:
        return int(self.blocks.shape[0])

    @property
    def n_slots(self) -> int:
        return int(self.blocks.shape[1])

    def block(self, l: int) -> NDArray[np.complex128]:
        return self.blocks[l]

    def column(self, l: int, i: int, m: int) -> NDArray[np.complex128]:
        return self.blocks[l][:, i * self.num_grid_points + m]

    def group_columns(self, m: int) -> list[int]:
        """Column indices of grid point ``m`` inside each block (one per satellite)."""
        return [i * self.num_grid_points + m for i in range(self.num_satellites)]

    def subset(self, gateways: list[int]) -> "GridDictionary":
        return GridDictionary(self.blocks[gateways], self.num_satellites, self.num_grid_points)


def build_dictionary(
    deployment: Deployment, beams: BeamPlan, tx: NDArray[np.complex128]
) -> GridDictionary:
    return GridDictionary(
        blocks=response_matrix(deployment, beams, tx, deployment.grid),
        num_satellites=deployment.num_satellites,
        num_grid_points=deployment.num_grid_points,
    )


@dataclass(frozen=True)
class ObservationSet:
    """Combined gateway observations ``y[l, t]`` and the per-gateway noise variance."""

    y: NDArray[np.complex128]
    noise_variance: NDArray[np.float64]

    @property
    def num_gateways(self) -> int:
        return int(self.y.shape[0])

    @property
    def n_slots(self) -> int:
        return int(self.y.shape[1])


def combined_noise(
    rng: np.random.Generator, combiner: NDArray[np.complex128], noise_power_w: float
) -> complex:
    """``w^H n`` for antenna noise ``n ~ CN(0, noise_power_w I)``."""
    n = combiner.shape[-1]
    noise = np.sqrt(noise_power_w / 2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return complex(np.vdot(combiner, noise))


def gateway_observe(
    deployment: Deployment,
    beams: BeamPlan,
    tx: NDArray[np.complex128],
    reflections: NDArray[np.complex128],
    l: int,
    t: int,
    rng: np.random.Generator,
) -> complex:
    """Echo received by gateway ``l`` in slot ``t`` after analog combining."""
    scenario = deployment.scenario
    w = beams.gateway_beams_at(t)[l]
    gat = deployment.gateways[l]
    gains = bistatic_gains(scenario.link.link_budget, deployment.satellites, deployment.targets, gat)
    y = 0j
    for k, target in enumerate(deployment.targets):
        gat_view = np.vdot(w, uplook_steering(scenario.arrays.gateway, gat, target))
        for i, sat in enumerate(deployment.satellites):
            sat_view = np.vdot(downlook_steering(scenario.arrays.satellite, sat, target), tx[i, t])
            y += reflections[i, k, l] * gains[i, k, 0] * gat_view * sat_view
    if scenario.sensing.noise_enabled:
        y += combined_noise(rng, w, scenario.noise_power_w)
    return complex(y)


def observe(
    streams: RngStreams,
    deployment: Deployment,
    beams: BeamPlan,
    tx: NDArray[np.complex128],
    reflections: NDArray[np.complex128],
) -> ObservationSet:
    """Observations of every gateway and slot; noise keyed by (gateway, slot)."""
    scenario = deployment.scenario
    responses = response_matrix(deployment, beams, tx, deployment.targets)  # (L, T, I*K)
    coeffs = np.transpose(reflections, (2, 0, 1)).reshape(deployment.num_gateways, -1)
    y = np.einsum("ltc,lc->lt", responses, coeffs)
    if scenario.sensing.noise_enabled:
        combiners = beams.gateway_beams()
        for l in range(deployment.num_gateways):
            for t in range(beams.n_slots):
                rng = streams.rng(StreamTag.NOISE, l, t)
                y[l, t] += combined_noise(rng, combiners[l, t], scenario.noise_power_w)
    variance = np.full(deployment.num_gateways, scenario.noise_power_w)
    return ObservationSet(y=y, noise_variance=variance)
