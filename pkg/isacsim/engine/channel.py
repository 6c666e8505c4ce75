"""Rician satellite-to-UE channels, bistatic sensing gains and reflection draws.

Positions arrive in km and are converted to meters only inside the path-loss terms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field

from isacsim.engine.geometry import (
    Position3,
    UpaGeometry,
    as_points,
    distances_m,
    downlook_steering,
)
from isacsim.engine.streams import RngStreams, StreamTag
from isacsim.errors import ContractViolation

if TYPE_CHECKING:
    from isacsim.engine.scene import Deployment


class LinkBudget(BaseModel):
    """Linear-scale link parameters.

    Attributes:
        wavelength_m: Carrier wavelength in meters
        tx_gain_sat: Satellite transmit gain (linear)
        rx_gain_ue: UE receive gain (linear)
        rx_gain_gat: Gateway receive gain (linear)
        rician_kappa: Rician K-factor (linear)
    """

    model_config = ConfigDict(frozen=True)

    wavelength_m: float = Field(gt=0)
    tx_gain_sat: float = Field(gt=0)
    rx_gain_ue: float = Field(gt=0)
    rx_gain_gat: float = Field(gt=0)
    rician_kappa: float = Field(gt=0)


@dataclass(frozen=True)
class CommChannels:
    """Communication channels of every slot.

    ``h[t, j, a]`` is the length-N^sat channel from satellite ``j`` to flat UE ``a``.
    """

    h: NDArray[np.complex128]

    @property
    def n_slots(self) -> int:
        return int(self.h.shape[0])

    def slot(self, t: int) -> NDArray[np.complex128]:
        return self.h[t]


def free_space_amplitude(link: LinkBudget, distance_m: ArrayLike) -> NDArray[np.float64]:
    d = np.asarray(distance_m, dtype=float)
    return link.wavelength_m * np.sqrt(link.tx_gain_sat * link.rx_gain_ue) / (4 * np.pi * d)


def rician_channel(
    rng: np.random.Generator,
    link: LinkBudget,
    satellite_km: ArrayLike,
    ue_km: ArrayLike,
    geom: UpaGeometry,
) -> NDArray[np.complex128]:
    """One Rician draw between a satellite and a ground UE."""
    d = float(distances_m(satellite_km, ue_km))
    if d <= 0:
        raise ContractViolation("satellite and UE positions coincide")
    kappa = link.rician_kappa
    los = np.exp(-2j * np.pi * d / link.wavelength_m) * downlook_steering(geom, satellite_km, ue_km)
    nlos = (rng.standard_normal(geom.n) + 1j * rng.standard_normal(geom.n)) / np.sqrt(2.0)
    amp = float(free_space_amplitude(link, d))
    return amp * (np.sqrt(kappa / (1 + kappa)) * los + np.sqrt(1 / (1 + kappa)) * nlos)


def draw_comm_channel(
    rng: np.random.Generator,
    deployment: Deployment,
    i: int,
    j: int,
    u: int,
) -> NDArray[np.complex128]:
    """Channel from satellite ``i`` to the ``u``-th UE served by satellite ``j``.

    The NLoS part is fresh on every call; callers key ``rng`` by slot to get one
    independent realization per slot.
    """
    scenario = deployment.scenario
    ue = deployment.ue_positions[deployment.ue_flat_index(j, u)]
    return rician_channel(
        rng, scenario.link.link_budget, deployment.satellites[i], ue, scenario.arrays.satellite
    )


def realize_comm_channels(
    streams: RngStreams, deployment: Deployment, n_slots: int
) -> CommChannels:
    """Draw every (slot, satellite, UE) channel from its own keyed stream."""
    n_sat = deployment.scenario.arrays.satellite.n
    h = np.zeros(
        (n_slots, deployment.num_satellites, deployment.num_ues, n_sat), dtype=np.complex128
    )
    for t in range(n_slots):
        for i in range(deployment.num_satellites):
            for a in range(deployment.num_ues):
                j, u = int(deployment.ue_owner[a]), int(deployment.ue_local[a])
                rng = streams.rng(StreamTag.COMM_CHANNEL, i, j, u, t)
                h[t, i, a] = draw_comm_channel(rng, deployment, i, j, u)
    return CommChannels(h=h)


def draw_reflection(
    rng: np.random.Generator, rcs_m2: float, min_magnitude: float = 3.0
) -> complex:
    """Swerling-I reflection coefficient, redrawn until its magnitude reaches ``min_magnitude``."""
    if rcs_m2 <= 0:
        raise ContractViolation("radar cross section must be positive")
    scale = np.sqrt(rcs_m2 / 2.0)
    while True:
        rho = complex(scale * rng.standard_normal(), scale * rng.standard_normal())
        if abs(rho) >= min_magnitude:
            return rho


def draw_reflections(
    streams: RngStreams,
    num_satellites: int,
    num_targets: int,
    num_gateways: int,
    rcs_m2: float,
    min_magnitude: float = 3.0,
) -> NDArray[np.complex128]:
    """Reflection coefficients indexed ``[i, k, l]``, constant over the sensing epoch."""
    rho = np.zeros((num_satellites, num_targets, num_gateways), dtype=np.complex128)
    for i in range(num_satellites):
        for k in range(num_targets):
            for l in range(num_gateways):
                rng = streams.rng(StreamTag.REFLECTION, i, k, l)
                rho[i, k, l] = draw_reflection(rng, rcs_m2, min_magnitude)
    return rho


def bistatic_gains(
    link: LinkBudget,
    satellites: ArrayLike,
    points: ArrayLike,
    gateways: ArrayLike,
) -> NDArray[np.complex128]:
    """Deterministic satellite-point-gateway gains, shape ``(I, P, L)``."""
    sats = as_points(np.asarray(satellites, dtype=float))
    pts = as_points(np.asarray(points, dtype=float))
    gats = as_points(np.asarray(gateways, dtype=float))
    d_sat = distances_m(sats[:, None, :], pts[None, :, :])[:, :, None]
    d_gat = distances_m(pts[:, None, :], gats[None, :, :])[None, :, :]
    if np.any(d_sat <= 0) or np.any(d_gat <= 0):
        raise ContractViolation("bistatic point coincides with a satellite or gateway")
    lam = link.wavelength_m
    amplitude = np.sqrt(
        lam**2 * link.rx_gain_gat * link.tx_gain_sat / (64 * np.pi**3 * d_gat**2 * d_sat**2)
    )
    return amplitude * np.exp(-2j * np.pi * (d_gat + d_sat) / lam)


def bistatic_gain(
    link: LinkBudget, satellite: Position3, point: Position3, gateway: Position3
) -> complex:
    return complex(
        bistatic_gains(link, satellite.as_array(), point.as_array(), gateway.as_array())[0, 0, 0]
    )
