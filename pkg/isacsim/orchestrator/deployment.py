"""Sensing grid construction and random node placement."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from isacsim.config.scenario import GridSpec, ScenarioConfig
from isacsim.engine.geometry import as_points
from isacsim.engine.scene import Deployment
from isacsim.engine.streams import RngStreams, StreamTag
from isacsim.errors import PlacementError

logger = logging.getLogger(__name__)

MAX_PLACEMENT_ATTEMPTS = 100_000
_LATTICE_TOLERANCE = 1e-9


def build_grid(spec: GridSpec) -> NDArray[np.float64]:
    """Lattice points inside the disc, replicated at every altitude level.

    Points are ordered by altitude, then x, then y, so index ``m`` is stable for a
    given spec.

    Returns:
        Grid positions in km, shape (M, 3)
    """
    radius = spec.diameter_km / 2.0
    steps = int(np.floor(radius / spec.spacing_km + _LATTICE_TOLERANCE))
    offsets = np.arange(-steps, steps + 1) * spec.spacing_km
    layer = [
        (spec.center_km[0] + dx, spec.center_km[1] + dy)
        for dx in offsets
        for dy in offsets
        if dx * dx + dy * dy <= radius * radius + _LATTICE_TOLERANCE
    ]
    points = [(x, y, z) for z in spec.altitudes_km for x, y in layer]
    return np.array(points, dtype=float).reshape(-1, 3)


@dataclass(frozen=True)
class Placement:
    """Randomly placed UEs (flat, satellite-major) and targets."""

    ue_positions: NDArray[np.float64]
    ue_owner: NDArray[np.int64]
    ue_local: NDArray[np.int64]
    targets: NDArray[np.float64]


def uniform_in_disc(
    rng: np.random.Generator, center: NDArray[np.float64], diameter: float, size: int
) -> NDArray[np.float64]:
    """Uniform (x, y) samples in a disc, shape (size, 2)."""
    radius = diameter / 2.0 * np.sqrt(rng.random(size))
    angle = 2.0 * np.pi * rng.random(size)
    return center[None, :2] + np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)


def _place_ues(rng: np.random.Generator, scenario: ScenarioConfig) -> NDArray[np.float64]:
    net = scenario.network
    placed: list[NDArray[np.float64]] = []
    attempts = 0
    for sat in as_points(net.satellites):
        for _ in range(net.ues_per_satellite):
            while True:
                attempts += 1
                if attempts > MAX_PLACEMENT_ATTEMPTS:
                    raise PlacementError(
                        f"could not place {net.ues_per_satellite} UEs per satellite with "
                        f"{net.min_ue_distance_km} km spacing in a {net.ue_disc_diameter_km} km disc"
                    )
                xy = uniform_in_disc(rng, sat, net.ue_disc_diameter_km, 1)[0]
                candidate = np.array([xy[0], xy[1], 0.0])
                if all(np.linalg.norm(candidate - p) >= net.min_ue_distance_km for p in placed):
                    placed.append(candidate)
                    break
    logger.debug(f"placed {len(placed)} UEs after {attempts} draws")
    return np.array(placed, dtype=float).reshape(-1, 3)


def _place_targets(
    rng: np.random.Generator, scenario: ScenarioConfig, grid: NDArray[np.float64]
) -> NDArray[np.float64]:
    net = scenario.network
    if net.fixed_targets is not None:
        return as_points(net.fixed_targets)
    if net.target_placement == "on_grid":
        if net.num_targets > grid.shape[0]:
            raise PlacementError(f"cannot place {net.num_targets} targets on {grid.shape[0]} grid points")
        return grid[rng.choice(grid.shape[0], size=net.num_targets, replace=False)].copy()
    center = np.array([*scenario.grid.center_km, 0.0])
    xy = uniform_in_disc(rng, center, net.target_disc_diameter_km, net.num_targets)
    z = rng.uniform(net.target_altitude_min_km, net.target_altitude_max_km, net.num_targets)
    return np.column_stack([xy, z])


def place_nodes(
    rng: np.random.Generator, scenario: ScenarioConfig, grid: NDArray[np.float64]
) -> Placement:
    """Draw UE and target positions.

    UEs are uniform on the ground disc below their satellite with a minimum pairwise
    distance enforced by rejection sampling; targets are uniform in the sensing disc
    with uniform altitude, on distinct grid points, or taken from ``fixed_targets``.

    Raises:
        PlacementError: If rejection sampling exceeds its attempt budget
    """
    ues = _place_ues(rng, scenario)
    per_sat = scenario.network.ues_per_satellite
    owner = np.repeat(np.arange(scenario.num_satellites), per_sat).astype(np.int64)
    local = np.tile(np.arange(per_sat), scenario.num_satellites).astype(np.int64)
    targets = _place_targets(rng, scenario, grid)
    return Placement(ue_positions=ues, ue_owner=owner, ue_local=local, targets=targets)


def build_deployment(
    scenario: ScenarioConfig,
    streams: RngStreams,
    grid: Optional[NDArray[np.float64]] = None,
) -> Deployment:
    grid = build_grid(scenario.grid) if grid is None else grid
    placement = place_nodes(streams.rng(StreamTag.PLACEMENT), scenario, grid)
    return Deployment(
        scenario=scenario,
        satellites=as_points(scenario.network.satellites),
        gateways=as_points(scenario.network.gateways),
        ue_positions=placement.ue_positions,
        ue_owner=placement.ue_owner,
        ue_local=placement.ue_local,
        targets=placement.targets,
        grid=grid,
    )
