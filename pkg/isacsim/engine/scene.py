"""Placed node positions for one trial."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import NDArray

if TYPE_CHECKING:
    from isacsim.config.scenario import ScenarioConfig


@dataclass(frozen=True)
class Deployment:
    """Scenario plus every position a trial needs, as ``(N, 3)`` km arrays.

    UEs are stored flat in (satellite, local index) order; ``ue_owner[a]`` is the
    serving satellite of flat UE ``a`` and ``ue_local[a]`` its index within that
    satellite.
    """

    scenario: ScenarioConfig
    satellites: NDArray[np.float64]
    gateways: NDArray[np.float64]
    ue_positions: NDArray[np.float64]
    ue_owner: NDArray[np.int64]
    ue_local: NDArray[np.int64]
    targets: NDArray[np.float64]
    grid: NDArray[np.float64]

    @property
    def num_satellites(self) -> int:
        return int(self.satellites.shape[0])

    @property
    def num_gateways(self) -> int:
        return int(self.gateways.shape[0])

    @property
    def num_ues(self) -> int:
        return int(self.ue_positions.shape[0])

    @property
    def num_targets(self) -> int:
        return int(self.targets.shape[0])

    @property
    def num_grid_points(self) -> int:
        return int(self.grid.shape[0])

    @property
    def n_slots(self) -> int:
        return self.scenario.slots_for(self.num_grid_points)

    def ue_flat_index(self, satellite: int, local: int) -> int:
        hits = np.flatnonzero((self.ue_owner == satellite) & (self.ue_local == local))
        if hits.size == 0:
            raise IndexError(f"no UE {local} on satellite {satellite}")
        return int(hits[0])
