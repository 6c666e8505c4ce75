"""Scenario configuration models.

Field defaults reproduce the full-scale reference scenario (26x26 satellite arrays,
32x32 gateway arrays, 1 km grid). The lighter desk profile lives in
``isacsim.config.profiles``.
"""

from enum import Enum
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from isacsim.engine.channel import LinkBudget
from isacsim.engine.geometry import Position3, UpaGeometry


def db_to_linear(value_db: float) -> float:
    return float(10.0 ** (value_db / 10.0))


def dbm_to_watts(value_dbm: float) -> float:
    return float(10.0 ** ((value_dbm - 30.0) / 10.0))


class Framework(str, Enum):
    """Sensing frameworks that a trial can evaluate."""

    PROPOSED_CEN = "proposed-cen"
    PROPOSED_DIS = "proposed-dis"
    OMP_NC = "omp-nc"
    COSAMP_CEN = "cosamp-cen"
    COSAMP_DIS = "cosamp-dis"
    MUSIC_CEN = "music-cen"
    MUSIC_NC = "music-nc"
    OMP_DIS_KMEANS = "omp-dis-kmeans"

    @property
    def is_centralized(self) -> bool:
        return self in (Framework.PROPOSED_CEN, Framework.COSAMP_CEN, Framework.MUSIC_CEN)


DEFAULT_FRAMEWORKS: list[Framework] = list(Framework)


class NetworkConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    satellites: list[Position3] = Field(
        default_factory=lambda: [Position3(x=50, y=50, z=600), Position3(x=-50, y=-50, z=600)],
        min_length=1,
        description="Satellite positions in km",
    )
    gateways: list[Position3] = Field(
        default_factory=lambda: [
            Position3(x=1, y=1, z=0),
            Position3(x=1, y=-1, z=0),
            Position3(x=-1, y=1, z=0),
            Position3(x=-1, y=-1, z=0),
        ],
        min_length=1,
        description="Gateway positions in km",
    )
    ues_per_satellite: int = Field(default=5, ge=0, le=64, description="UEs served by each satellite")
    num_targets: int = Field(default=3, ge=1, le=32, description="Number of targets K")
    ue_disc_diameter_km: float = Field(default=50.0, gt=0, description="UE placement disc diameter")
    min_ue_distance_km: float = Field(default=10.0, ge=0, description="Minimum inter-UE distance")
    target_disc_diameter_km: float = Field(default=10.0, ge=0, description="Target placement disc diameter")
    target_altitude_min_km: float = Field(default=17.0, gt=0, description="Lowest target altitude")
    target_altitude_max_km: float = Field(default=20.0, gt=0, description="Highest target altitude")
    target_placement: Literal["uniform", "on_grid"] = Field(
        default="uniform",
        description="uniform: continuous draw in the sensing disc; on_grid: distinct grid points",
    )
    fixed_targets: Optional[list[Position3]] = Field(
        default=None,
        description="Explicit target positions; overrides random placement",
    )

    @model_validator(mode="after")
    def check_targets(self) -> "NetworkConfig":
        if self.target_altitude_max_km < self.target_altitude_min_km:
            raise ValueError("target_altitude_max_km must be >= target_altitude_min_km")
        if self.fixed_targets is not None and len(self.fixed_targets) != self.num_targets:
            raise ValueError(
                f"fixed_targets has {len(self.fixed_targets)} entries but num_targets={self.num_targets}"
            )
        return self


class ArrayConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    satellite: UpaGeometry = Field(
        default_factory=lambda: UpaGeometry(n_x=26, n_y=26),
        description="Satellite UPA size",
    )
    gateway: UpaGeometry = Field(
        default_factory=lambda: UpaGeometry(n_x=32, n_y=32),
        description="Gateway UPA size",
    )


class LinkConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    wavelength_m: float = Field(default=0.15, gt=0, description="Carrier wavelength")
    sat_tx_gain_dbi: float = Field(default=30.0, description="Satellite transmit antenna gain")
    gat_rx_gain_dbi: float = Field(default=30.0, description="Gateway receive antenna gain")
    ue_rx_gain_dbi: float = Field(default=-5.5, description="UE receive antenna gain")
    rician_kappa_db: float = Field(default=30.0, description="Rician K-factor")
    rcs_dbsm: float = Field(default=10.0, description="Target radar cross section")
    noise_psd_dbm_per_hz: float = Field(default=-174.0, description="Noise power spectral density")
    bandwidth_hz: float = Field(default=5e6, gt=0, description="Signal bandwidth")

    @property
    def rician_kappa(self) -> float:
        return db_to_linear(self.rician_kappa_db)

    @property
    def rcs_m2(self) -> float:
        return db_to_linear(self.rcs_dbsm)

    @property
    def noise_power_w(self) -> float:
        return dbm_to_watts(self.noise_psd_dbm_per_hz) * self.bandwidth_hz

    @property
    def link_budget(self) -> LinkBudget:
        return LinkBudget(
            wavelength_m=self.wavelength_m,
            tx_gain_sat=db_to_linear(self.sat_tx_gain_dbi),
            rx_gain_ue=db_to_linear(self.ue_rx_gain_dbi),
            rx_gain_gat=db_to_linear(self.gat_rx_gain_dbi),
            rician_kappa=self.rician_kappa,
        )


class GridSpec(BaseModel):
    """Sensing grid: a square lattice clipped to a disc, stacked over altitude levels."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    center_km: tuple[float, float] = Field(default=(0.0, 0.0), description="Disc center (x, y)")
    diameter_km: float = Field(default=10.0, ge=0, description="Disc diameter")
    spacing_km: float = Field(default=1.0, gt=0, description="Lattice spacing")
    altitudes_km: list[float] = Field(
        default_factory=lambda: [17.0, 18.0, 19.0, 20.0],
        min_length=1,
        description="Altitude levels",
    )

    @field_validator("altitudes_km")
    @classmethod
    def positive_altitudes(cls, value: list[float]) -> list[float]:
        if any(a <= 0 for a in value):
            raise ValueError("grid altitudes must be positive")
        return value


class SensingConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    sensing_power_w: float = Field(default=1.0, gt=0, description="Sensing power per satellite")
    sinr_threshold_db: float = Field(default=-10.0, description="Communication SINR threshold")
    n_slots: Optional[int] = Field(default=None, ge=1, description="Time slots T; None means T = M")
    min_reflection_magnitude: float = Field(
        default=3.0, ge=0, description="Reflection coefficients below this magnitude are redrawn"
    )
    backoff_factor: float = Field(default=0.5, gt=0, lt=1, description="SINR threshold backoff per retry")
    max_backoff_steps: int = Field(default=20, ge=0, description="Maximum SINR threshold backoffs")
    noise_enabled: bool = Field(default=True, description="Add receiver noise at gateways")
    music_slot_factor: int = Field(default=10, ge=1, description="MUSIC snapshots per grid point")
    normalize_columns: bool = Field(default=False, description="Unit-atom group scores in OMP/CoSaMP")
    residual_tolerance: Optional[float] = Field(
        default=None, gt=0, description="Optional early stop when the residual norm drops below this"
    )
    cosamp_max_iterations: int = Field(default=50, ge=1, description="CoSaMP iteration cap")
    kmeans_max_iterations: int = Field(default=50, ge=1, description="K-means iteration cap")
    fusion_condition_limit: float = Field(default=1e8, gt=1, description="Fusion fallback threshold")

    @property
    def sinr_threshold(self) -> float:
        return db_to_linear(self.sinr_threshold_db)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    trials: int = Field(default=1000, ge=1, description="Monte Carlo trials per sweep point")
    seed: Optional[int] = Field(default=None, ge=0, description="Master seed; None draws from entropy")
    frameworks: list[Framework] = Field(
        default_factory=lambda: list(DEFAULT_FRAMEWORKS),
        min_length=1,
        description="Frameworks evaluated in each trial",
    )
    threads: Optional[int] = Field(default=None, ge=1, description="Trial pool size")


class ScenarioConfig(BaseModel):
    """Every physical constant, position, grid parameter and threshold of one scenario.

    Attributes:
        network: Node positions, counts and placement rules
        arrays: Satellite and gateway UPA sizes
        link: Link budget in dB units
        grid: Sensing grid specification
        sensing: Slot count, powers, thresholds and algorithm knobs
        experiment: Trial count, seed, frameworks and pool size
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    network: NetworkConfig = Field(default_factory=NetworkConfig)
    arrays: ArrayConfig = Field(default_factory=ArrayConfig)
    link: LinkConfig = Field(default_factory=LinkConfig)
    grid: GridSpec = Field(default_factory=GridSpec)
    sensing: SensingConfig = Field(default_factory=SensingConfig)
    experiment: ExperimentConfig = Field(default_factory=ExperimentConfig)

    @model_validator(mode="after")
    def check_geometry(self) -> "ScenarioConfig":
        top = max(self.network.target_altitude_max_km, max(self.grid.altitudes_km))
        bottom = min(self.network.target_altitude_min_km, min(self.grid.altitudes_km))
        if self.network.fixed_targets:
            top = max(top, max(t.z for t in self.network.fixed_targets))
            bottom = min(bottom, min(t.z for t in self.network.fixed_targets))
        if min(s.z for s in self.network.satellites) <= top:
            raise ValueError("every satellite must be above the highest target/grid altitude")
        if max(g.z for g in self.network.gateways) >= bottom:
            raise ValueError("every gateway must be below the lowest target/grid altitude")
        if self.network.ues_per_satellite > 1 and (
            self.network.min_ue_distance_km >= self.network.ue_disc_diameter_km
        ):
            raise ValueError("min_ue_distance_km must be smaller than ue_disc_diameter_km")
        return self

    @property
    def num_satellites(self) -> int:
        return len(self.network.satellites)

    @property
    def num_gateways(self) -> int:
        return len(self.network.gateways)

    @property
    def noise_power_w(self) -> float:
        """Receiver noise power N0*B, shared by UEs and gateways."""
        return self.link.noise_power_w

    def slots_for(self, num_grid_points: int) -> int:
        return self.sensing.n_slots if self.sensing.n_slots is not None else num_grid_points

    def updated(self, section: str, **values: Any) -> "ScenarioConfig":
        """Return a re-validated copy with fields of one section replaced."""
        if section not in type(self).model_fields:
            raise ValueError(f"Unknown section: {section}")
        data = self.model_dump()
        data[section] = {**data[section], **values}
        return ScenarioConfig.model_validate(data)

    def with_gateway_count(self, count: int) -> "ScenarioConfig":
        gateways = self.network.gateways
        if not 1 <= count <= len(gateways):
            raise ValueError(f"gateway count must be in 1..{len(gateways)}, got {count}")
        return self.updated("network", gateways=[g.model_dump() for g in gateways[:count]])
