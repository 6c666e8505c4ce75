import json
import math
import struct
import uuid
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import TYPE_CHECKING, Any, Optional, Union

import numpy as np
import yaml
from numpy.typing import NDArray
from pydantic import BaseModel, Field

from isacsim import __version__
from isacsim.config.scenario import ScenarioConfig
from isacsim.engine.signal import GridDictionary, ObservationSet

if TYPE_CHECKING:
    from isacsim.orchestrator.trial_runner import FrameworkOutcome, TrialResult

DUMP_MAGIC = b"ISACOBS1"
DUMP_HEADER = struct.Struct("<8sIIII8x")


class RunManifest(BaseModel):
    """Everything needed to reproduce a command's outputs bit-exactly."""

    run_id: str
    command: str
    arguments: dict[str, Any] = Field(default_factory=dict)
    scenario: dict[str, Any]
    seed: int
    output_dir: str
    tool_version: str = __version__
    started_at: datetime
    outputs: list[str] = Field(default_factory=list)

    def scenario_config(self) -> ScenarioConfig:
        return ScenarioConfig.model_validate(self.scenario)


def create_run_manifest(
    command: str,
    scenario: ScenarioConfig,
    seed: int,
    output_dir: Union[str, Path],
    arguments: Optional[dict[str, Any]] = None,
    run_id: Optional[str] = None,
) -> RunManifest:
    return RunManifest(
        run_id=run_id or f"{datetime.now().strftime('%Y%m%d_%H%M%S')}_{uuid.uuid4().hex[:6]}",
        command=command,
        arguments=arguments or {},
        scenario=scenario.model_dump(mode="json"),
        seed=seed,
        output_dir=str(output_dir),
        started_at=datetime.now(),
    )


def save_run_manifest(manifest: RunManifest, path: Union[str, Path]) -> None:
    _save_file(manifest.model_dump(mode="json"), Path(path))


def load_run_manifest(path: Union[str, Path]) -> RunManifest:
    return RunManifest(**_load_file(Path(path)))


def _finite_or_none(value: float) -> Optional[float]:
    return float(value) if value is not None and math.isfinite(value) else None


class FrameworkRecord(BaseModel):
    framework: str
    estimates_km: list[list[float]]
    distance_error_km: Optional[float] = None
    failed: bool = False
    error: Optional[str] = None
    fronthaul_reals: int = 0
    candidate_indices: list[list[int]] = Field(default_factory=list)
    fusion_condition_numbers: list[float] = Field(default_factory=list)
    fusion_fallbacks: int = 0
    association_cost: Optional[float] = None
    symmetrized_cost: Optional[float] = None
    one_per_gateway: Optional[bool] = None

    @classmethod
    def from_outcome(cls, outcome: "FrameworkOutcome") -> "FrameworkRecord":
        return cls(
            framework=outcome.framework.value,
            estimates_km=np.asarray(outcome.estimates, dtype=float).tolist(),
            distance_error_km=_finite_or_none(outcome.distance_error_km),
            failed=outcome.failed,
            error=outcome.error,
            fronthaul_reals=outcome.fronthaul_reals,
            candidate_indices=[list(c.indices) for c in outcome.candidates],
            fusion_condition_numbers=[
                f.condition_number if math.isfinite(f.condition_number) else 1e308
                for f in outcome.fusion
            ],
            fusion_fallbacks=sum(1 for f in outcome.fusion if f.fallback),
            association_cost=outcome.association_cost,
            symmetrized_cost=outcome.symmetrized_cost,
            one_per_gateway=outcome.one_per_gateway,
        )


class TrialRecord(BaseModel):
    """JSON projection of one TrialResult."""

    trial_index: int
    master_seed: int
    sweep_value: Optional[float] = None
    comm_power_w: float
    feasible: bool
    min_threshold: float
    min_sinr: Optional[float] = None
    grid_bound_km: float
    targets_km: list[list[float]]
    frameworks: list[FrameworkRecord] = Field(default_factory=list)
    stages: list[str] = Field(default_factory=list)
    timings_s: dict[str, float] = Field(default_factory=dict)

    @classmethod
    def from_result(cls, result: "TrialResult", sweep_value: Optional[float] = None) -> "TrialRecord":
        return cls(
            trial_index=result.trial_index,
            master_seed=result.master_seed,
            sweep_value=sweep_value,
            comm_power_w=result.comm_power_w,
            feasible=result.feasible,
            min_threshold=result.min_threshold,
            min_sinr=_finite_or_none(result.min_sinr),
            grid_bound_km=result.grid_bound_km,
            targets_km=np.asarray(result.targets, dtype=float).tolist(),
            frameworks=[FrameworkRecord.from_outcome(o) for o in result.outcomes.values()],
            stages=list(result.stages),
            timings_s=dict(result.timings),
        )

    def framework(self, name: str) -> FrameworkRecord:
        for record in self.frameworks:
            if record.framework == name:
                return record
        raise KeyError(name)


def save_trial_records(records: list[TrialRecord], path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = [r.model_dump(mode="json") for r in records]
    path.write_text(json.dumps(data, indent=2, ensure_ascii=False), encoding="utf-8")


def load_trial_records(path: Union[str, Path]) -> list[TrialRecord]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return [TrialRecord(**item) for item in data]


@dataclass(frozen=True)
class ObservationDump:
    y: NDArray[np.complex128]
    blocks: NDArray[np.complex128]
    num_satellites: int
    num_grid_points: int

    def dictionary(self) -> GridDictionary:
        return GridDictionary(self.blocks, self.num_satellites, self.num_grid_points)


def dump_observations(
    path: Union[str, Path], observations: ObservationSet, dictionary: GridDictionary
) -> None:
    """Binary dump: 32-byte header (magic, T, M, I, L), then y and every block.

    Complex values are interleaved little-endian float64 (real, imag).
    """
    num_gateways, n_slots = observations.y.shape
    if dictionary.blocks.shape[:2] != (num_gateways, n_slots):
        raise ValueError("observations and dictionary disagree on gateways or slots")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = DUMP_HEADER.pack(
        DUMP_MAGIC, n_slots, dictionary.num_grid_points, dictionary.num_satellites, num_gateways
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(observations.y, dtype="<c16").tobytes())
        f.write(np.ascontiguousarray(dictionary.blocks, dtype="<c16").tobytes())


def load_observation_dump(path: Union[str, Path]) -> ObservationDump:
    raw = Path(path).read_bytes()
    if len(raw) < DUMP_HEADER.size:
        raise ValueError(f"{path}: file too short for an observation dump")
    magic, n_slots, num_grid, num_sats, num_gats = DUMP_HEADER.unpack_from(raw)
    if magic != DUMP_MAGIC:
        raise ValueError(f"{path}: not an observation dump (magic {magic!r})")
    y_count = num_gats * n_slots
    block_count = num_gats * n_slots * num_sats * num_grid
    expected = DUMP_HEADER.size + 16 * (y_count + block_count)
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<c16", offset=DUMP_HEADER.size)
    y = values[:y_count].reshape(num_gats, n_slots).astype(np.complex128)
    blocks = values[y_count:].reshape(num_gats, n_slots, num_sats * num_grid).astype(np.complex128)
    return ObservationDump(y=y, blocks=blocks, num_satellites=num_sats, num_grid_points=num_grid)


def _load_file(path: Path) -> dict:
    suffix = path.suffix.lower()
    content = path.read_text(encoding="utf-8")

    if suffix in (".yaml", ".yml"):
        return yaml.safe_load(content)
    elif suffix == ".json":
        return json.loads(content)
    else:
        raise ValueError(f"Unsupported file format: {suffix}. Use .yaml, .yml, or .json")


def _save_file(data: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    suffix = path.suffix.lower()

    if suffix in (".yaml", ".yml"):
        content = yaml.safe_dump(data, default_flow_style=False, allow_unicode=True, sort_keys=False)
    elif suffix == ".json":
        content = json.dumps(data, indent=2, ensure_ascii=False)
    else:
        raise ValueError(f"Unsupported file format: {suffix}. Use .yaml, .yml, or .json")

    path.write_text(content, encoding="utf-8")
