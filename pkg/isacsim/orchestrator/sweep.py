"""Parameter sweeps over targets, gateways, slots or sensing power.

Every axis value reuses trial indices ``0..trials-1`` under the same master seed, so
points differ only through the swept parameter.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from isacsim.config.scenario import Framework, ScenarioConfig
from isacsim.errors import ConfigurationError, ContractViolation
from isacsim.io.logging import SimulationLogger
from isacsim.orchestrator.executor import TrialExecutor, TrialOutcome

logger = logging.getLogger(__name__)


class SweepAxis(str, Enum):
    TARGETS = "targets"
    GATEWAYS = "gateways"
    SLOTS = "slots"
    POWER = "power"


def apply_axis(scenario: ScenarioConfig, axis: SweepAxis, value: float) -> ScenarioConfig:
    """Scenario with the swept parameter set to ``value``.

    Raises:
        ConfigurationError: If the value is invalid for the scenario
    """
    try:
        if axis is SweepAxis.TARGETS:
            return scenario.updated("network", num_targets=int(value))
        if axis is SweepAxis.GATEWAYS:
            return scenario.with_gateway_count(int(value))
        if axis is SweepAxis.SLOTS:
            return scenario.updated("sensing", n_slots=int(value))
        return scenario.updated("sensing", sensing_power_w=float(value))
    except (ValidationError, ValueError) as e:
        raise ConfigurationError(f"invalid {axis.value} value {value}: {e}") from e


@dataclass
class SweepRow:
    axis: str
    value: float
    framework: Framework
    mean_distance_error_km: float
    stderr_km: float
    mean_comm_power_w: float
    feasibility_rate: float
    trials: int
    seed: int


@dataclass
class SweepPoint:
    value: float
    outcomes: list[TrialOutcome]
    rows: list[SweepRow]

    @property
    def failed_trials(self) -> int:
        return sum(1 for o in self.outcomes if not o.ok)

    @property
    def all_infeasible(self) -> bool:
        results = [o.result for o in self.outcomes if o.result is not None]
        return bool(results) and not any(r.feasible for r in results)


@dataclass
class SweepResult:
    axis: SweepAxis
    seed: int
    points: list[SweepPoint] = field(default_factory=list)

    @property
    def rows(self) -> list[SweepRow]:
        return [row for point in self.points for row in point.rows]

    def row(self, value: float, framework: Framework) -> SweepRow:
        for r in self.rows:
            if r.value == value and r.framework == framework:
                return r
        raise KeyError(f"no row for {self.axis.value}={value}, {framework.value}")


def mean_and_stderr(values: Sequence[float]) -> tuple[float, float]:
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        return float("nan"), float("nan")
    if data.size == 1:
        return float(data[0]), 0.0
    return float(data.mean()), float(data.std(ddof=1) / np.sqrt(data.size))


def aggregate_point(
    axis: SweepAxis,
    value: float,
    frameworks: Sequence[Framework],
    outcomes: list[TrialOutcome],
    seed: int,
) -> list[SweepRow]:
    """One row per framework.

    Trials that raised are left out of every column. Infeasible trials are excluded
    from the power mean only.
    """
    results = [o.result for o in outcomes if o.result is not None]
    feasible = [r for r in results if r.feasible]
    mean_power = float(np.mean([r.comm_power_w for r in feasible])) if feasible else float("nan")
    rate = len(feasible) / len(results) if results else float("nan")

    rows = []
    for fw in frameworks:
        errors = [
            r.outcomes[fw].distance_error_km
            for r in results
            if fw in r.outcomes and not r.outcomes[fw].failed
        ]
        errors = [e for e in errors if np.isfinite(e)]
        mean, stderr = mean_and_stderr(errors)
        rows.append(
            SweepRow(
                axis=axis.value,
                value=value,
                framework=fw,
                mean_distance_error_km=mean,
                stderr_km=stderr,
                mean_comm_power_w=mean_power,
                feasibility_rate=rate,
                trials=len(errors),
                seed=seed,
            )
        )
    return rows


def sweep(
    scenario: ScenarioConfig,
    axis: SweepAxis,
    values: Iterable[float],
    trials: int,
    seed: int,
    frameworks: Optional[Iterable[Framework]] = None,
    executor: Optional[TrialExecutor] = None,
    sim_logger: Optional[SimulationLogger] = None,
) -> SweepResult:
    """Run ``trials`` seeded trials per axis value and aggregate mean and standard error.

    Raises:
        ContractViolation: If ``values`` is empty or ``trials`` < 1
        ConfigurationError: If an axis value is invalid for the scenario
    """
    values = list(values)
    if not values:
        raise ContractViolation("sweep needs at least one axis value")
    if trials < 1:
        raise ContractViolation("sweep needs at least one trial per point")
    fws = list(frameworks) if frameworks is not None else list(scenario.experiment.frameworks)
    point_scenarios = [apply_axis(scenario, axis, v) for v in values]

    own_executor = executor is None
    executor = executor or TrialExecutor(scenario.experiment.threads)
    result = SweepResult(axis=axis, seed=seed)
    try:
        for value, point_scenario in zip(values, point_scenarios):
            logger.info(f"Sweep {axis.value}={value}: running {trials} trials")
            outcomes = executor.run_trials(point_scenario, seed, trials, fws, sim_logger=sim_logger)
            rows = aggregate_point(axis, value, fws, outcomes, seed)
            point = SweepPoint(value=value, outcomes=outcomes, rows=rows)
            result.points.append(point)
            if sim_logger is not None:
                for o in outcomes:
                    if o.error is not None:
                        sim_logger.log_trial_failure(o.trial_index, o.error)
                sim_logger.log_sweep_point(
                    axis.value,
                    value,
                    [
                        {"framework": r.framework.value, "mean_km": r.mean_distance_error_km}
                        for r in rows
                    ],
                    point.failed_trials,
                )
    finally:
        if own_executor:
            executor.shutdown()
    return result
