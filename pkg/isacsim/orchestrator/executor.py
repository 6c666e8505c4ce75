"""Thread pool that runs seeded trials and captures per-trial errors."""

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from numpy.typing import NDArray

from isacsim.config.scenario import Framework, ScenarioConfig
from isacsim.errors import ConfigurationError
from isacsim.io.logging import SimulationLogger
from isacsim.orchestrator.deployment import build_grid
from isacsim.orchestrator.trial_runner import TrialResult, run_trial

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "ISAC_SIM_THREADS"


@dataclass
class TrialOutcome:
    trial_index: int
    result: Optional[TrialResult] = None
    error: Optional[Exception] = None
    duration_ms: float = 0.0

    @property
    def ok(self) -> bool:
        return self.result is not None


def resolve_thread_count(threads: Optional[int] = None) -> int:
    """Explicit value, else ``ISAC_SIM_THREADS``, else the available parallelism."""
    if threads is not None:
        if threads < 1:
            raise ConfigurationError(f"thread count must be at least 1, got {threads}")
        return threads
    env_value = os.environ.get(THREADS_ENV_VAR)
    if env_value:
        try:
            value = int(env_value)
        except ValueError:
            raise ConfigurationError(f"{THREADS_ENV_VAR} must be an integer, got {env_value!r}")
        if value < 1:
            raise ConfigurationError(f"{THREADS_ENV_VAR} must be at least 1, got {value}")
        return value
    return os.cpu_count() or 1


class TrialExecutor:
    """Runs seeded trials on a thread pool and returns them in trial-index order."""

    def __init__(self, threads: Optional[int] = None):
        self.threads = resolve_thread_count(threads)
        self._executor = ThreadPoolExecutor(max_workers=self.threads)

    def _execute_single(
        self,
        scenario: ScenarioConfig,
        master_seed: int,
        trial_index: int,
        frameworks: Optional[list[Framework]],
        grid: NDArray[np.float64],
        sim_logger: Optional[SimulationLogger] = None,
    ) -> TrialOutcome:
        start = time.time()
        try:
            result = run_trial(
                scenario, master_seed, trial_index, frameworks, grid, sim_logger=sim_logger
            )
            return TrialOutcome(trial_index, result, None, (time.time() - start) * 1000)
        except Exception as e:
            logger.warning(f"Trial {trial_index} failed: {e}")
            return TrialOutcome(trial_index, None, e, (time.time() - start) * 1000)

    def run_trials(
        self,
        scenario: ScenarioConfig,
        master_seed: int,
        trials: int,
        frameworks: Optional[Iterable[Framework]] = None,
        first_index: int = 0,
        sim_logger: Optional[SimulationLogger] = None,
    ) -> list[TrialOutcome]:
        grid = build_grid(scenario.grid)
        fw = list(frameworks) if frameworks is not None else None
        indices = range(first_index, first_index + trials)

        if self.threads == 1 or trials <= 1:
            return [
                self._execute_single(scenario, master_seed, i, fw, grid, sim_logger) for i in indices
            ]

        futures = [
            self._executor.submit(
                self._execute_single, scenario, master_seed, i, fw, grid, sim_logger
            )
            for i in indices
        ]
        return [future.result() for future in futures]

    def shutdown(self) -> None:
        self._executor.shutdown(wait=True)

    def __enter__(self) -> "TrialExecutor":
        return self

    def __exit__(self, *exc_info) -> None:
        self.shutdown()


def create_trial_executor(threads: Optional[int] = None) -> TrialExecutor:
    return TrialExecutor(threads)
