import json
import logging
import sys
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Union

from pydantic import BaseModel


class SimulationLogLevel(str, Enum):
    MINIMAL = "minimal"
    STANDARD = "standard"
    VERBOSE = "verbose"


class LogCategory(str, Enum):
    RUN = "run"
    TRIAL = "trial"
    POWER = "power"
    RECOVERY = "recovery"
    ASSOCIATION = "association"
    SWEEP = "sweep"
    VALIDATION = "validation"
    ERROR = "error"


class LogEntry(BaseModel):
    timestamp: datetime
    level: str
    category: str
    message: str
    data: dict[str, Any] = {}


class SimulationLogger:
    def __init__(
        self,
        run_id: str,
        log_level: SimulationLogLevel = SimulationLogLevel.STANDARD,
        output_path: Optional[Path] = None,
        enable_console: bool = True,
        enable_file: bool = False,
    ):
        self.run_id = run_id
        self.log_level = log_level
        self.output_path = output_path
        self.enable_console = enable_console
        self.enable_file = enable_file
        self.entries: list[LogEntry] = []

        self._logger = logging.getLogger(f"isacsim.run.{run_id}")
        self._logger.setLevel(logging.DEBUG)
        self._logger.propagate = False

        for handler in self._logger.handlers[:]:
            self._logger.removeHandler(handler)
            handler.close()

        if enable_console:
            console_handler = logging.StreamHandler(sys.stdout)
            console_handler.setLevel(logging.INFO)
            console_handler.setFormatter(
                logging.Formatter("%(asctime)s [%(levelname)s] %(message)s", "%H:%M:%S")
            )
            self._logger.addHandler(console_handler)

        if enable_file and output_path:
            output_path.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(output_path / f"{run_id}.log", encoding="utf-8")
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(
                logging.Formatter("%(asctime)s [%(levelname)s] %(message)s")
            )
            self._logger.addHandler(file_handler)

    def _should_log(self, required_level: SimulationLogLevel) -> bool:
        levels = [
            SimulationLogLevel.MINIMAL,
            SimulationLogLevel.STANDARD,
            SimulationLogLevel.VERBOSE,
        ]
        return levels.index(self.log_level) >= levels.index(required_level)

    def _add_entry(
        self,
        level: str,
        category: str,
        message: str,
        data: Optional[dict[str, Any]] = None,
    ) -> None:
        entry = LogEntry(
            timestamp=datetime.now(),
            level=level,
            category=category,
            message=message,
            data=data or {},
        )
        self.entries.append(entry)

    def log_run_start(self, command: str, seed: int, scenario: dict[str, Any]) -> None:
        self._add_entry(
            level="INFO",
            category=LogCategory.RUN.value,
            message=f"{command} started",
            data={"command": command, "seed": seed, "scenario": scenario},
        )
        self._logger.info(f"Run {self.run_id}: {command} started (seed={seed})")

    def log_trial(
        self,
        trial_index: int,
        errors_km: dict[str, float],
        comm_power_w: float,
        feasible: bool,
        duration_ms: float,
    ) -> None:
        self._add_entry(
            level="DEBUG",
            category=LogCategory.TRIAL.value,
            message=f"Trial {trial_index} finished",
            data={
                "trial_index": trial_index,
                "errors_km": errors_km,
                "comm_power_w": comm_power_w,
                "feasible": feasible,
                "duration_ms": duration_ms,
            },
        )
        if self._should_log(SimulationLogLevel.VERBOSE):
            summary = ", ".join(f"{fw}={err:.3f}" for fw, err in errors_km.items())
            self._logger.info(f"[Trial {trial_index}] {summary} ({duration_ms:.0f} ms)")

    def log_infeasible_slot(self, trial_index: int, slot: int, threshold: float) -> None:
        self._add_entry(
            level="WARNING",
            category=LogCategory.POWER.value,
            message=f"Slot {slot} infeasible",
            data={"trial_index": trial_index, "slot": slot, "threshold": threshold},
        )
        if self._should_log(SimulationLogLevel.STANDARD):
            self._logger.warning(
                f"[Power] trial {trial_index} slot {slot} infeasible at threshold {threshold:.3g}"
            )

    def log_trial_failure(self, trial_index: int, error: Exception) -> None:
        self._add_entry(
            level="WARNING",
            category=LogCategory.TRIAL.value,
            message=f"Trial {trial_index} failed",
            data={"trial_index": trial_index, "error": str(error), "error_type": type(error).__name__},
        )
        self._logger.warning(f"[Trial {trial_index}] failed: {error}")

    def log_sweep_point(
        self,
        axis: str,
        value: float,
        rows: list[dict[str, Any]],
        failed_trials: int,
    ) -> None:
        self._add_entry(
            level="INFO",
            category=LogCategory.SWEEP.value,
            message=f"Sweep point {axis}={value} done",
            data={"axis": axis, "value": value, "rows": rows, "failed_trials": failed_trials},
        )
        if self._should_log(SimulationLogLevel.STANDARD):
            self._logger.info(
                f"[Sweep] {axis}={value}: {len(rows)} frameworks, {failed_trials} failed trials"
            )

    def log_validation_check(self, name: str, passed: bool, detail: str, seconds: float) -> None:
        self._add_entry(
            level="INFO" if passed else "ERROR",
            category=LogCategory.VALIDATION.value,
            message=f"{name}: {'passed' if passed else 'FAILED'}",
            data={"name": name, "passed": passed, "detail": detail, "seconds": seconds},
        )
        if not passed:
            self._logger.error(f"[Validation] {name} failed: {detail}")
        elif self._should_log(SimulationLogLevel.STANDARD):
            self._logger.info(f"[Validation] {name} passed ({seconds:.2f} s)")

    def log_run_end(self, command: str, outputs: list[str]) -> None:
        self._add_entry(
            level="INFO",
            category=LogCategory.RUN.value,
            message=f"{command} finished",
            data={"outputs": outputs},
        )
        self._logger.info(f"Run {self.run_id}: {command} finished")

    def log_error(
        self,
        message: str,
        error_type: str,
        details: Optional[dict[str, Any]] = None,
    ) -> None:
        self._add_entry(
            level="ERROR",
            category=LogCategory.ERROR.value,
            message=message,
            data={"error_type": error_type, **(details or {})},
        )
        self._logger.error(f"[Error] {error_type}: {message}")

    def get_entries(self, category: Optional[str] = None) -> list[LogEntry]:
        if category:
            return [e for e in self.entries if e.category == category]
        return self.entries.copy()

    def export_json(self, path: Optional[Union[str, Path]] = None) -> str:
        content = json.dumps(
            [e.model_dump(mode="json") for e in self.entries],
            indent=2,
            ensure_ascii=False,
            default=str,
        )
        if path is not None:
            Path(path).write_text(content, encoding="utf-8")
        return content

    def close(self) -> None:
        for handler in self._logger.handlers[:]:
            self._logger.removeHandler(handler)
            handler.close()


def create_simulation_logger(
    run_id: Optional[str] = None,
    log_level: SimulationLogLevel = SimulationLogLevel.STANDARD,
    output_path: Optional[Union[str, Path]] = None,
    enable_console: bool = True,
    enable_file: bool = False,
) -> SimulationLogger:
    if run_id is None:
        run_id = datetime.now().strftime("%Y%m%d_%H%M%S")

    path = Path(output_path) if output_path else None

    return SimulationLogger(
        run_id=run_id,
        log_level=log_level,
        output_path=path,
        enable_console=enable_console,
        enable_file=enable_file,
    )
