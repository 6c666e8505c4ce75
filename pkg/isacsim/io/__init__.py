"""Run logging, artifact persistence and result tables."""

from isacsim.io.analysis import CSV_HEADER, SweepAnalyzer, format_float, trial_rows, write_csv
from isacsim.io.logging import (
    LogCategory,
    LogEntry,
    SimulationLogger,
    SimulationLogLevel,
    create_simulation_logger,
)
from isacsim.io.persistence import (
    FrameworkRecord,
    ObservationDump,
    RunManifest,
    TrialRecord,
    create_run_manifest,
    dump_observations,
    load_observation_dump,
    load_run_manifest,
    load_trial_records,
    save_run_manifest,
    save_trial_records,
)

__all__ = [
    "CSV_HEADER",
    "SweepAnalyzer",
    "format_float",
    "trial_rows",
    "write_csv",
    "LogCategory",
    "LogEntry",
    "SimulationLogger",
    "SimulationLogLevel",
    "create_simulation_logger",
    "FrameworkRecord",
    "ObservationDump",
    "RunManifest",
    "TrialRecord",
    "create_run_manifest",
    "dump_observations",
    "load_observation_dump",
    "load_run_manifest",
    "load_trial_records",
    "save_run_manifest",
    "save_trial_records",
]
