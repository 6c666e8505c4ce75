from isacsim.orchestrator.deployment import Placement, build_deployment, build_grid, place_nodes
from isacsim.orchestrator.executor import (
    TrialExecutor,
    TrialOutcome,
    create_trial_executor,
    resolve_thread_count,
)
from isacsim.orchestrator.metrics import MatchedError, average_distance_error, grid_bound
from isacsim.orchestrator.sweep import SweepAxis, SweepResult, SweepRow, apply_axis, sweep
from isacsim.orchestrator.trial_runner import (
    FrameworkOutcome,
    TrialResult,
    TrialRunner,
    run_trial,
)

__all__ = [
    "Placement",
    "build_deployment",
    "build_grid",
    "place_nodes",
    "TrialExecutor",
    "TrialOutcome",
    "create_trial_executor",
    "resolve_thread_count",
    "MatchedError",
    "average_distance_error",
    "grid_bound",
    "SweepAxis",
    "SweepResult",
    "SweepRow",
    "apply_axis",
    "sweep",
    "FrameworkOutcome",
    "TrialResult",
    "TrialRunner",
    "run_trial",
]
