import csv
import io
import math
from pathlib import Path
from typing import TYPE_CHECKING, Any, Optional, Union

from rich.console import Console
from rich.table import Table

if TYPE_CHECKING:
    from isacsim.config.scenario import Framework
    from isacsim.orchestrator.sweep import SweepResult, SweepRow
    from isacsim.orchestrator.trial_runner import TrialResult

CSV_HEADER = [
    "axis",
    "value",
    "framework",
    "mean_distance_error_km",
    "stderr_km",
    "mean_comm_power_w",
    "feasibility_rate",
    "trials",
    "seed",
]


def format_float(value: float) -> str:
    """Nine significant digits; NaN and infinities print as ``nan``/``inf``/``-inf``."""
    if math.isnan(value):
        return "nan"
    return f"{value:.9g}"


def _row_cells(row: "SweepRow") -> list[str]:
    return [
        row.axis,
        format_float(row.value),
        row.framework.value,
        format_float(row.mean_distance_error_km),
        format_float(row.stderr_km),
        format_float(row.mean_comm_power_w),
        format_float(row.feasibility_rate),
        str(row.trials),
        str(row.seed),
    ]


def write_csv(rows: list[list[str]], path: Optional[Union[str, Path]] = None) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(rows)
    content = buffer.getvalue()
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            f.write(content)
    return content


def trial_rows(result: "TrialResult") -> list[list[str]]:
    """CSV rows of a single trial, one per framework, with axis ``trial``."""
    rows = []
    for fw, outcome in result.outcomes.items():
        rows.append(
            [
                "trial",
                str(result.trial_index),
                fw.value,
                format_float(outcome.distance_error_km),
                format_float(0.0),
                format_float(result.comm_power_w),
                format_float(1.0 if result.feasible else 0.0),
                "1",
                str(result.master_seed),
            ]
        )
    return rows


class SweepAnalyzer:
    def __init__(self, result: "SweepResult"):
        self.result = result

    def trend(self, framework: "Framework") -> list[tuple[float, float, float]]:
        """(value, mean, stderr) of one framework across the sweep."""
        return [
            (r.value, r.mean_distance_error_km, r.stderr_km)
            for r in self.result.rows
            if r.framework == framework
        ]

    def power_trend(self) -> list[tuple[float, float]]:
        seen: dict[float, float] = {}
        for r in self.result.rows:
            seen.setdefault(r.value, r.mean_comm_power_w)
        return list(seen.items())

    def is_non_increasing(self, framework: "Framework", slack: float = 1.0) -> bool:
        """Each mean is at most the previous one plus ``slack`` combined standard errors."""
        points = self.trend(framework)
        for (_, prev_mean, prev_se), (_, mean, se) in zip(points, points[1:]):
            if mean > prev_mean + slack * (prev_se + se):
                return False
        return True

    def get_summary(self) -> dict[str, Any]:
        return {
            "axis": self.result.axis.value,
            "seed": self.result.seed,
            "points": len(self.result.points),
            "failed_trials": sum(p.failed_trials for p in self.result.points),
            "infeasible_points": [p.value for p in self.result.points if p.all_infeasible],
        }

    def format_table(self) -> Table:
        table = Table(title=f"Sweep over {self.result.axis.value} (seed {self.result.seed})")
        for column in ("value", "framework", "mean error [km]", "stderr [km]", "comm power [W]", "feasible", "trials"):
            table.add_column(column, justify="left" if column == "framework" else "right")
        for r in self.result.rows:
            table.add_row(
                format_float(r.value),
                r.framework.value,
                f"{r.mean_distance_error_km:.4f}",
                f"{r.stderr_km:.4f}",
                f"{r.mean_comm_power_w:.4g}",
                f"{r.feasibility_rate:.2f}",
                str(r.trials),
            )
        return table

    def print_summary(self, console: Optional[Console] = None) -> None:
        (console or Console()).print(self.format_table())

    def to_csv(self) -> str:
        return write_csv([_row_cells(r) for r in self.result.rows])

    def export_to_csv(self, path: Union[str, Path]) -> None:
        write_csv([_row_cells(r) for r in self.result.rows], path)


def format_trial_table(result: "TrialResult") -> Table:
    table = Table(title=f"Trial {result.trial_index} (seed {result.master_seed})")
    table.add_column("framework")
    table.add_column("error [km]", justify="right")
    table.add_column("fronthaul [reals]", justify="right")
    table.add_column("status")
    for fw, outcome in result.outcomes.items():
        table.add_row(
            fw.value,
            f"{outcome.distance_error_km:.4f}",
            str(outcome.fronthaul_reals),
            "failed" if outcome.failed else "ok",
        )
    table.caption = (
        f"grid bound {result.grid_bound_km:.4f} km, comm power {result.comm_power_w:.4g} W, "
        f"{'feasible' if result.feasible else 'INFEASIBLE'}"
    )
    return table
