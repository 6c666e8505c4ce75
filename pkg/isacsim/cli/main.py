"""Command-line interface: run, sweep, validate, replay and init-config."""

import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, NoReturn, Optional

import numpy as np
import typer

try:  # newer typer vendors its own click; catch the exceptions it raises
    from typer import _click as click
except ImportError:  # pragma: no cover
    import click
from rich.console import Console
from rich.table import Table

from isacsim.config.loader import (
    DEFAULT_CONFIG_FILENAME,
    get_config_template,
    load_scenario_config,
    save_default_config,
)
from isacsim.config.scenario import ScenarioConfig
from isacsim.errors import ConfigurationError, ValidationFailure
from isacsim.io.analysis import SweepAnalyzer, format_trial_table, trial_rows, write_csv
from isacsim.io.logging import SimulationLogger, SimulationLogLevel, create_simulation_logger
from isacsim.io.persistence import (
    RunManifest,
    TrialRecord,
    create_run_manifest,
    dump_observations,
    load_run_manifest,
    save_run_manifest,
    save_trial_records,
)
from isacsim.orchestrator.executor import TrialExecutor, create_trial_executor
from isacsim.orchestrator.sweep import SweepAxis
from isacsim.orchestrator.sweep import sweep as run_sweep
from isacsim.orchestrator.trial_runner import TrialResult, run_trial
from isacsim.validation.suite import assert_all_passed, run_validation_suite

app = typer.Typer(
    name="isacsim",
    help="isacsim - cooperative multi-satellite ISAC network simulator",
)

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_VALIDATION = 4

MANIFEST_FILENAME = "manifest.json"
RUN_CSV_FILENAME = "run.csv"
SWEEP_CSV_FILENAME = "sweep.csv"
EVENTS_FILENAME = "events.json"
TRIAL_RECORDS_FILENAME = "trials.json"


def _fail(message: str, code: int) -> NoReturn:
    typer.echo(f"Error: {message}", err=True)
    raise typer.Exit(code=code)


def _set_verbose(verbose: bool) -> None:
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)


def draw_seed() -> int:
    """Fresh 32-bit master seed from OS entropy."""
    return int(np.random.SeedSequence().entropy % (2**32))


def load_scenario(
    config: Optional[Path],
    profile: Optional[str],
    seed: Optional[int] = None,
    threads: Optional[int] = None,
) -> ScenarioConfig:
    """Scenario from profile defaults, the config file and CLI flags (flags win)."""
    experiment: dict[str, Any] = {}
    if seed is not None:
        experiment["seed"] = seed
    if threads is not None:
        experiment["threads"] = threads
    overrides = {"experiment": experiment} if experiment else None
    try:
        return load_scenario_config(config, profile=profile, overrides=overrides)
    except ConfigurationError as e:
        _fail(str(e), EXIT_CONFIG)


def parse_values(text: str) -> list[float]:
    """Comma-separated axis values, e.g. ``1,2,3``."""
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        _fail(f"--values must be comma-separated numbers, got {text!r}", EXIT_USAGE)
    if not values:
        _fail("--values needs at least one value", EXIT_USAGE)
    return values


def parse_axis(text: str) -> SweepAxis:
    try:
        return SweepAxis(text)
    except ValueError:
        _fail(
            f"unknown axis {text!r}; choose one of {[a.value for a in SweepAxis]}",
            EXIT_USAGE,
        )


def _make_logger(manifest: RunManifest, output_dir: Optional[Path], verbose: bool) -> SimulationLogger:
    return create_simulation_logger(
        run_id=manifest.run_id,
        log_level=SimulationLogLevel.VERBOSE if verbose else SimulationLogLevel.STANDARD,
        output_path=output_dir,
        enable_console=verbose,
        enable_file=output_dir is not None,
    )


def _make_executor(threads: Optional[int]) -> TrialExecutor:
    try:
        return create_trial_executor(threads)
    except ConfigurationError as e:
        _fail(str(e), EXIT_CONFIG)


def execute_run(
    manifest: RunManifest,
    output_dir: Optional[Path],
    dump: Optional[Path] = None,
    verbose: bool = False,
) -> TrialResult:
    """Run the single trial a ``run`` manifest describes and write its CSV."""
    scenario = manifest.scenario_config()
    trial = int(manifest.arguments.get("trial", 0))
    sim_logger = _make_logger(manifest, output_dir, verbose)
    sim_logger.log_run_start("run", manifest.seed, manifest.scenario)
    try:
        result = run_trial(
            scenario, manifest.seed, trial, keep_artifacts=dump is not None, sim_logger=sim_logger
        )
        sim_logger.log_trial(
            trial,
            {fw.value: out.distance_error_km for fw, out in result.outcomes.items()},
            result.comm_power_w,
            result.feasible,
            sum(result.timings.values()) * 1000,
        )
        csv_path = output_dir / RUN_CSV_FILENAME if output_dir else None
        content = write_csv(trial_rows(result), csv_path)
        typer.echo(content, nl=False)
        if output_dir is not None:
            records_path = output_dir / TRIAL_RECORDS_FILENAME
            save_trial_records([TrialRecord.from_result(result)], records_path)
            manifest.outputs.extend([str(csv_path), str(records_path)])

        if dump is not None:
            if result.artifacts is None or result.artifacts.dictionary is None:
                _fail("--dump needs at least one dictionary-based framework", EXIT_USAGE)
            dump_observations(dump, result.artifacts.observations, result.artifacts.dictionary)
            manifest.outputs.append(str(dump))

        if verbose:
            Console(stderr=True).print(format_trial_table(result))
        sim_logger.log_run_end("run", manifest.outputs)
        if output_dir is not None:
            sim_logger.export_json(output_dir / EVENTS_FILENAME)
            save_run_manifest(manifest, output_dir / MANIFEST_FILENAME)
    finally:
        sim_logger.close()

    if not result.feasible:
        _fail(
            f"trial {trial} is infeasible: no SINR-feasible power allocation after backoff",
            EXIT_INFEASIBLE,
        )
    return result


def execute_sweep(
    manifest: RunManifest,
    output_dir: Path,
    threads: Optional[int] = None,
    verbose: bool = False,
) -> SweepAnalyzer:
    """Run the sweep a ``sweep`` manifest describes and write its CSV."""
    scenario = manifest.scenario_config()
    axis = SweepAxis(manifest.arguments["axis"])
    values = [float(v) for v in manifest.arguments["values"]]
    trials = int(manifest.arguments["trials"])

    sim_logger = _make_logger(manifest, output_dir, verbose)
    sim_logger.log_run_start("sweep", manifest.seed, manifest.scenario)
    executor = _make_executor(threads if threads is not None else scenario.experiment.threads)
    try:
        result = run_sweep(
            scenario,
            axis,
            values,
            trials,
            manifest.seed,
            executor=executor,
            sim_logger=sim_logger,
        )
    except ConfigurationError as e:
        sim_logger.close()
        _fail(str(e), EXIT_CONFIG)
    finally:
        executor.shutdown()

    analyzer = SweepAnalyzer(result)
    csv_path = output_dir / SWEEP_CSV_FILENAME
    analyzer.export_to_csv(csv_path)
    records_path = output_dir / TRIAL_RECORDS_FILENAME
    save_trial_records(
        [
            TrialRecord.from_result(o.result, sweep_value=point.value)
            for point in result.points
            for o in point.outcomes
            if o.result is not None
        ],
        records_path,
    )
    manifest.outputs.extend([str(csv_path), str(records_path)])
    analyzer.print_summary(Console(stderr=True))

    sim_logger.log_run_end("sweep", manifest.outputs)
    sim_logger.export_json(output_dir / EVENTS_FILENAME)
    sim_logger.close()
    save_run_manifest(manifest, output_dir / MANIFEST_FILENAME)

    infeasible = analyzer.get_summary()["infeasible_points"]
    if infeasible:
        _fail(
            f"every trial was infeasible at {axis.value} = {', '.join(f'{v:g}' for v in infeasible)}",
            EXIT_INFEASIBLE,
        )
    return analyzer


@app.command()
def run(
    config: Optional[Path] = typer.Option(
        None,
        "--config",
        "-c",
        help=f"Scenario YAML file (default: ./{DEFAULT_CONFIG_FILENAME} if present)",
    ),
    profile: str = typer.Option(
        "desk",
        "--profile",
        "-p",
        help="Defaults profile: 'desk' or 'full'",
    ),
    seed: Optional[int] = typer.Option(
        None,
        "--seed",
        "-s",
        help="Master seed (drawn from entropy and recorded when omitted)",
    ),
    trial: int = typer.Option(
        0,
        "--trial",
        help="Trial index under the master seed",
    ),
    output_dir: Optional[Path] = typer.Option(
        None,
        "--output-dir",
        "-o",
        help="Directory for the manifest, CSV and event log",
    ),
    dump: Optional[Path] = typer.Option(
        None,
        "--dump",
        help="Write the binary observation/dictionary dump of the trial",
    ),
    threads: Optional[int] = typer.Option(
        None,
        "--threads",
        "-t",
        help="Trial pool size (falls back to ISAC_SIM_THREADS)",
    ),
    verbose: bool = typer.Option(
        False,
        "--verbose",
        "-v",
        help="Debug logging and a per-framework summary table",
    ),
) -> None:
    """Run one seeded trial and print its per-framework results as CSV."""
    _set_verbose(verbose)
    if trial < 0:
        _fail("--trial must be non-negative", EXIT_USAGE)
    scenario = load_scenario(config, profile, seed, threads)
    master_seed = scenario.experiment.seed if scenario.experiment.seed is not None else draw_seed()
    manifest = create_run_manifest(
        "run",
        scenario,
        master_seed,
        output_dir or ".",
        arguments={"trial": trial, "profile": profile},
    )
    if output_dir is not None:
        save_run_manifest(manifest, output_dir / MANIFEST_FILENAME)
    logger.info(f"Run {manifest.run_id}: seed {master_seed}, trial {trial}")
    execute_run(manifest, output_dir, dump, verbose)


@app.command()
def sweep(
    axis: str = typer.Option(
        ...,
        "--axis",
        "-a",
        help="Swept parameter: targets, gateways, slots or power",
    ),
    values: str = typer.Option(
        ...,
        "--values",
        help="Comma-separated axis values, e.g. 1,2,3,4",
    ),
    trials: Optional[int] = typer.Option(
        None,
        "--trials",
        "-n",
        help="Trials per point (default from the scenario)",
    ),
    seed: Optional[int] = typer.Option(
        None,
        "--seed",
        "-s",
        help="Master seed (drawn from entropy and recorded when omitted)",
    ),
    config: Optional[Path] = typer.Option(
        None,
        "--config",
        "-c",
        help=f"Scenario YAML file (default: ./{DEFAULT_CONFIG_FILENAME} if present)",
    ),
    profile: str = typer.Option(
        "desk",
        "--profile",
        "-p",
        help="Defaults profile: 'desk' or 'full'",
    ),
    output_dir: Path = typer.Option(
        Path("results"),
        "--output-dir",
        "-o",
        help="Directory for the manifest, CSV and event log",
    ),
    threads: Optional[int] = typer.Option(
        None,
        "--threads",
        "-t",
        help="Trial pool size (falls back to ISAC_SIM_THREADS)",
    ),
    verbose: bool = typer.Option(
        False,
        "--verbose",
        "-v",
        help="Debug logging",
    ),
) -> None:
    """Sweep one parameter and write mean error, power and feasibility per framework."""
    _set_verbose(verbose)
    sweep_axis = parse_axis(axis)
    axis_values = parse_values(values)
    if trials is not None and trials < 1:
        _fail("--trials must be at least 1", EXIT_USAGE)
    scenario = load_scenario(config, profile, seed, threads)
    master_seed = scenario.experiment.seed if scenario.experiment.seed is not None else draw_seed()
    manifest = create_run_manifest(
        "sweep",
        scenario,
        master_seed,
        output_dir,
        arguments={
            "axis": sweep_axis.value,
            "values": axis_values,
            "trials": trials if trials is not None else scenario.experiment.trials,
            "profile": profile,
        },
    )
    save_run_manifest(manifest, output_dir / MANIFEST_FILENAME)
    logger.info(
        f"Sweep {manifest.run_id}: {sweep_axis.value} over {axis_values}, "
        f"{manifest.arguments['trials']} trials, seed {master_seed}"
    )
    execute_sweep(manifest, output_dir, threads, verbose)
    typer.echo(f"Results written to {output_dir / SWEEP_CSV_FILENAME}")


@app.command()
def validate(
    quick: bool = typer.Option(
        False,
        "--quick",
        "-q",
        help="Smaller instance counts for a smoke run",
    ),
    verbose: bool = typer.Option(
        False,
        "--verbose",
        "-v",
        help="Debug logging",
    ),
    output_dir: Optional[Path] = typer.Option(
        None,
        "--output-dir",
        "-o",
        help="Directory for events.json (not written when omitted)",
    ),
) -> None:
    """Run the oracle-equivalence and invariant checks."""
    _set_verbose(verbose)
    sim_logger = create_simulation_logger(
        run_id=f"validate-{datetime.now().strftime('%Y%m%d-%H%M%S')}",
        log_level=SimulationLogLevel.VERBOSE if verbose else SimulationLogLevel.STANDARD,
        output_path=output_dir,
        enable_console=verbose,
        enable_file=output_dir is not None,
    )
    try:
        results = run_validation_suite(quick=quick, sim_logger=sim_logger)
        if output_dir is not None:
            sim_logger.export_json(output_dir / EVENTS_FILENAME)
    finally:
        sim_logger.close()

    table = Table(title="Validation")
    table.add_column("check")
    table.add_column("result")
    table.add_column("detail")
    table.add_column("seconds", justify="right")
    for r in results:
        table.add_row(
            r.name,
            "[green]passed[/green]" if r.passed else "[red]FAILED[/red]",
            r.detail,
            f"{r.seconds:.2f}",
        )
    Console().print(table)

    try:
        assert_all_passed(results)
    except ValidationFailure as e:
        _fail(str(e), EXIT_VALIDATION)


@app.command()
def replay(
    manifest_path: Path = typer.Argument(
        ...,
        help="Manifest written by a previous run or sweep",
    ),
    output_dir: Path = typer.Option(
        Path("replay"),
        "--output-dir",
        "-o",
        help="Directory for the reproduced outputs",
    ),
    threads: Optional[int] = typer.Option(
        None,
        "--threads",
        "-t",
        help="Trial pool size (does not affect results)",
    ),
    verbose: bool = typer.Option(
        False,
        "--verbose",
        "-v",
        help="Debug logging",
    ),
) -> None:
    """Re-execute a recorded run or sweep from its manifest."""
    _set_verbose(verbose)
    if not manifest_path.exists():
        _fail(f"manifest not found: {manifest_path}", EXIT_CONFIG)
    try:
        recorded = load_run_manifest(manifest_path)
        recorded.scenario_config()
    except ValueError as e:
        _fail(f"invalid manifest {manifest_path}: {e}", EXIT_CONFIG)

    manifest = create_run_manifest(
        recorded.command,
        recorded.scenario_config(),
        recorded.seed,
        output_dir,
        arguments={**recorded.arguments, "replay_of": recorded.run_id},
    )
    if recorded.command == "run":
        execute_run(manifest, output_dir, verbose=verbose)
    elif recorded.command == "sweep":
        execute_sweep(manifest, output_dir, threads, verbose)
        typer.echo(f"Results written to {output_dir / SWEEP_CSV_FILENAME}")
    else:
        _fail(f"cannot replay command {recorded.command!r}", EXIT_CONFIG)


@app.command(name="init-config")
def init_config(
    output: Path = typer.Argument(
        Path(DEFAULT_CONFIG_FILENAME),
        help="Output path for the configuration file",
    ),
    profile: str = typer.Option(
        "desk",
        "--profile",
        "-p",
        help="Profile whose defaults are written: 'desk' or 'full'",
    ),
    force: bool = typer.Option(
        False,
        "--force",
        "-f",
        help="Overwrite existing configuration file",
    ),
    template: bool = typer.Option(
        True,
        "--template/--plain",
        help="Write a commented template (default) or a plain YAML dump",
    ),
) -> None:
    """Generate a scenario configuration file.

    The file lists every key with the profile's default. Edit it and pass it to
    ``run`` or ``sweep`` with --config.
    """
    if output.exists() and not force:
        typer.echo(f"Error: File already exists: {output}", err=True)
        typer.echo("Use --force to overwrite.", err=True)
        raise typer.Exit(code=EXIT_USAGE)

    try:
        if template:
            output.parent.mkdir(parents=True, exist_ok=True)
            with open(output, "w", encoding="utf-8") as f:
                f.write(get_config_template(profile))
        else:
            save_default_config(output, profile)
    except ConfigurationError as e:
        _fail(str(e), EXIT_CONFIG)

    typer.echo(f"Configuration file created: {output}")
    typer.echo("\nRun a trial with it:")
    typer.echo(f"  isacsim run --config {output}")


def main() -> None:
    try:
        code = app(standalone_mode=False)
    except click.ClickException as e:
        e.show()
        sys.exit(EXIT_USAGE)
    except click.Abort:
        sys.exit(EXIT_USAGE)
    sys.exit(code or 0)


if __name__ == "__main__":
    main()
