import itertools

import numpy as np
import pytest

from isacsim.config.scenario import Framework, GridSpec
from isacsim.engine.streams import RngStreams
from isacsim.errors import ConfigurationError, ContractViolation, PlacementError
from isacsim.io.logging import LogCategory, SimulationLogger
from isacsim.orchestrator.deployment import build_deployment, build_grid
from isacsim.orchestrator.executor import (
    THREADS_ENV_VAR,
    TrialExecutor,
    TrialOutcome,
    create_trial_executor,
    resolve_thread_count,
)
from isacsim.orchestrator.metrics import average_distance_error, grid_bound
from isacsim.orchestrator.sweep import (
    SweepAxis,
    aggregate_point,
    apply_axis,
    mean_and_stderr,
    sweep,
)
from isacsim.orchestrator.trial_runner import run_trial

FAST = [Framework.PROPOSED_CEN, Framework.PROPOSED_DIS]


@pytest.fixture
def infeasible_scenario(desk_scenario):
    return desk_scenario.updated("sensing", sinr_threshold_db=60.0, max_backoff_steps=0)


class TestGrid:
    def test_full_grid_size(self):
        assert build_grid(GridSpec()).shape == (324, 3)

    def test_desk_grid_size(self, desk_scenario):
        grid = build_grid(desk_scenario.grid)
        assert grid.shape == (84, 3)
        assert np.all(grid[:21, 2] == 17.0)
        assert np.all(grid[-21:, 2] == 20.0)

    def test_ordering_altitude_then_x_then_y(self, desk_scenario):
        grid = build_grid(desk_scenario.grid)
        keys = [tuple(p) for p in grid[:, [2, 0, 1]]]
        assert keys == sorted(keys)

    def test_small_grids(self):
        assert build_grid(GridSpec(diameter_km=2.0, spacing_km=1.0, altitudes_km=[18.0])).shape == (5, 3)
        single = build_grid(GridSpec(diameter_km=0.0, center_km=(3.0, 4.0), altitudes_km=[18.0]))
        np.testing.assert_array_equal(single, [[3.0, 4.0, 18.0]])

    def test_grid_bound_half_spacing(self):
        grid = np.array([[0.0, 0.0, 18.0], [1.0, 0.0, 18.0]])
        assert grid_bound([[0.5, 0.0, 18.0]], grid) == pytest.approx(0.5)


class TestPlacement:
    def test_ues_respect_spacing(self, desk_scenario):
        deployment = build_deployment(desk_scenario, RngStreams(3, 0))
        ues = deployment.ue_positions
        assert ues.shape == (10, 3)
        gaps = np.linalg.norm(ues[:, None, :] - ues[None, :, :], axis=2)
        assert gaps[~np.eye(10, dtype=bool)].min() >= desk_scenario.network.min_ue_distance_km
        assert np.all(ues[:, 2] == 0.0)

    def test_targets_in_disc_and_altitude_band(self, desk_scenario):
        targets = build_deployment(desk_scenario, RngStreams(3, 1)).targets
        assert targets.shape == (3, 3)
        assert np.all(np.hypot(targets[:, 0], targets[:, 1]) <= 5.0)
        assert np.all((targets[:, 2] >= 17.0) & (targets[:, 2] <= 20.0))

    def test_on_grid_targets_are_distinct_grid_points(self, desk_scenario):
        scenario = desk_scenario.updated("network", target_placement="on_grid")
        deployment = build_deployment(scenario, RngStreams(3, 0))
        assert grid_bound(deployment.targets, deployment.grid) == 0.0
        assert len({tuple(t) for t in deployment.targets}) == 3

    def test_impossible_spacing(self, desk_scenario):
        scenario = desk_scenario.updated("network", min_ue_distance_km=40.0)
        with pytest.raises(PlacementError):
            build_deployment(scenario, RngStreams(3, 0))


class TestDistanceMetric:
    def test_label_free(self, rng):
        targets = rng.uniform(-5, 5, (4, 3))
        estimates = targets[[2, 0, 3, 1]] + 0.01
        matched = average_distance_error(estimates, targets)
        assert matched.mean_distance_km == pytest.approx(0.01 * np.sqrt(3))
        np.testing.assert_array_equal(matched.assignment, [1, 3, 0, 2])

    def test_matches_best_permutation(self, rng):
        for _ in range(20):
            targets = rng.uniform(-5, 5, (3, 3))
            estimates = rng.uniform(-5, 5, (3, 3))
            sq = np.sum((targets[:, None] - estimates[None]) ** 2, axis=2)
            best = min(itertools.permutations(range(3)), key=lambda p: sq[[0, 1, 2], list(p)].sum())
            expected = np.sqrt(sq[[0, 1, 2], list(best)]).mean()
            assert average_distance_error(estimates, targets).mean_distance_km == pytest.approx(expected)

    def test_unmatched_target_uses_nearest_estimate(self):
        targets = np.array([[0.0, 0.0, 18.0], [3.0, 0.0, 18.0]])
        matched = average_distance_error([[0.0, 0.0, 18.0]], targets)
        assert matched.mean_distance_km == pytest.approx(1.5)
        np.testing.assert_array_equal(matched.assignment, [0, -1])

    def test_no_estimates(self):
        assert average_distance_error(np.zeros((0, 3)), [[0.0, 0.0, 18.0]]).mean_distance_km == np.inf

    def test_no_targets_rejected(self):
        with pytest.raises(ContractViolation):
            average_distance_error([[0.0, 0.0, 18.0]], np.zeros((0, 3)))


class TestTrialRunner:
    def test_deterministic(self, desk_scenario):
        first = run_trial(desk_scenario, 11, 2, FAST)
        second = run_trial(desk_scenario, 11, 2, FAST)
        for fw in FAST:
            np.testing.assert_array_equal(first.outcomes[fw].estimates, second.outcomes[fw].estimates)
        assert first.comm_power_w == second.comm_power_w

    def test_trial_index_changes_draws(self, desk_scenario):
        first = run_trial(desk_scenario, 11, 0, [Framework.PROPOSED_CEN])
        second = run_trial(desk_scenario, 11, 1, [Framework.PROPOSED_CEN])
        assert not np.array_equal(first.targets, second.targets)

    def test_fronthaul(self, desk_scenario):
        result = run_trial(desk_scenario, 5, 0)
        assert result.fronthaul == {
            Framework.PROPOSED_CEN: 2 * 84 * 4,
            Framework.PROPOSED_DIS: 3 * 4,
            Framework.OMP_NC: 3,
            Framework.COSAMP_CEN: 2 * 84 * 4,
            Framework.COSAMP_DIS: 3 * 4,
            Framework.OMP_DIS_KMEANS: 3 * 4,
            Framework.MUSIC_CEN: 4 * 64 * 64,
            Framework.MUSIC_NC: 0,
        }

    def test_music_only_skips_dictionary(self, desk_scenario):
        result = run_trial(desk_scenario, 5, 0, [Framework.MUSIC_NC], keep_artifacts=True)
        assert "dictionary" not in result.stages
        assert result.artifacts.dictionary is None

    def test_stages_in_order(self, desk_scenario):
        result = run_trial(desk_scenario, 5, 0, [Framework.PROPOSED_CEN])
        assert result.stages == [
            "placement",
            "channels",
            "power",
            "observation",
            "dictionary",
            "proposed-cen",
        ]

    def test_infeasible_slots_are_logged(self, infeasible_scenario):
        sim_logger = SimulationLogger("infeasible", enable_console=False)
        result = run_trial(infeasible_scenario, 2, 0, [Framework.PROPOSED_CEN], sim_logger=sim_logger)
        assert not result.feasible
        entries = sim_logger.get_entries(LogCategory.POWER.value)
        slots = [e.data["slot"] for e in entries]
        assert slots
        assert len(set(slots)) == len(slots)
        assert all(0 <= t < 84 for t in slots)
        assert all(e.data["trial_index"] == 0 for e in entries)
        assert all(e.data["threshold"] == pytest.approx(1e6) for e in entries)

    def test_feasible_trial_logs_nothing(self, desk_scenario):
        sim_logger = SimulationLogger("feasible", enable_console=False)
        result = run_trial(desk_scenario, 5, 0, [Framework.PROPOSED_CEN], sim_logger=sim_logger)
        logged = bool(sim_logger.get_entries(LogCategory.POWER.value))
        assert logged is not result.feasible

    def test_distributed_diagnostics(self, desk_scenario):
        outcome = run_trial(desk_scenario, 5, 0, [Framework.PROPOSED_DIS]).outcomes[Framework.PROPOSED_DIS]
        assert len(outcome.candidates) == 4
        assert outcome.clusters.members.shape == (3, 4)
        assert len(outcome.fusion) == 3
        assert outcome.association_cost >= 0.0


class TestExecutor:
    def test_thread_count_equivalence(self, desk_scenario):
        with TrialExecutor(1) as serial, TrialExecutor(3) as pooled:
            a = serial.run_trials(desk_scenario, 9, 3, FAST)
            b = pooled.run_trials(desk_scenario, 9, 3, FAST)
        assert [o.trial_index for o in b] == [0, 1, 2]
        for x, y in zip(a, b):
            for fw in FAST:
                assert x.result.error(fw) == y.result.error(fw)

    def test_pool_forwards_logger(self, infeasible_scenario):
        sim_logger = SimulationLogger("pool", enable_console=False)
        with create_trial_executor(2) as executor:
            outcomes = executor.run_trials(
                infeasible_scenario, 2, 2, [Framework.PROPOSED_CEN], sim_logger=sim_logger
            )
        assert all(o.ok for o in outcomes)
        logged = {e.data["trial_index"] for e in sim_logger.get_entries(LogCategory.POWER.value)}
        assert logged == {0, 1}

    def test_env_var(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV_VAR, "3")
        assert resolve_thread_count() == 3
        assert resolve_thread_count(2) == 2

    @pytest.mark.parametrize("value", ["zero", "0"])
    def test_bad_env_var(self, monkeypatch, value):
        monkeypatch.setenv(THREADS_ENV_VAR, value)
        with pytest.raises(ConfigurationError):
            resolve_thread_count()

    def test_explicit_zero_rejected(self):
        with pytest.raises(ConfigurationError):
            resolve_thread_count(0)


class TestSweep:
    def test_mean_and_stderr(self):
        assert mean_and_stderr([2.0]) == (2.0, 0.0)
        mean, stderr = mean_and_stderr([1.0, 2.0, 3.0])
        assert mean == 2.0
        assert stderr == pytest.approx(1.0 / np.sqrt(3))
        assert all(np.isnan(v) for v in mean_and_stderr([]))

    def test_apply_axis(self, desk_scenario):
        assert apply_axis(desk_scenario, SweepAxis.GATEWAYS, 2).num_gateways == 2
        assert apply_axis(desk_scenario, SweepAxis.SLOTS, 40).sensing.n_slots == 40
        assert apply_axis(desk_scenario, SweepAxis.POWER, 2.5).sensing.sensing_power_w == 2.5
        assert apply_axis(desk_scenario, SweepAxis.TARGETS, 4).network.num_targets == 4

    @pytest.mark.parametrize("axis,value", [(SweepAxis.GATEWAYS, 5), (SweepAxis.POWER, -1.0)])
    def test_invalid_axis_value(self, desk_scenario, axis, value):
        with pytest.raises(ConfigurationError):
            apply_axis(desk_scenario, axis, value)

    def test_aggregate_excludes_failed_trials(self, desk_scenario):
        good = run_trial(desk_scenario, 1, 0, [Framework.PROPOSED_CEN])
        outcomes = [TrialOutcome(0, good), TrialOutcome(1, None, RuntimeError("boom"))]
        (row,) = aggregate_point(SweepAxis.TARGETS, 3, [Framework.PROPOSED_CEN], outcomes, 1)
        assert row.trials == 1
        assert row.mean_distance_error_km == good.error(Framework.PROPOSED_CEN)
        assert row.stderr_km == 0.0
        assert row.feasibility_rate == (1.0 if good.feasible else 0.0)

    def test_feasibility_counts_completed_trials(self, desk_scenario, infeasible_scenario):
        good = run_trial(desk_scenario, 1, 0, [Framework.PROPOSED_CEN])
        bad = run_trial(infeasible_scenario, 1, 0, [Framework.PROPOSED_CEN])
        assert not bad.feasible
        outcomes = [
            TrialOutcome(0, good),
            TrialOutcome(1, bad),
            TrialOutcome(2, None, RuntimeError("boom")),
        ]
        (row,) = aggregate_point(SweepAxis.TARGETS, 3, [Framework.PROPOSED_CEN], outcomes, 1)
        assert row.feasibility_rate == (0.5 if good.feasible else 0.0)
        only_failed = [TrialOutcome(0, None, RuntimeError("boom"))]
        (row,) = aggregate_point(SweepAxis.TARGETS, 3, [Framework.PROPOSED_CEN], only_failed, 1)
        assert np.isnan(row.feasibility_rate)
        assert row.trials == 0

    def test_sweep_points(self, desk_scenario):
        with TrialExecutor(2) as executor:
            result = sweep(desk_scenario, SweepAxis.GATEWAYS, [1, 2], 2, 4, FAST, executor)
        assert [p.value for p in result.points] == [1, 2]
        assert len(result.rows) == 4
        assert result.row(2, Framework.PROPOSED_DIS).seed == 4

    def test_empty_values_rejected(self, desk_scenario):
        with pytest.raises(ContractViolation):
            sweep(desk_scenario, SweepAxis.TARGETS, [], 2, 0)

    def test_zero_trials_rejected(self, desk_scenario):
        with pytest.raises(ContractViolation):
            sweep(desk_scenario, SweepAxis.TARGETS, [1], 0, 0)
