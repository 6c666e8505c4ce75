import pytest

from isacsim.engine.streams import RngStreams
from isacsim.errors import ValidationFailure
from isacsim.orchestrator.deployment import build_deployment, build_grid
from isacsim.validation import (
    CheckResult,
    assert_all_passed,
    on_grid_scenario,
    single_layer_scenario,
)
from isacsim.validation.suite import (
    MAX_RANDOM_TARGETS,
    RECOVERY_TARGETS,
    _check,
    check_crosstalk,
    check_exact_recovery,
    check_fusion,
    check_hungarian,
    check_power_allocation,
    check_support_search,
    draw_target_count,
    grid_indices,
)


class TestHelpers:
    def test_single_layer_scenario(self):
        scenario = single_layer_scenario()
        assert scenario.grid.altitudes_km == [18.0]
        assert not scenario.sensing.noise_enabled
        assert build_grid(scenario.grid).shape == (21, 3)

    def test_grid_indices(self):
        grid = build_grid(single_layer_scenario().grid)
        assert len(grid_indices(RECOVERY_TARGETS, grid)) == 3
        with pytest.raises(ValueError):
            grid_indices([(1.0, 0.0, 18.0)], grid)

    def test_on_grid_scenario_places_distinct_grid_targets(self):
        scenario = on_grid_scenario(3)
        grid = build_grid(scenario.grid)
        assert grid.shape == (9, 3)
        assert scenario.network.fixed_targets is None
        for trial in range(5):
            deployment = build_deployment(scenario, RngStreams(11, trial), grid)
            assert len(grid_indices(deployment.targets, grid)) == 3

    def test_target_count_is_keyed(self):
        counts = [draw_target_count(4, trial) for trial in range(40)]
        assert counts == [draw_target_count(4, trial) for trial in range(40)]
        assert set(counts) == set(range(1, MAX_RANDOM_TARGETS + 1))
        assert {draw_target_count(4, trial, 2) for trial in range(40)} == {1, 2}

    def test_check_decorator_catches_errors(self):
        @_check("boom")
        def explode() -> tuple[bool, str]:
            raise RuntimeError("bad")

        result = explode()
        assert result.name == "boom"
        assert not result.passed
        assert result.detail == "RuntimeError: bad"

    def test_assert_all_passed(self):
        assert_all_passed([CheckResult("a", True, "", 0.0)])
        with pytest.raises(ValidationFailure, match="1 validation check"):
            assert_all_passed([CheckResult("a", True, "", 0.0), CheckResult("b", False, "x", 0.0)])


class TestOracleChecks:
    def test_hungarian(self):
        assert check_hungarian(20).passed

    def test_fusion(self):
        assert check_fusion(10).passed

    def test_power_allocation(self):
        assert check_power_allocation(5).passed

    def test_crosstalk(self):
        assert check_crosstalk(20).passed

    def test_exact_recovery(self):
        result = check_exact_recovery(4)
        assert result.passed, result.detail

    def test_support_search(self):
        result = check_support_search(3)
        assert result.passed, result.detail
