from isacsim.validation.suite import (
    FULL_SIZE,
    QUICK_SIZE,
    CheckResult,
    SuiteSize,
    assert_all_passed,
    on_grid_scenario,
    run_validation_suite,
    single_layer_scenario,
)

__all__ = [
    "CheckResult",
    "SuiteSize",
    "FULL_SIZE",
    "QUICK_SIZE",
    "run_validation_suite",
    "assert_all_passed",
    "single_layer_scenario",
    "on_grid_scenario",
]
