"""Scenario configuration models, profiles and file loading."""

from isacsim.config.loader import (
    DEFAULT_CONFIG_FILENAME,
    DEFAULT_CONFIG_PATHS,
    get_config_template,
    load_scenario_config,
    load_scenario_text,
    parse_config,
    save_default_config,
)
from isacsim.config.profiles import SCENARIO_PROFILES, get_scenario_profile
from isacsim.config.scenario import (
    ArrayConfig,
    DEFAULT_FRAMEWORKS,
    ExperimentConfig,
    Framework,
    GridSpec,
    LinkConfig,
    NetworkConfig,
    ScenarioConfig,
    SensingConfig,
    db_to_linear,
    dbm_to_watts,
)

__all__ = [
    "ArrayConfig",
    "DEFAULT_FRAMEWORKS",
    "ExperimentConfig",
    "Framework",
    "GridSpec",
    "LinkConfig",
    "NetworkConfig",
    "ScenarioConfig",
    "SensingConfig",
    "db_to_linear",
    "dbm_to_watts",
    "SCENARIO_PROFILES",
    "get_scenario_profile",
    "DEFAULT_CONFIG_FILENAME",
    "DEFAULT_CONFIG_PATHS",
    "get_config_template",
    "load_scenario_config",
    "load_scenario_text",
    "parse_config",
    "save_default_config",
]
