from isacsim.config.scenario import (
    ArrayConfig,
    ExperimentConfig,
    GridSpec,
    ScenarioConfig,
)
from isacsim.engine.geometry import UpaGeometry

FULL_PROFILE = ScenarioConfig()

DESK_PROFILE = ScenarioConfig(
    arrays=ArrayConfig(
        satellite=UpaGeometry(n_x=8, n_y=8),
        gateway=UpaGeometry(n_x=8, n_y=8),
    ),
    grid=GridSpec(spacing_km=2.0),
    experiment=ExperimentConfig(trials=100),
)


SCENARIO_PROFILES = {
    "desk": DESK_PROFILE,
    "full": FULL_PROFILE,
}


def get_scenario_profile(profile_name: str) -> ScenarioConfig:
    if profile_name not in SCENARIO_PROFILES:
        raise ValueError(
            f"Unknown profile: {profile_name}. "
            f"Available profiles: {list(SCENARIO_PROFILES.keys())}"
        )
    return SCENARIO_PROFILES[profile_name]
