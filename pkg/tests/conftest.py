import numpy as np
import pytest

from isacsim.config.profiles import get_scenario_profile
from isacsim.config.scenario import ScenarioConfig
from isacsim.engine.beamforming import BeamPlan, build_beams
from isacsim.engine.channel import draw_reflections
from isacsim.engine.scene import Deployment
from isacsim.engine.signal import (
    GridDictionary,
    ObservationSet,
    build_dictionary,
    draw_symbols,
    observe,
    synthesize_all_tx,
)
from isacsim.engine.streams import RngStreams, StreamTag
from isacsim.orchestrator.deployment import build_deployment
from isacsim.validation.suite import single_layer_scenario as make_single_layer_scenario


@pytest.fixture
def desk_scenario() -> ScenarioConfig:
    return get_scenario_profile("desk")


@pytest.fixture
def single_layer_scenario() -> ScenarioConfig:
    """Noiseless, one altitude, targets (4,0,18), (-4,2,18), (0,-4,18) on a 21-point grid."""
    return make_single_layer_scenario()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


class SensingEpoch:
    """Everything up to the observations, built without power allocation."""

    def __init__(self, scenario: ScenarioConfig, seed: int = 3, trial: int = 0):
        self.streams = RngStreams(seed, trial)
        self.deployment: Deployment = build_deployment(scenario, self.streams)
        self.beams: BeamPlan = build_beams(self.deployment)
        dep = self.deployment
        powers = np.zeros((dep.n_slots, dep.num_ues))
        symbols = draw_symbols(
            self.streams.rng(StreamTag.SYMBOLS), dep.num_satellites, dep.num_ues, dep.n_slots
        )
        self.tx = synthesize_all_tx(self.beams, powers, symbols)
        self.reflections = draw_reflections(
            self.streams,
            dep.num_satellites,
            dep.num_targets,
            dep.num_gateways,
            scenario.link.rcs_m2,
            scenario.sensing.min_reflection_magnitude,
        )
        self.observations: ObservationSet = observe(
            self.streams, dep, self.beams, self.tx, self.reflections
        )
        self.dictionary: GridDictionary = build_dictionary(dep, self.beams, self.tx)

    def target_indices(self) -> list[int]:
        grid = self.deployment.grid
        return [
            int(np.argmin(np.linalg.norm(grid - t, axis=1))) for t in self.deployment.targets
        ]


@pytest.fixture
def noiseless_epoch(single_layer_scenario: ScenarioConfig) -> SensingEpoch:
    return SensingEpoch(single_layer_scenario)


@pytest.fixture
def epoch_factory():
    return SensingEpoch
