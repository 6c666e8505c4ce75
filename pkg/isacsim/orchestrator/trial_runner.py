"""One seeded Monte Carlo trial through the full sensing pipeline.

Stages run in order: placement, channels, power, observation, dictionary, then each
requested framework. Stages a framework set does not need are skipped, and local OMP or
MUSIC snapshots shared by several frameworks are computed once.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from numpy.typing import NDArray

from isacsim.config.scenario import Framework, ScenarioConfig
from isacsim.engine.beamforming import BeamPlan, PowerSchedule, allocate_all_slots, build_beams
from isacsim.engine.channel import draw_reflections, realize_comm_channels
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
from isacsim.errors import RecoveryError
from isacsim.io.logging import SimulationLogger
from isacsim.orchestrator.deployment import build_deployment
from isacsim.orchestrator.metrics import average_distance_error, grid_bound
from isacsim.sensing.association import (
    Clusters,
    KMeansClusters,
    association_cost,
    check_cluster_constraints,
    kmeans_associate,
    sequential_associate,
    symmetrized_cost,
)
from isacsim.sensing.cosamp import cosamp
from isacsim.sensing.fusion import FusedEstimate, fuse_clusters
from isacsim.sensing.music import music_estimate, music_snapshots
from isacsim.sensing.omp import (
    CENTRALIZED_OWNER,
    CandidateSet,
    centralized_omp,
    gateway_owner,
    local_omp,
)

logger = logging.getLogger(__name__)

MUSIC_FRAMEWORKS = {Framework.MUSIC_CEN, Framework.MUSIC_NC}


@dataclass
class FrameworkOutcome:
    """Estimates and diagnostics of one framework in one trial.

    Attributes:
        framework: Framework evaluated
        estimates: Estimated target positions in km, shape (K, 3)
        distance_error_km: Mean matched distance error (NaN when the framework failed)
        failed: Whether the framework raised a recoverable error
        error: Message of that error
        fronthaul_reals: Real-valued scalars forwarded to the central unit
        candidates: Candidate sets produced by the recovery stage
        clusters: Sequential association result, when used
        fusion: Fused estimates with their condition numbers, when used
        association_cost: Ordered-pair association objective, when used
        symmetrized_cost: Line-to-line association diagnostic, when used
        one_per_gateway: Whether K-means clusters took one candidate per gateway
    """

    framework: Framework
    estimates: NDArray[np.float64]
    distance_error_km: float
    failed: bool = False
    error: Optional[str] = None
    fronthaul_reals: int = 0
    candidates: list[CandidateSet] = field(default_factory=list)
    clusters: Optional[Clusters] = None
    fusion: list[FusedEstimate] = field(default_factory=list)
    association_cost: Optional[float] = None
    symmetrized_cost: Optional[float] = None
    one_per_gateway: Optional[bool] = None


@dataclass
class TrialArtifacts:
    deployment: Deployment
    observations: ObservationSet
    dictionary: Optional[GridDictionary]


@dataclass
class TrialResult:
    """Per-trial metrics across the requested frameworks.

    ``comm_power_w`` is total communication power averaged over slots and satellites.
    """

    trial_index: int
    master_seed: int
    outcomes: dict[Framework, FrameworkOutcome]
    comm_power_w: float
    feasible: bool
    min_threshold: float
    min_sinr: float
    grid_bound_km: float
    targets: NDArray[np.float64]
    stages: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    artifacts: Optional[TrialArtifacts] = None

    @property
    def fronthaul(self) -> dict[Framework, int]:
        return {fw: out.fronthaul_reals for fw, out in self.outcomes.items()}

    @property
    def distributed_latency_s(self) -> float:
        """Slowest gateway's local recovery plus association and fusion at the CU.

        Association and fusion time accumulates over every distributed framework run in
        the trial, so run Proposed-DIS alone (or with centralized ones) to read it.
        """
        stages = ("local_omp_critical", "association", "fusion")
        return sum(self.timings.get(s, 0.0) for s in stages)

    def error(self, framework: Framework) -> float:
        return self.outcomes[framework].distance_error_km


@dataclass
class TrialState:
    """Intermediate products shared between pipeline stages."""

    deployment: Deployment
    beams: Optional[BeamPlan] = None
    schedule: Optional[PowerSchedule] = None
    tx: Optional[NDArray[np.complex128]] = None
    reflections: Optional[NDArray[np.complex128]] = None
    observations: Optional[ObservationSet] = None
    dictionary: Optional[GridDictionary] = None
    local_omp: Optional[list[CandidateSet]] = None
    snapshots: Optional[NDArray[np.complex128]] = None


class TrialRunner:
    def __init__(
        self,
        scenario: ScenarioConfig,
        master_seed: int,
        trial_index: int,
        frameworks: Optional[Iterable[Framework]] = None,
        grid: Optional[NDArray[np.float64]] = None,
        keep_artifacts: bool = False,
        sim_logger: Optional[SimulationLogger] = None,
    ):
        self.scenario = scenario
        self.master_seed = master_seed
        self.trial_index = trial_index
        self.frameworks = list(frameworks if frameworks is not None else scenario.experiment.frameworks)
        self.grid = grid
        self.keep_artifacts = keep_artifacts
        self.sim_logger = sim_logger
        self.streams = RngStreams(master_seed, trial_index)
        self.stages: list[str] = []
        self.timings: dict[str, float] = {}

    def _timed(self, stage: str, fn, *args, **kwargs):
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        self.timings[stage] = self.timings.get(stage, 0.0) + time.perf_counter() - start
        if stage not in self.stages:
            self.stages.append(stage)
        return result

    def _needs_dictionary(self) -> bool:
        return any(fw not in MUSIC_FRAMEWORKS for fw in self.frameworks)

    def _prepare(self) -> TrialState:
        deployment = self._timed(
            "placement", build_deployment, self.scenario, self.streams, self.grid
        )
        state = TrialState(deployment=deployment)
        n_slots = deployment.n_slots
        channels = self._timed(
            "channels", realize_comm_channels, self.streams, deployment, n_slots
        )
        state.beams = build_beams(deployment, n_slots)

        sensing = self.scenario.sensing
        state.schedule = self._timed(
            "power",
            allocate_all_slots,
            channels,
            state.beams,
            self.scenario.noise_power_w,
            sensing.sinr_threshold,
            sensing.backoff_factor,
            sensing.max_backoff_steps,
        )
        if not state.schedule.feasible:
            infeasible = sum(1 for s in state.schedule.slots if not s.feasible)
            logger.warning(
                f"trial {self.trial_index}: {infeasible}/{n_slots} slots infeasible after backoff"
            )
            if self.sim_logger is not None:
                for t, slot in enumerate(state.schedule.slots):
                    if not slot.feasible:
                        self.sim_logger.log_infeasible_slot(self.trial_index, t, slot.threshold)

        symbols = draw_symbols(
            self.streams.rng(StreamTag.SYMBOLS),
            deployment.num_satellites,
            deployment.num_ues,
            n_slots,
        )
        state.tx = synthesize_all_tx(state.beams, state.schedule.powers, symbols)
        state.reflections = draw_reflections(
            self.streams,
            deployment.num_satellites,
            deployment.num_targets,
            deployment.num_gateways,
            self.scenario.link.rcs_m2,
            sensing.min_reflection_magnitude,
        )
        state.observations = self._timed(
            "observation",
            observe,
            self.streams,
            deployment,
            state.beams,
            state.tx,
            state.reflections,
        )
        if self._needs_dictionary():
            state.dictionary = self._timed(
                "dictionary", build_dictionary, deployment, state.beams, state.tx
            )
        return state

    def _local_candidates(self, state: TrialState) -> list[CandidateSet]:
        if state.local_omp is None:
            sensing = self.scenario.sensing
            candidates: list[CandidateSet] = []
            slowest = 0.0
            for l in range(state.deployment.num_gateways):
                before = self.timings.get("local_omp", 0.0)
                candidates.append(
                    self._timed(
                        "local_omp",
                        local_omp,
                        state.observations.y[l],
                        state.dictionary,
                        l,
                        state.deployment.num_targets,
                        normalize_columns=sensing.normalize_columns,
                        residual_tolerance=sensing.residual_tolerance,
                    )
                )
                slowest = max(slowest, self.timings["local_omp"] - before)
            # gateways recover in parallel; the slowest one bounds the distributed latency
            self.timings["local_omp_critical"] = slowest
            state.local_omp = candidates
        return state.local_omp

    def _music_snapshots(self, state: TrialState) -> NDArray[np.complex128]:
        if state.snapshots is None:
            deployment = state.deployment
            count = self.scenario.sensing.music_slot_factor * deployment.num_grid_points
            state.snapshots = self._timed(
                "music_snapshots",
                music_snapshots,
                self.streams,
                deployment,
                state.beams,
                state.reflections,
                count,
            )
        return state.snapshots

    def _outcome(
        self,
        framework: Framework,
        state: TrialState,
        estimates: NDArray[np.float64],
        fronthaul: int,
        **diagnostics,
    ) -> FrameworkOutcome:
        matched = average_distance_error(estimates, state.deployment.targets)
        return FrameworkOutcome(
            framework=framework,
            estimates=estimates,
            distance_error_km=matched.mean_distance_km,
            fronthaul_reals=fronthaul,
            **diagnostics,
        )

    def _associate_and_fuse(
        self, framework: Framework, state: TrialState, candidates: list[CandidateSet]
    ) -> FrameworkOutcome:
        deployment = state.deployment
        clusters = self._timed(
            "association", sequential_associate, candidates, deployment.gateways, deployment.grid
        )
        if not check_cluster_constraints(clusters, candidates):
            logger.warning(f"{framework.value}: association violated the cluster constraints")
        fused = self._timed(
            "fusion",
            fuse_clusters,
            clusters,
            deployment.gateways,
            deployment.grid,
            self.scenario.sensing.fusion_condition_limit,
        )
        estimates = np.array([f.position for f in fused], dtype=float).reshape(-1, 3)
        return self._outcome(
            framework,
            state,
            estimates,
            deployment.num_targets * deployment.num_gateways,
            candidates=candidates,
            clusters=clusters,
            fusion=fused,
            association_cost=association_cost(clusters, deployment.gateways, deployment.grid),
            symmetrized_cost=symmetrized_cost(clusters, deployment.gateways, deployment.grid),
        )

    def _run_proposed_cen(self, state: TrialState) -> FrameworkOutcome:
        sensing = self.scenario.sensing
        cand = self._timed(
            "proposed-cen",
            centralized_omp,
            state.observations,
            state.dictionary,
            state.deployment.num_targets,
            normalize_columns=sensing.normalize_columns,
            residual_tolerance=sensing.residual_tolerance,
        )
        fronthaul = 2 * state.deployment.n_slots * state.deployment.num_gateways
        return self._outcome(
            Framework.PROPOSED_CEN, state, cand.positions(state.deployment.grid), fronthaul,
            candidates=[cand],
        )

    def _run_proposed_dis(self, state: TrialState) -> FrameworkOutcome:
        return self._associate_and_fuse(
            Framework.PROPOSED_DIS, state, self._local_candidates(state)
        )

    def _run_omp_nc(self, state: TrialState) -> FrameworkOutcome:
        cand = self._local_candidates(state)[0]
        return self._outcome(
            Framework.OMP_NC, state, cand.positions(state.deployment.grid), len(cand),
            candidates=[cand],
        )

    def _run_cosamp_cen(self, state: TrialState) -> FrameworkOutcome:
        dictionary, sensing = state.dictionary, self.scenario.sensing
        cand = self._timed(
            "cosamp-cen",
            cosamp,
            state.observations.y,
            dictionary.blocks,
            dictionary.num_satellites,
            dictionary.num_grid_points,
            state.deployment.num_targets,
            CENTRALIZED_OWNER,
            sensing.cosamp_max_iterations,
            sensing.normalize_columns,
        )
        fronthaul = 2 * state.deployment.n_slots * state.deployment.num_gateways
        return self._outcome(
            Framework.COSAMP_CEN, state, cand.positions(state.deployment.grid), fronthaul,
            candidates=[cand],
        )

    def _run_cosamp_dis(self, state: TrialState) -> FrameworkOutcome:
        dictionary, sensing = state.dictionary, self.scenario.sensing
        candidates = self._timed(
            "cosamp-local",
            lambda: [
                cosamp(
                    state.observations.y[l : l + 1],
                    dictionary.blocks[l : l + 1],
                    dictionary.num_satellites,
                    dictionary.num_grid_points,
                    state.deployment.num_targets,
                    gateway_owner(l),
                    sensing.cosamp_max_iterations,
                    sensing.normalize_columns,
                )
                for l in range(dictionary.num_gateways)
            ],
        )
        return self._associate_and_fuse(Framework.COSAMP_DIS, state, candidates)

    def _run_omp_dis_kmeans(self, state: TrialState) -> FrameworkOutcome:
        candidates = self._local_candidates(state)
        deployment = state.deployment
        result: KMeansClusters = self._timed(
            "kmeans",
            kmeans_associate,
            candidates,
            deployment.grid,
            deployment.num_targets,
            self.streams.rng(StreamTag.KMEANS),
            self.scenario.sensing.kmeans_max_iterations,
        )
        return self._outcome(
            Framework.OMP_DIS_KMEANS,
            state,
            result.centroids,
            deployment.num_targets * deployment.num_gateways,
            candidates=candidates,
            one_per_gateway=result.one_per_gateway(deployment.num_gateways),
        )

    def _run_music(self, framework: Framework, state: TrialState) -> FrameworkOutcome:
        deployment = state.deployment
        centralized = framework is Framework.MUSIC_CEN
        gateways = list(range(deployment.num_gateways)) if centralized else [0]
        owner = CENTRALIZED_OWNER if centralized else gateway_owner(0)
        try:
            snapshots = self._music_snapshots(state)
            result = self._timed(
                framework.value,
                music_estimate,
                snapshots,
                state.beams.gat_grid_steering,
                gateways,
                deployment.num_targets,
                owner,
            )
        except RecoveryError as e:
            logger.warning(f"trial {self.trial_index}: {framework.value} failed: {e}")
            return FrameworkOutcome(
                framework=framework,
                estimates=np.zeros((0, 3)),
                distance_error_km=float("nan"),
                failed=True,
                error=str(e),
            )
        n_gat = self.scenario.arrays.gateway.n
        fronthaul = deployment.num_gateways * n_gat * n_gat if centralized else 0
        return self._outcome(
            framework, state, result.candidates.positions(deployment.grid), fronthaul,
            candidates=[result.candidates],
        )

    def _run_framework(self, framework: Framework, state: TrialState) -> FrameworkOutcome:
        if framework in MUSIC_FRAMEWORKS:
            return self._run_music(framework, state)
        handlers = {
            Framework.PROPOSED_CEN: self._run_proposed_cen,
            Framework.PROPOSED_DIS: self._run_proposed_dis,
            Framework.OMP_NC: self._run_omp_nc,
            Framework.COSAMP_CEN: self._run_cosamp_cen,
            Framework.COSAMP_DIS: self._run_cosamp_dis,
            Framework.OMP_DIS_KMEANS: self._run_omp_dis_kmeans,
        }
        return handlers[framework](state)

    def run(self) -> TrialResult:
        state = self._prepare()
        outcomes = {fw: self._run_framework(fw, state) for fw in self.frameworks}

        schedule = state.schedule
        feasible_slots = [s for s in schedule.slots if s.feasible and s.achieved_sinr.size]
        min_sinr = (
            float(min(s.achieved_sinr.min() for s in feasible_slots)) if feasible_slots else float("nan")
        )
        deployment = state.deployment
        artifacts = (
            TrialArtifacts(deployment, state.observations, state.dictionary)
            if self.keep_artifacts
            else None
        )
        return TrialResult(
            trial_index=self.trial_index,
            master_seed=self.master_seed,
            outcomes=outcomes,
            comm_power_w=schedule.average_comm_power(deployment.num_satellites),
            feasible=schedule.feasible,
            min_threshold=schedule.min_threshold,
            min_sinr=min_sinr,
            grid_bound_km=grid_bound(deployment.targets, deployment.grid),
            targets=deployment.targets,
            stages=list(self.stages),
            timings=dict(self.timings),
            artifacts=artifacts,
        )


def run_trial(
    scenario: ScenarioConfig,
    master_seed: int,
    trial_index: int = 0,
    frameworks: Optional[Iterable[Framework]] = None,
    grid: Optional[NDArray[np.float64]] = None,
    keep_artifacts: bool = False,
    sim_logger: Optional[SimulationLogger] = None,
) -> TrialResult:
    """Run one trial; ``(scenario, master_seed, trial_index)`` determines every output."""
    return TrialRunner(
        scenario, master_seed, trial_index, frameworks, grid, keep_artifacts, sim_logger
    ).run()
