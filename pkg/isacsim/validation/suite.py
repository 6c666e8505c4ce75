"""Oracle-equivalence and invariant checks run by ``isacsim validate``.

Each check compares a production routine with an independent reference (brute force,
an LP solver, a numeric minimizer, a direct sum) or asserts a structural invariant on
seeded instances, and reports a CheckResult instead of raising.
"""

import itertools
import logging
import math
import time
from dataclasses import dataclass
from functools import wraps
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import linprog

from isacsim.config.profiles import get_scenario_profile
from isacsim.config.scenario import Framework, ScenarioConfig
from isacsim.engine.beamforming import SinrTerms, allocate_power, build_beams
from isacsim.engine.geometry import (
    Direction,
    UpaGeometry,
    ViewConvention,
    crosstalk,
    crosstalk_closed_form,
)
from isacsim.engine.streams import RngStreams, StreamTag
from isacsim.errors import ValidationFailure
from isacsim.io.logging import SimulationLogger
from isacsim.orchestrator.deployment import build_deployment, build_grid
from isacsim.orchestrator.trial_runner import run_trial
from isacsim.sensing.association import (
    check_cluster_constraints,
    hungarian,
    sequential_associate,
)
from isacsim.sensing.fusion import fuse_lines, projector_sum
from isacsim.sensing.omp import (
    CandidateSet,
    exhaustive_support_search,
    group_columns,
    local_omp,
)

logger = logging.getLogger(__name__)

VALIDATION_SEED = 20240611

RECOVERY_TARGETS = ((4.0, 0.0, 18.0), (-4.0, 2.0, 18.0), (0.0, -4.0, 18.0))
MAX_RANDOM_TARGETS = 3
SEARCH_MAX_TARGETS = 2
RANDOM_GRID_DIAMETER_KM = 12.0
RANDOM_GRID_SPACING_KM = 4.0

FUSION_TOLERANCE_KM = 1e-6
POWER_TOLERANCE = 1e-8
SINR_TOLERANCE = 1e-9
CROSSTALK_TOLERANCE = 1e-10
RECOVERY_SUCCESS_RATE = 0.99


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


@dataclass(frozen=True)
class SuiteSize:
    """Instance counts for one run of the suite."""

    hungarian_instances: int
    fusion_bundles: int
    power_instances: int
    crosstalk_pairs: int
    recovery_trials: int
    search_trials: int
    invariant_trials: int


FULL_SIZE = SuiteSize(
    hungarian_instances=500,
    fusion_bundles=200,
    power_instances=100,
    crosstalk_pairs=1000,
    recovery_trials=100,
    search_trials=20,
    invariant_trials=20,
)

QUICK_SIZE = SuiteSize(
    hungarian_instances=50,
    fusion_bundles=20,
    power_instances=10,
    crosstalk_pairs=100,
    recovery_trials=10,
    search_trials=3,
    invariant_trials=3,
)


def single_layer_scenario(
    targets: Sequence[Sequence[float]] = RECOVERY_TARGETS,
    diameter_km: float = 10.0,
    spacing_km: float = 2.0,
    altitude_km: float = 18.0,
    noise_enabled: bool = False,
) -> ScenarioConfig:
    """Desk scenario with one grid altitude and fixed on-grid targets."""
    data = get_scenario_profile("desk").model_dump(mode="json")
    data["grid"].update(diameter_km=diameter_km, spacing_km=spacing_km, altitudes_km=[altitude_km])
    data["network"].update(num_targets=len(targets), fixed_targets=[list(t) for t in targets])
    data["sensing"]["noise_enabled"] = noise_enabled
    return ScenarioConfig.model_validate(data)


def on_grid_scenario(
    num_targets: int,
    diameter_km: float = RANDOM_GRID_DIAMETER_KM,
    spacing_km: float = RANDOM_GRID_SPACING_KM,
    altitude_km: float = 18.0,
    noise_enabled: bool = False,
) -> ScenarioConfig:
    """Desk scenario with one grid altitude whose targets land on distinct random grid points."""
    data = get_scenario_profile("desk").model_dump(mode="json")
    data["grid"].update(diameter_km=diameter_km, spacing_km=spacing_km, altitudes_km=[altitude_km])
    data["network"].update(num_targets=num_targets, fixed_targets=None, target_placement="on_grid")
    data["sensing"]["noise_enabled"] = noise_enabled
    return ScenarioConfig.model_validate(data)


def draw_target_count(seed: int, trial: int, max_targets: int = MAX_RANDOM_TARGETS) -> int:
    """K in 1..max_targets, from a placement sub-stream the deployment never reads."""
    return int(RngStreams(seed, trial).rng(StreamTag.PLACEMENT, 1).integers(1, max_targets + 1))


def grid_indices(points: Sequence[Sequence[float]], grid: NDArray[np.float64]) -> set[int]:
    """Grid index of each point; every point must coincide with a grid point."""
    indices = set()
    for p in np.asarray(points, dtype=float).reshape(-1, 3):
        dist = np.linalg.norm(grid - p, axis=1)
        idx = int(np.argmin(dist))
        if dist[idx] > 1e-9:
            raise ValueError(f"point {p.tolist()} is not on the grid")
        indices.add(idx)
    return indices


def _check(name: str) -> Callable[[Callable[..., tuple[bool, str]]], Callable[..., CheckResult]]:
    def decorator(fn: Callable[..., tuple[bool, str]]) -> Callable[..., CheckResult]:
        @wraps(fn)
        def wrapper(*args, **kwargs) -> CheckResult:
            start = time.perf_counter()
            try:
                passed, detail = fn(*args, **kwargs)
            except Exception as e:
                logger.exception(f"Check {name} raised")
                passed, detail = False, f"{type(e).__name__}: {e}"
            return CheckResult(name, passed, detail, time.perf_counter() - start)

        return wrapper

    return decorator


@_check("hungarian-vs-brute-force")
def check_hungarian(instances: int, seed: int = VALIDATION_SEED) -> tuple[bool, str]:
    rng = np.random.default_rng([seed, 1])
    for i in range(instances):
        k = int(rng.integers(1, 7))
        cost = rng.integers(0, 100, size=(k, k)).astype(float)
        rows = np.arange(k)
        total = cost[rows, hungarian(cost)].sum()
        best = min(cost[rows, list(p)].sum() for p in itertools.permutations(range(k)))
        if total != best:
            return False, f"instance {i} (K={k}): assignment cost {total} > optimum {best}"
    return True, f"{instances} instances, K <= 6"


def descend_bundle(
    origins: NDArray[np.float64],
    directions: NDArray[np.float64],
    max_steps: int = 10_000,
    step_tolerance: float = 1e-13,
) -> NDArray[np.float64]:
    """Gradient descent on the summed squared point-to-line distance."""
    q = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    step = 1.0 / q.shape[0]
    point = origins.mean(axis=0)
    for _ in range(max_steps):
        v = point[None, :] - origins
        perpendicular = v - np.sum(v * q, axis=1, keepdims=True) * q
        move = step * perpendicular.sum(axis=0)
        point = point - move
        if np.linalg.norm(move) < step_tolerance:
            break
    return point


@_check("fusion-vs-gradient-descent")
def check_fusion(bundles: int, seed: int = VALIDATION_SEED) -> tuple[bool, str]:
    rng = np.random.default_rng([seed, 2])
    worst = 0.0
    done = 0
    while done < bundles:
        lines = int(rng.integers(2, 5))
        origins = np.column_stack([rng.uniform(-5, 5, (lines, 2)), np.zeros(lines)])
        anchor = np.array([*rng.uniform(-5, 5, 2), rng.uniform(17, 20)])
        directions = anchor - origins + rng.normal(scale=0.5, size=(lines, 3))
        if np.linalg.cond(projector_sum(directions)) > 100:
            continue
        fused = fuse_lines(origins, directions, strict=True)
        reference = descend_bundle(origins, directions)
        worst = max(worst, float(np.linalg.norm(fused.position - reference)))
        done += 1
    passed = worst <= FUSION_TOLERANCE_KM
    return passed, f"{bundles} bundles, max deviation {worst:.3g} km"


@_check("power-allocation-vs-lp")
def check_power_allocation(instances: int, seed: int = VALIDATION_SEED) -> tuple[bool, str]:
    rng = np.random.default_rng([seed, 3])
    worst_power = 0.0
    worst_sinr = 0.0
    for i in range(instances):
        ues = int(rng.integers(1, 11))
        chi = rng.uniform(0.0, 0.1, (ues, ues))
        np.fill_diagonal(chi, rng.uniform(1.0, 2.0, ues))
        nu = rng.uniform(0.1, 1.0, ues)
        tau = float(rng.uniform(0.1, 1.0))

        allocation = allocate_power(SinrTerms(chi, nu, 0.0), tau, max_backoff_steps=0)
        off = chi - np.diag(np.diag(chi))
        lp = linprog(
            np.ones(ues),
            A_ub=-(np.diag(np.diag(chi)) - tau * off),
            b_ub=-tau * nu,
            bounds=[(0, None)] * ues,
            method="highs",
        )
        if not allocation.feasible or lp.status != 0:
            return False, f"instance {i}: allocation feasible={allocation.feasible}, LP status {lp.status}"
        worst_power = max(worst_power, abs(allocation.powers.sum() - lp.fun) / lp.fun)
        worst_sinr = max(worst_sinr, float(np.max(np.abs(allocation.achieved_sinr - tau)) / tau))
    passed = worst_power <= POWER_TOLERANCE and worst_sinr <= SINR_TOLERANCE
    return passed, (
        f"{instances} instances, max power deviation {worst_power:.3g}, "
        f"max SINR deviation {worst_sinr:.3g}"
    )


def _random_direction(rng: np.random.Generator) -> Direction:
    return Direction(
        float(rng.uniform(0, 2 * np.pi)), float(rng.uniform(0, np.pi / 2)), ViewConvention.DOWNLOOK
    )


@_check("crosstalk-closed-form")
def check_crosstalk(pairs: int, seed: int = VALIDATION_SEED) -> tuple[bool, str]:
    rng = np.random.default_rng([seed, 4])
    worst = 0.0
    for side in (4, 8, 16):
        geom = UpaGeometry(n_x=side, n_y=side)
        for _ in range(pairs):
            d1, d2 = _random_direction(rng), _random_direction(rng)
            direct = crosstalk(geom, d1, d2)
            closed = crosstalk_closed_form(geom, d1, d2)
            worst = max(worst, abs(direct - closed) / max(direct, 1.0))
    if worst > CROSSTALK_TOLERANCE:
        return False, f"max relative deviation {worst:.3g}"

    # cosine offset (0.3, 0): normalized crosstalk must shrink as the array grows
    d1 = Direction(0.0, math.acos(0.5), ViewConvention.DOWNLOOK)
    d2 = Direction(0.0, math.acos(0.8), ViewConvention.DOWNLOOK)
    normalized = [
        crosstalk(UpaGeometry(n_x=side, n_y=side), d1, d2) / side**2 for side in (4, 8, 16)
    ]
    if not (normalized[0] > normalized[1] > normalized[2]):
        return False, f"normalized crosstalk not decreasing: {normalized}"
    return True, f"{3 * pairs} pairs, max relative deviation {worst:.3g}"


@_check("noiseless-exact-recovery")
def check_exact_recovery(trials: int, seed: int = VALIDATION_SEED) -> tuple[bool, str]:
    scenarios = {k: on_grid_scenario(k) for k in range(1, MAX_RANDOM_TARGETS + 1)}
    grid = build_grid(scenarios[1].grid)
    successes = 0
    for trial in range(trials):
        scenario = scenarios[draw_target_count(seed, trial)]
        result = run_trial(
            scenario, seed, trial, [Framework.PROPOSED_CEN, Framework.PROPOSED_DIS], grid
        )
        truth = grid_indices(result.targets, grid)
        cen = result.outcomes[Framework.PROPOSED_CEN]
        dis = result.outcomes[Framework.PROPOSED_DIS]
        supports_ok = set(cen.candidates[0].indices) == truth and all(
            set(c.indices) == truth for c in dis.candidates
        )
        if supports_ok and cen.distance_error_km < 1e-9 and dis.distance_error_km < 1e-6:
            successes += 1
    needed = math.ceil(RECOVERY_SUCCESS_RATE * trials)
    return successes >= needed, f"{successes}/{trials} trials recovered (need {needed})"


@_check("support-search-equivalence")
def check_support_search(trials: int, seed: int = VALIDATION_SEED) -> tuple[bool, str]:
    scenarios = {k: on_grid_scenario(k) for k in range(1, SEARCH_MAX_TARGETS + 1)}
    grid = build_grid(scenarios[1].grid)
    for trial in range(trials):
        scenario = scenarios[draw_target_count(seed, trial, SEARCH_MAX_TARGETS)]
        result = run_trial(
            scenario, seed, trial, [Framework.PROPOSED_CEN], grid, keep_artifacts=True
        )
        truth = tuple(sorted(grid_indices(result.targets, grid)))
        dictionary = result.artifacts.dictionary
        best = exhaustive_support_search(
            result.artifacts.observations.y,
            dictionary.blocks,
            dictionary.num_satellites,
            dictionary.num_grid_points,
            scenario.network.num_targets,
        )
        greedy = tuple(sorted(result.outcomes[Framework.PROPOSED_CEN].candidates[0].indices))
        if tuple(sorted(best)) != truth or greedy != truth:
            return False, f"trial {trial}: search {sorted(best)}, greedy {greedy}, truth {truth}"
    return True, f"{trials} trials on {grid.shape[0]} grid points"


def _omp_invariants(trials: int, seed: int) -> Optional[str]:
    scenario = get_scenario_profile("desk")
    grid = build_grid(scenario.grid)
    for trial in range(trials):
        result = run_trial(scenario, seed, trial, [Framework.OMP_NC], grid, keep_artifacts=True)
        observations, dictionary = result.artifacts.observations, result.artifacts.dictionary
        for l in range(dictionary.num_gateways):
            cand = local_omp(
                observations.y[l], dictionary, l, scenario.network.num_targets, record_states=True
            )
            norms = np.asarray(cand.residual_norms)
            if np.any(np.diff(norms) > 1e-12 * norms[0]):
                return f"trial {trial} gateway {l}: residual norms increase {norms.tolist()}"
            columns = group_columns(cand.indices, dictionary.num_satellites, dictionary.num_grid_points)
            selected = dictionary.block(l)[:, columns]
            residual = cand.states[-1].residual[0]
            leak = np.linalg.norm(selected.conj().T @ residual)
            scale = np.linalg.norm(selected) * np.linalg.norm(observations.y[l])
            if leak > 1e-8 * scale:
                return f"trial {trial} gateway {l}: residual not orthogonal ({leak:.3g})"
    return None


@_check("invariants")
def check_invariants(trials: int, seed: int = VALIDATION_SEED) -> tuple[bool, str]:
    rng = np.random.default_rng([seed, 5])
    scenario = get_scenario_profile("desk")

    deployment = build_deployment(scenario, RngStreams(seed, 0))
    beams = build_beams(deployment)
    for name, beam, n in (
        ("sensing", beams.sensing_beams(), beams.n_sat),
        ("combining", beams.gateway_beams(), beams.n_gat),
        ("communication", beams.comm_beams, beams.n_sat),
    ):
        if not np.allclose(np.abs(beam), 1.0 / np.sqrt(n), rtol=1e-12, atol=0.0):
            return False, f"{name} beams are not constant modulus"

    failure = _omp_invariants(trials, seed)
    if failure:
        return False, failure

    grid = build_grid(scenario.grid)
    gateways = np.array([g.as_array() for g in scenario.network.gateways])
    k = scenario.network.num_targets
    for _ in range(trials):
        candidates = [
            CandidateSet(tuple(int(i) for i in rng.choice(grid.shape[0], k, replace=False)), f"g{l}")
            for l in range(gateways.shape[0])
        ]
        clusters = sequential_associate(candidates, gateways, grid)
        if not check_cluster_constraints(clusters, candidates):
            return False, "association broke the one-member-per-gateway constraint"

    for _ in range(trials):
        directions = rng.normal(size=(int(rng.integers(1, 6)), 3))
        if np.linalg.eigvalsh(projector_sum(directions)).min() < -1e-12:
            return False, "projector sum is not positive semidefinite"

    frameworks = [Framework.PROPOSED_CEN, Framework.PROPOSED_DIS, Framework.OMP_DIS_KMEANS]
    first = run_trial(scenario, seed, 0, frameworks, grid)
    second = run_trial(scenario, seed, 0, frameworks, grid)
    for fw in frameworks:
        if not np.array_equal(first.outcomes[fw].estimates, second.outcomes[fw].estimates):
            return False, f"{fw.value} estimates differ between identical runs"
    if first.comm_power_w != second.comm_power_w:
        return False, "communication power differs between identical runs"
    return True, f"{trials} trials"


def run_validation_suite(
    quick: bool = False,
    seed: int = VALIDATION_SEED,
    sim_logger: Optional[SimulationLogger] = None,
) -> list[CheckResult]:
    """Run every check; ``quick`` shrinks instance counts for smoke runs."""
    size = QUICK_SIZE if quick else FULL_SIZE
    checks = [
        lambda: check_hungarian(size.hungarian_instances, seed),
        lambda: check_fusion(size.fusion_bundles, seed),
        lambda: check_power_allocation(size.power_instances, seed),
        lambda: check_crosstalk(size.crosstalk_pairs, seed),
        lambda: check_exact_recovery(size.recovery_trials, seed),
        lambda: check_support_search(size.search_trials, seed),
        lambda: check_invariants(size.invariant_trials, seed),
    ]
    results = []
    for check in checks:
        result = check()
        logger.info(f"{result.name}: {'passed' if result.passed else 'FAILED'} ({result.detail})")
        if sim_logger is not None:
            sim_logger.log_validation_check(result.name, result.passed, result.detail, result.seconds)
        results.append(result)
    return results


def assert_all_passed(results: Sequence[CheckResult]) -> None:
    """Raises ValidationFailure naming every failed check."""
    failed = [r for r in results if not r.passed]
    if failed:
        names = ", ".join(f"{r.name} ({r.detail})" for r in failed)
        raise ValidationFailure(f"{len(failed)} validation check(s) failed: {names}")
