import numpy as np
import pytest

from isacsim.config.scenario import Framework
from isacsim.engine.geometry import (
    Position3,
    UpaGeometry,
    crosstalk,
    steering_from_angles,
    uplook_elevation,
    uplook_steering,
)
from isacsim.errors import ContractViolation, RecoveryError
from isacsim.orchestrator.deployment import build_grid
from isacsim.orchestrator.executor import TrialExecutor
from isacsim.orchestrator.sweep import mean_and_stderr
from isacsim.orchestrator.trial_runner import run_trial
from isacsim.sensing.cosamp import cosamp
from isacsim.sensing.music import (
    MAIN_LOBE_LEVEL,
    music_spectrum,
    noise_subspace,
    pick_peaks,
    sample_covariance,
)
from isacsim.sensing.omp import (
    CandidateSet,
    centralized_omp,
    exhaustive_support_search,
    group_columns,
    local_omp,
    local_omp_all,
)
from isacsim.validation.suite import (
    draw_target_count,
    grid_indices,
    on_grid_scenario,
    single_layer_scenario,
)

SEED = 20240611


def _position(point: np.ndarray) -> Position3:
    return Position3(x=float(point[0]), y=float(point[1]), z=float(point[2]))


class TestCandidateSet:
    def test_indices_must_be_distinct(self):
        with pytest.raises(ContractViolation):
            CandidateSet((1, 1), "gateway-0")

    def test_positions(self):
        grid = np.arange(12, dtype=float).reshape(4, 3)
        np.testing.assert_array_equal(CandidateSet((2, 0), "x").positions(grid), grid[[2, 0]])

    def test_group_columns(self):
        assert group_columns([3, 1], 2, 10) == [3, 13, 1, 11]


class TestGroupOmp:
    def test_centralized_noiseless_recovery(self, noiseless_epoch):
        cand = centralized_omp(noiseless_epoch.observations, noiseless_epoch.dictionary, 3)
        assert set(cand.indices) == set(noiseless_epoch.target_indices())
        assert cand.residual_norms[-1] <= 1e-8 * cand.residual_norms[0]

    def test_local_noiseless_recovery(self, noiseless_epoch):
        truth = set(noiseless_epoch.target_indices())
        for cand in local_omp_all(noiseless_epoch.observations, noiseless_epoch.dictionary, 3):
            assert set(cand.indices) == truth

    def test_residual_monotone_and_orthogonal(self, desk_scenario, epoch_factory):
        epoch = epoch_factory(desk_scenario, seed=9)
        dictionary = epoch.dictionary
        cand = local_omp(epoch.observations.y[1], dictionary, 1, 3, record_states=True)
        norms = np.asarray(cand.residual_norms)
        assert np.all(np.diff(norms) <= 1e-12 * norms[0])
        assert len(cand.states) == 3
        columns = group_columns(cand.indices, dictionary.num_satellites, dictionary.num_grid_points)
        selected = dictionary.block(1)[:, columns]
        leak = np.linalg.norm(selected.conj().T @ cand.states[-1].residual[0])
        assert leak <= 1e-8 * np.linalg.norm(selected) * np.linalg.norm(epoch.observations.y[1])

    def test_residual_tolerance_stops_early(self, noiseless_epoch):
        first = centralized_omp(noiseless_epoch.observations, noiseless_epoch.dictionary, 3)
        stopped = centralized_omp(
            noiseless_epoch.observations,
            noiseless_epoch.dictionary,
            3,
            residual_tolerance=2 * first.residual_norms[0],
        )
        assert len(stopped) == 0

    def test_normalized_scores_also_recover(self, noiseless_epoch):
        cand = centralized_omp(
            noiseless_epoch.observations, noiseless_epoch.dictionary, 3, normalize_columns=True
        )
        assert set(cand.indices) == set(noiseless_epoch.target_indices())

    def test_too_many_targets_rejected(self, noiseless_epoch):
        with pytest.raises(ContractViolation):
            centralized_omp(noiseless_epoch.observations, noiseless_epoch.dictionary, 22)

    def test_too_few_slots_rejected(self, noiseless_epoch):
        dictionary = noiseless_epoch.dictionary
        blocks = dictionary.blocks[:, :5]
        with pytest.raises(ContractViolation):
            local_omp(
                noiseless_epoch.observations.y[0, :5],
                type(dictionary)(blocks, dictionary.num_satellites, dictionary.num_grid_points),
                0,
                3,
            )


class TestExhaustiveSearch:
    def test_matches_truth_and_greedy(self, epoch_factory):
        scenario = single_layer_scenario(((4.0, 0.0, 18.0), (-2.0, 2.0, 18.0)), diameter_km=8.0)
        epoch = epoch_factory(scenario)
        dictionary = epoch.dictionary
        assert dictionary.num_grid_points == 13
        best = exhaustive_support_search(
            epoch.observations.y, dictionary.blocks, 2, dictionary.num_grid_points, 2
        )
        greedy = centralized_omp(epoch.observations, dictionary, 2)
        assert sorted(best) == sorted(epoch.target_indices())
        assert sorted(greedy.indices) == sorted(best)


class TestCosamp:
    def test_noiseless_recovery(self, noiseless_epoch):
        dictionary = noiseless_epoch.dictionary
        cand = cosamp(
            noiseless_epoch.observations.y,
            dictionary.blocks,
            dictionary.num_satellites,
            dictionary.num_grid_points,
            3,
            "centralized",
        )
        assert set(cand.indices) == set(noiseless_epoch.target_indices())

    def test_local_returns_k_distinct(self, desk_scenario, epoch_factory):
        epoch = epoch_factory(desk_scenario, seed=5)
        dictionary = epoch.dictionary
        cand = cosamp(
            epoch.observations.y[2][None, :],
            dictionary.blocks[2:3],
            dictionary.num_satellites,
            dictionary.num_grid_points,
            3,
            "gateway-2",
            max_iterations=5,
        )
        assert len(cand) == 3
        assert len(cand.residual_norms) <= 6


class TestMusic:
    @pytest.fixture
    def steering(self):
        geom = UpaGeometry(n_x=4, n_y=4)
        az = np.linspace(0.1, 2.8, 12)
        return steering_from_angles(geom, az, np.full(12, 0.6))[None, :, :]  # (1, M, N)

    def test_noiseless_single_source_peak(self, steering, rng):
        symbols = np.exp(2j * np.pi * rng.random(40))
        snapshots = (symbols[:, None] * steering[0, 5][None, :])[None, :, :]
        spectrum = music_spectrum(snapshots, steering, 1)
        assert int(np.argmax(spectrum)) == 5

    def test_covariance_hermitian(self, rng):
        snaps = rng.standard_normal((30, 4)) + 1j * rng.standard_normal((30, 4))
        r = sample_covariance(snaps)
        np.testing.assert_allclose(r, r.conj().T)
        assert noise_subspace(r, 1).shape == (4, 3)

    def test_too_few_snapshots(self, steering):
        with pytest.raises(RecoveryError):
            music_spectrum(np.zeros((1, 8, 16), dtype=complex), steering, 1)

    def test_empty_noise_subspace(self, steering):
        with pytest.raises(RecoveryError):
            music_spectrum(np.zeros((1, 40, 16), dtype=complex), steering, 16)

    def test_peak_picking_skips_main_lobe(self, steering):
        spectrum = np.zeros(12)
        spectrum[5], spectrum[6], spectrum[0] = 10.0, 9.0, 5.0
        duplicate = np.stack([steering[0, 5], steering[0, 5], steering[0, 0]])
        local = steering.copy()
        local[0, [5, 6, 0]] = duplicate
        cand = pick_peaks(spectrum, local, 2, "music")
        assert cand.indices == (5, 0)

    def test_peak_picking_adjacent_grid_points(self):
        scenario = single_layer_scenario(((0.0, 0.0, 18.0),), diameter_km=12.0, spacing_km=0.5)
        grid = build_grid(scenario.grid)
        gateways = np.array([g.as_array() for g in scenario.network.gateways])
        steering = uplook_steering(scenario.arrays.gateway, gateways[:, None, :], grid[None, :, :])
        peak, neighbour, outside = (
            min(grid_indices([p], grid))
            for p in ((0.0, 0.0, 18.0), (0.5, 0.0, 18.0), (5.0, 0.0, 18.0))
        )
        n_gat = steering.shape[-1]

        def level(m: int) -> np.ndarray:
            overlap = np.einsum("gn,gn->g", steering[:, m].conj(), steering[:, peak])
            return np.abs(overlap) ** 2 / n_gat**2

        assert np.all(level(neighbour) >= MAIN_LOBE_LEVEL)
        assert np.all(level(outside) < MAIN_LOBE_LEVEL)

        spectrum = np.zeros(len(grid))
        spectrum[peak], spectrum[neighbour], spectrum[outside] = 10.0, 9.0, 5.0
        assert pick_peaks(spectrum, steering, 2, "music").indices == (peak, outside)
        # with the outside point gone the neighbour is skipped for the next lobe-free point
        spectrum[outside] = 0.0
        second = pick_peaks(spectrum, steering, 2, "music").indices[1]
        assert second != neighbour
        assert not np.all(level(second) >= MAIN_LOBE_LEVEL)

    def test_trial_recovers_single_target(self):
        scenario = single_layer_scenario(((4.0, 0.0, 18.0),))
        result = run_trial(scenario, 3, 0, [Framework.MUSIC_CEN, Framework.MUSIC_NC])
        for fw in (Framework.MUSIC_CEN, Framework.MUSIC_NC):
            outcome = result.outcomes[fw]
            assert not outcome.failed
            assert outcome.distance_error_km < 1e-9


class TestSeededBaselines:
    def test_cosamp_matches_omp_support_noiseless(self):
        scenarios = {k: on_grid_scenario(k).updated("sensing", n_slots=27) for k in (1, 2, 3)}
        trials = 20
        matches = 0
        for t in range(trials):
            scenario = scenarios[draw_target_count(SEED, t)]
            result = run_trial(scenario, SEED, t, [Framework.PROPOSED_CEN, Framework.COSAMP_CEN])
            omp = set(result.outcomes[Framework.PROPOSED_CEN].candidates[0].indices)
            cos = set(result.outcomes[Framework.COSAMP_CEN].candidates[0].indices)
            matches += omp == cos
        assert matches >= 0.9 * trials

    @pytest.mark.slow
    def test_cosamp_off_grid_error_not_below_omp(self, desk_scenario):
        frameworks = [Framework.PROPOSED_CEN, Framework.COSAMP_CEN]
        with TrialExecutor() as pool:
            outcomes = pool.run_trials(desk_scenario, SEED, 100, frameworks)
        results = [o.result for o in outcomes if o.ok]
        omp, omp_se = mean_and_stderr([r.error(Framework.PROPOSED_CEN) for r in results])
        cos, cos_se = mean_and_stderr([r.error(Framework.COSAMP_CEN) for r in results])
        assert cos >= omp - (omp_se + cos_se)

    @pytest.mark.slow
    def test_music_cooperation_does_not_hurt(self, desk_scenario):
        frameworks = [Framework.MUSIC_CEN, Framework.MUSIC_NC]
        with TrialExecutor() as pool:
            outcomes = pool.run_trials(desk_scenario, SEED, 50, frameworks)
        results = [o.result for o in outcomes if o.ok]
        assert len(results) == 50
        cen, cen_se = mean_and_stderr([r.error(Framework.MUSIC_CEN) for r in results])
        nc, nc_se = mean_and_stderr([r.error(Framework.MUSIC_NC) for r in results])
        assert cen <= nc + cen_se + nc_se

    @pytest.mark.slow
    def test_local_omp_keeps_gateway_direction_off_grid(self, desk_scenario):
        scenario = (
            desk_scenario.updated("grid", spacing_km=1.0)
            .updated("network", num_targets=1)
            .updated("sensing", noise_enabled=False)
        )
        geom = scenario.arrays.gateway
        gateways = scenario.network.gateways
        grid = build_grid(scenario.grid)
        trials = 30
        aligned = 0
        for t in range(trials):
            result = run_trial(scenario, SEED, t, [Framework.PROPOSED_DIS], grid)
            truth = _position(result.targets[0])
            picks = result.outcomes[Framework.PROPOSED_DIS].candidates
            levels = [
                crosstalk(
                    geom,
                    uplook_elevation(gateways[l], _position(grid[cand.indices[0]])),
                    uplook_elevation(gateways[l], truth),
                )
                for l, cand in enumerate(picks)
            ]
            aligned += min(levels) >= 0.9 * geom.n
        assert aligned >= 0.8 * trials
