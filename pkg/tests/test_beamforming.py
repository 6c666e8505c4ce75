import numpy as np
import pytest
from scipy.optimize import linprog

from isacsim.engine.beamforming import (
    SinrTerms,
    allocate_all_slots,
    allocate_power,
    build_beams,
    is_diagonally_dominant,
    probe_mapping,
    sinr_terms,
)
from isacsim.engine.channel import realize_comm_channels
from isacsim.engine.streams import RngStreams
from isacsim.errors import PowerAllocationError
from isacsim.orchestrator.deployment import build_deployment


def terms(chi, nu) -> SinrTerms:
    return SinrTerms(np.asarray(chi, dtype=float), np.asarray(nu, dtype=float), 1.0)


class TestProbeMapping:
    def test_cyclic_sweep(self):
        np.testing.assert_array_equal(probe_mapping(5, 3), [0, 1, 2, 0, 1])

    def test_one_slot_per_point(self):
        np.testing.assert_array_equal(probe_mapping(4, 4), [0, 1, 2, 3])

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            probe_mapping(3, 0)


class TestBeamPlan:
    def test_constant_modulus(self, desk_scenario):
        deployment = build_deployment(desk_scenario, RngStreams(1, 0))
        beams = build_beams(deployment)
        assert beams.n_slots == 84
        for beam, n in (
            (beams.sensing_beams(), beams.n_sat),
            (beams.gateway_beams(), beams.n_gat),
            (beams.comm_beams, beams.n_sat),
        ):
            np.testing.assert_allclose(np.abs(beam), 1.0 / np.sqrt(n), rtol=1e-12)

    def test_sensing_beam_follows_probe(self, desk_scenario):
        deployment = build_deployment(desk_scenario, RngStreams(1, 0))
        beams = build_beams(deployment, n_slots=90)
        np.testing.assert_array_equal(beams.sensing_beams_at(85), beams.sensing_beams_at(1))
        np.testing.assert_array_equal(beams.gateway_beams()[:, 2], beams.gateway_beams_at(2))


class TestAllocatePower:
    def test_two_ue_closed_form(self):
        allocation = allocate_power(terms([[1.0, 0.1], [0.1, 1.0]], [1.0, 1.0]), 1.0)
        assert allocation.feasible
        assert allocation.backoff_steps == 0
        np.testing.assert_allclose(allocation.powers, [1 / 0.9, 1 / 0.9])
        np.testing.assert_allclose(allocation.achieved_sinr, [1.0, 1.0])

    def test_infeasible_without_backoff(self):
        allocation = allocate_power(terms([[1.0, 2.0], [2.0, 1.0]], [1.0, 1.0]), 1.0, max_backoff_steps=0)
        assert not allocation.feasible
        np.testing.assert_array_equal(allocation.powers, [0.0, 0.0])

    def test_backoff_until_dominant(self):
        allocation = allocate_power(
            terms([[1.0, 2.0], [2.0, 1.0]], [1.0, 1.0]), 1.0, backoff_factor=0.5, max_backoff_steps=5
        )
        assert allocation.feasible
        assert allocation.backoff_steps == 2
        assert allocation.threshold == pytest.approx(0.25)
        assert allocation.requested_threshold == 1.0
        np.testing.assert_allclose(allocation.achieved_sinr, 0.25)

    def test_matches_linear_program(self, rng):
        for _ in range(10):
            n = int(rng.integers(1, 8))
            chi = rng.uniform(0.0, 0.1, (n, n))
            np.fill_diagonal(chi, rng.uniform(1.0, 2.0, n))
            nu = rng.uniform(0.1, 1.0, n)
            tau = float(rng.uniform(0.1, 1.0))
            allocation = allocate_power(terms(chi, nu), tau)
            off = chi - np.diag(np.diag(chi))
            lp = linprog(
                np.ones(n),
                A_ub=-(np.diag(np.diag(chi)) - tau * off),
                b_ub=-tau * nu,
                bounds=[(0, None)] * n,
                method="highs",
            )
            assert lp.status == 0
            assert allocation.powers.sum() == pytest.approx(lp.fun, rel=1e-8)

    def test_non_finite_terms_rejected(self):
        with pytest.raises(PowerAllocationError):
            allocate_power(terms([[np.nan]], [1.0]), 1.0)

    def test_non_positive_diagonal_rejected(self):
        with pytest.raises(PowerAllocationError):
            allocate_power(terms([[0.0, 0.1], [0.1, 1.0]], [1.0, 1.0]), 1.0)

    def test_no_ues(self):
        allocation = allocate_power(terms(np.zeros((0, 0)), np.zeros(0)), 1.0)
        assert allocation.feasible
        assert allocation.powers.size == 0

    def test_dominance(self):
        assert is_diagonally_dominant(np.array([[1.0, 0.4], [0.4, 1.0]]), 2.0)
        assert not is_diagonally_dominant(np.array([[1.0, 0.5], [0.5, 1.0]]), 2.0)


class TestSchedule:
    def test_desk_schedule(self, desk_scenario):
        streams = RngStreams(2, 0)
        deployment = build_deployment(desk_scenario, streams)
        beams = build_beams(deployment, n_slots=4)
        channels = realize_comm_channels(streams, deployment, 4)
        schedule = allocate_all_slots(
            channels, beams, desk_scenario.noise_power_w, desk_scenario.sensing.sinr_threshold
        )
        assert schedule.powers.shape == (4, 10)
        assert np.all(schedule.powers >= 0)
        if schedule.feasible:
            for slot in schedule.slots:
                assert slot.achieved_sinr.min() >= slot.threshold * (1 - 1e-9)
        expected = schedule.powers.sum() / (4 * 2)
        assert schedule.average_comm_power(2) == pytest.approx(expected)

    def test_sinr_terms_shape(self, desk_scenario):
        streams = RngStreams(2, 0)
        deployment = build_deployment(desk_scenario, streams)
        beams = build_beams(deployment, n_slots=1)
        channels = realize_comm_channels(streams, deployment, 1)
        t = sinr_terms(channels, beams, 0, desk_scenario.noise_power_w)
        assert t.chi.shape == (10, 10)
        assert np.all(np.diag(t.chi) > 0)
        assert np.all(t.nu >= desk_scenario.noise_power_w)
