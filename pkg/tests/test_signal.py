import numpy as np
import pytest

from isacsim.engine.signal import (
    draw_symbols,
    gateway_observe,
    synthesize_all_tx,
    synthesize_tx,
    unit_symbols,
)
from isacsim.engine.streams import RngStreams, StreamTag


class TestSymbols:
    def test_unit_modulus(self, rng):
        s = unit_symbols(rng, (3, 50))
        np.testing.assert_allclose(np.abs(s), 1.0)

    def test_shapes(self, rng):
        symbols = draw_symbols(rng, 2, 10, 7)
        assert symbols.sensing.shape == (2, 7)
        assert symbols.comm.shape == (10, 7)


class TestTransmit:
    def test_vectorized_matches_per_slot(self, noiseless_epoch, rng):
        epoch = noiseless_epoch
        dep = epoch.deployment
        powers = rng.uniform(0.0, 2.0, (dep.n_slots, dep.num_ues))
        symbols = draw_symbols(RngStreams(1, 0).rng(StreamTag.SYMBOLS), 2, dep.num_ues, dep.n_slots)
        tx = synthesize_all_tx(epoch.beams, powers, symbols)
        assert tx.shape == (2, dep.n_slots, 64)
        for i in range(2):
            for t in (0, 5, dep.n_slots - 1):
                np.testing.assert_allclose(tx[i, t], synthesize_tx(epoch.beams, powers, symbols, i, t))


class TestObservation:
    def test_on_grid_targets_lie_in_dictionary_span(self, noiseless_epoch):
        epoch = noiseless_epoch
        dictionary = epoch.dictionary
        indices = epoch.target_indices()
        expected = np.zeros_like(epoch.observations.y)
        for l in range(dictionary.num_gateways):
            for k, m in enumerate(indices):
                for i in range(dictionary.num_satellites):
                    expected[l] += dictionary.column(l, i, m) * epoch.reflections[i, k, l]
        y = epoch.observations.y
        assert np.linalg.norm(y - expected) <= 1e-10 * np.linalg.norm(y)

    def test_scalar_observation_matches_vectorized(self, noiseless_epoch):
        epoch = noiseless_epoch
        for l, t in ((0, 0), (3, 7), (2, 20)):
            value = gateway_observe(
                epoch.deployment, epoch.beams, epoch.tx, epoch.reflections, l, t, np.random.default_rng(0)
            )
            assert value == pytest.approx(epoch.observations.y[l, t], rel=1e-9)

    def test_dictionary_shape(self, noiseless_epoch):
        dictionary = noiseless_epoch.dictionary
        assert dictionary.blocks.shape == (4, 21, 2 * 21)
        assert dictionary.group_columns(3) == [3, 24]
        assert dictionary.subset([1, 2]).num_gateways == 2

    def test_noise_is_keyed(self, desk_scenario, epoch_factory):
        first = epoch_factory(desk_scenario, seed=4)
        second = epoch_factory(desk_scenario, seed=4)
        np.testing.assert_array_equal(first.observations.y, second.observations.y)
        np.testing.assert_allclose(first.observations.noise_variance, desk_scenario.noise_power_w)
