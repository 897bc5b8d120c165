import numpy as np
import pytest
from conftest import tiny_system
from helpers import numeric_grad, rel_error

from risae.autonet import Tape, Var
from risae.channel import aggregate
from risae.errors import CheckpointMismatch, ShapeMismatch
from risae.numerics import RngStream
from risae.system import (SystemDims, TrainConfig, build_dataset, decide, decode, encode, end_to_end_forward,
                          evaluate_split, load_model, noise_var_for_snr, one_hot, ris_control, save_model,
                          train)
from risae.system.io import sidecar_path


class TestDims:
    @pytest.mark.parametrize("m", [3, 6, 1])
    def test_rejects_non_power_of_two(self, m):
        with pytest.raises(ValueError):
            SystemDims(modulation=m)

    def test_rejects_empty_ris(self):
        with pytest.raises(ValueError):
            SystemDims(ris_elements=())

    def test_decoder_inputs(self):
        assert SystemDims(k_e=4, k_d=3).decoder_inputs == 2 * 3 + 2 * 3 * 4


class TestDataset:
    def test_shapes_and_split(self):
        dims, channel, _ = tiny_system()
        data = build_dataset(dims, channel, 50, RngStream(0))
        assert data.messages.shape == (50, 4)
        assert len(data.train_idx) == 45 and len(data.test_idx) == 5
        assert set(data.train_idx).isdisjoint(data.test_idx)
        assert data.messages.min() >= 0 and data.messages.max() < 4

    def test_uniform_messages(self):
        dims, channel, _ = tiny_system(block_len=20)
        data = build_dataset(dims, channel, 2000, RngStream(1))
        freq = np.bincount(data.messages.reshape(-1), minlength=4) / data.messages.size
        np.testing.assert_allclose(freq, 0.25, atol=0.01)

    def test_channels_independent_of_order(self):
        dims, channel, _ = tiny_system()
        a = build_dataset(dims, channel, 10, RngStream(2), cache=False)
        b = build_dataset(dims, channel, 10, RngStream(2), cache=False)
        _, ra = a.batch([3, 7])
        _, rb = b.batch([7, 3])
        np.testing.assert_array_equal(ra.D[0][:4], rb.D[0][4:])
        np.testing.assert_array_equal(ra.H[0][4:], rb.H[0][:4])

    def test_rejects_empty(self):
        dims, channel, _ = tiny_system()
        with pytest.raises(ValueError):
            build_dataset(dims, channel, 0, RngStream(0))


class TestEncoder:
    def test_one_hot(self):
        np.testing.assert_array_equal(one_hot([2, 0], 3), [[0, 0, 1], [1, 0, 0]])

    @pytest.mark.parametrize("k", [1, 2, 4])
    def test_block_power(self, k):
        _, _, params = tiny_system(k=k)
        msg = np.random.default_rng(0).integers(0, 4, (5, 4))
        t = encode(msg, params, "eval").value.reshape(5, 4, k)
        power = np.mean(np.sum(np.abs(t) ** 2, axis=2), axis=1)
        np.testing.assert_allclose(power, params.tx_power, rtol=1e-12)

    def test_rejects_bad_shape(self):
        _, _, params = tiny_system()
        with pytest.raises(ShapeMismatch):
            encode(np.zeros((2, 3), int), params, "eval")


class TestRisControl:
    def test_unit_modulus(self):
        dims, channel, params = tiny_system()
        real = channel.realize(np.random.default_rng(0), 6)
        x = Var(np.einsum("nij,j->ni", real.D[0], params.pilot))
        theta, c = ris_control(x, params, 0, "eval")
        assert theta.value.shape == (6, 4)
        np.testing.assert_allclose(np.abs(c.value), 1.0, atol=1e-12)
        np.testing.assert_allclose(c.value, np.exp(1j * theta.value), rtol=1e-15)

    def test_phases_depend_only_on_channel_with_pilot(self):
        dims, channel, params = tiny_system()
        real = channel.realize(np.random.default_rng(1), 4)
        a = end_to_end_forward(np.array([[0, 1, 2, 3]]), real, 0.0, params, "eval")
        b = end_to_end_forward(np.array([[3, 3, 0, 1]]), real, 0.0, params, "eval")
        np.testing.assert_array_equal(a.phases[0], b.phases[0])

    def test_symbol_input_depends_on_message(self):
        dims, channel, params = tiny_system(ris_input="symbol")
        real = channel.realize(np.random.default_rng(1), 4)
        a = end_to_end_forward(np.array([[0, 1, 2, 3]]), real, 0.0, params, "eval")
        b = end_to_end_forward(np.array([[3, 3, 0, 1]]), real, 0.0, params, "eval")
        assert not np.allclose(a.phases[0], b.phases[0])


class TestForward:
    def test_cascade_matches_aggregate(self):
        dims, channel, params = tiny_system(n_ris=2)
        real = channel.realize(np.random.default_rng(2), 8)
        res = end_to_end_forward(np.zeros((2, 4), int), real, 0.0, params, "eval")
        casc = aggregate(real, res.phases)
        np.testing.assert_allclose(res.cascade, casc.O, atol=1e-13)
        np.testing.assert_allclose(res.adv_cascade, casc.C, atol=1e-13)
        np.testing.assert_allclose(res.clean, np.einsum("nij,nj->ni", casc.O, res.tx), atol=1e-13)

    def test_noise_statistics(self):
        dims, channel, params = tiny_system()
        real = channel.realize(np.random.default_rng(3), 4000)
        msg = np.zeros((1000, 4), int)
        res = end_to_end_forward(msg, real, 0.5, params, "eval", rng=np.random.default_rng(4))
        noise = res.received - res.clean
        assert np.mean(np.abs(noise) ** 2) == pytest.approx(0.5, rel=0.03)

    def test_zero_perturbation_bit_identical(self):
        dims, channel, params = tiny_system()
        real = channel.realize(np.random.default_rng(5), 8)
        msg = np.random.default_rng(6).integers(0, 4, (2, 4))
        a = end_to_end_forward(msg, real, 0.1, params, "eval", rng=np.random.default_rng(7))
        b = end_to_end_forward(msg, real, 0.1, params, "eval", rng=np.random.default_rng(7),
                               perturbation=np.zeros(dims.k_a))
        np.testing.assert_array_equal(a.received, b.received)
        np.testing.assert_array_equal(a.probs, b.probs)

    @pytest.mark.parametrize("injection", ["adversary", "legitimate"])
    def test_perturbation_enters_linearly(self, injection):
        dims, channel, params = tiny_system()
        real = channel.realize(np.random.default_rng(8), 4)
        msg = np.zeros((1, 4), int)
        u = np.array([0.3 - 0.1j, 0.2j])
        a = end_to_end_forward(msg, real, 0.0, params, "eval")
        b = end_to_end_forward(msg, real, 0.0, params, "eval", perturbation=u, injection=injection)
        casc = a.adv_cascade if injection == "adversary" else a.cascade
        np.testing.assert_allclose(b.received - a.received, casc @ u, atol=1e-14)

    def test_unknown_injection(self):
        dims, channel, params = tiny_system()
        real = channel.realize(np.random.default_rng(8), 4)
        with pytest.raises(ValueError):
            end_to_end_forward(np.zeros((1, 4), int), real, 0.0, params, "eval",
                               perturbation=np.zeros(2), injection="both")

    def test_symbol_count_mismatch(self):
        dims, channel, params = tiny_system()
        real = channel.realize(np.random.default_rng(8), 5)
        with pytest.raises(ShapeMismatch):
            end_to_end_forward(np.zeros((1, 4), int), real, 0.0, params, "eval")

    def test_perturbation_gradient(self):
        dims, channel, params = tiny_system(n_ris=2)
        real = channel.realize(np.random.default_rng(9), 8)
        msg = np.random.default_rng(10).integers(0, 4, (2, 4))
        unit = np.random.default_rng(11).standard_normal((8, 2)) * (1 + 0j)
        u0 = np.array([0.2 + 0.1j, -0.3j])

        def loss(u):
            return float(end_to_end_forward(msg, real, 0.2, params, "eval", perturbation=Var(u),
                                            unit_noise=unit).loss.value)

        tape = Tape()
        uv = Var(u0, requires_grad=True)
        res = end_to_end_forward(msg, real, 0.2, params, "eval", perturbation=uv, unit_noise=unit, tape=tape)
        g = tape.backward(res.loss)[uv]
        assert rel_error(g, numeric_grad(loss, u0)) < 1e-5

    def test_decide_ties_lowest(self):
        np.testing.assert_array_equal(decide(np.array([[0.25] * 4, [0.1, 0.4, 0.4, 0.1]])), [0, 1])

    def test_decode_probabilities(self):
        dims, channel, params = tiny_system()
        rng = np.random.default_rng(12)
        r = rng.standard_normal((5, 2)) + 1j * rng.standard_normal((5, 2))
        c = rng.standard_normal((5, 2, 2)) + 1j * rng.standard_normal((5, 2, 2))
        probs, dec = decode(r, c, params, "eval")
        np.testing.assert_allclose(probs.value.sum(axis=1), 1.0, rtol=1e-14)
        np.testing.assert_array_equal(dec, probs.value.argmax(axis=1))


class TestTrain:
    def cfg(self):
        return TrainConfig(epochs=2, batch_blocks=8, snr_low=0, snr_high=10)

    def test_deterministic(self):
        out = []
        for _ in range(2):
            dims, channel, params = tiny_system(seed=4)
            data = build_dataset(dims, channel, 40, RngStream(4, 11))
            hist = train(params, data, self.cfg(), RngStream(4, 12))
            out.append((hist.train_loss, [a.copy() for _, a in params.named_arrays()]))
        assert out[0][0] == out[1][0]
        for a, b in zip(out[0][1], out[1][1]):
            np.testing.assert_array_equal(a, b)

    def test_history_and_schedule(self):
        dims, channel, params = tiny_system(seed=5)
        data = build_dataset(dims, channel, 40, RngStream(5))
        hist = train(params, data, TrainConfig(epochs=6, batch_blocks=16, snr_low=0, snr_high=10), RngStream(6))
        assert len(hist.train_loss) == len(hist.val_ser) == 6
        assert hist.lr == pytest.approx([1e-3] * 5 + [2e-4])
        assert all(np.isfinite(hist.train_loss))

    def test_learns(self, trained_tiny):
        params, data = trained_tiny
        _, err, sym = evaluate_split(params, data, data.test_idx, 10.0, RngStream(0))
        assert err / sym < 0.3

    @pytest.mark.parametrize("kw", [dict(epochs=0), dict(snr_low=5, snr_high=0), dict(loss="mse")])
    def test_config_validation(self, kw):
        with pytest.raises(ValueError):
            TrainConfig(**kw)

    def test_noise_var(self):
        assert noise_var_for_snr(0.0) == 1.0
        assert noise_var_for_snr(10.0) == pytest.approx(0.1, rel=1e-15)


class TestModelIO:
    def test_round_trip(self, tmp_path, trained_tiny):
        params, data = trained_tiny
        path = tmp_path / "m.ckpt"
        save_model(path, params, {"epochs": 4})
        loaded, meta = load_model(path, expect=params)
        assert meta == {"epochs": 4}
        for (_, a), (_, b) in zip(params.named_arrays(), loaded.named_arrays()):
            np.testing.assert_array_equal(a, b)
        assert "arch_hash" in sidecar_path(path).read_text()
        real = data.channel.realize(np.random.default_rng(0), 8)
        msg = data.messages[:2]
        a = end_to_end_forward(msg, real, 0.1, params, "eval", rng=np.random.default_rng(1))
        b = end_to_end_forward(msg, real, 0.1, loaded, "eval", rng=np.random.default_rng(1))
        np.testing.assert_array_equal(a.probs, b.probs)

    def test_architecture_mismatch(self, tmp_path):
        _, _, a = tiny_system(n_ris=1)
        _, _, b = tiny_system(n_ris=2)
        save_model(tmp_path / "m.ckpt", a)
        with pytest.raises(CheckpointMismatch):
            load_model(tmp_path / "m.ckpt", expect=b)

    def test_copy_is_independent(self):
        _, _, a = tiny_system()
        b = a.copy()
        b.encoder.layers[0].weight.value += 1.0
        assert not np.array_equal(a.encoder.layers[0].weight.value, b.encoder.layers[0].weight.value)
