import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hsln.encoder import (AttentionPooling, ConvEncoder, EncoderConfig, SentenceEncoder,
                          attention_pool, encode_cnn, encode_rnn, fallback_pool)
from hsln.errors import ContractError
from hsln.nn import BiRNN, as_mask
from hsln.tensor import Tensor, reference_mode


def np_sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def lstm_reference(cell, xs):
    """Step-through of one LSTM direction in float64 over columns ``xs (N, d)``."""
    W, U, b = (cell.params[k].data.astype(np.float64) for k in ("W", "U", "b"))
    k = U.shape[0]
    h, c = np.zeros(k), np.zeros(k)
    out = []
    for x in xs:
        z = x @ W + h @ U + b
        i, f, g, o = (np_sigmoid(z[:k]), np_sigmoid(z[k:2 * k]), np.tanh(z[2 * k:3 * k]),
                      np_sigmoid(z[3 * k:]))
        c = f * c + i * g
        h = o * np.tanh(c)
        out.append(h)
    return np.array(out)


class TestRNN:
    def test_single_token(self, rng):
        rnn = BiRNN(4, 3, rng)
        h = encode_rnn(Tensor(rng.normal(size=(4, 1))), rnn)
        assert h.shape == (6, 1)

    def test_zero_parameters_zero_input(self, rng):
        rnn = BiRNN(4, 3, rng)
        for p in rnn.params.values():
            p.data[...] = 0
        np.testing.assert_array_equal(encode_rnn(Tensor(np.zeros((4, 5))), rnn).data, 0)

    def test_matches_step_through(self, rng):
        with reference_mode():
            rnn = BiRNN(4, 3, rng)
            e = rng.normal(size=(4, 3))
            h = encode_rnn(Tensor(e), rnn).data
        fwd = lstm_reference(rnn.fwd, e.T)
        bwd = lstm_reference(rnn.bwd, e.T[::-1])[::-1]
        np.testing.assert_allclose(h[:3].T, fwd, atol=1e-12)
        np.testing.assert_allclose(h[3:].T, bwd, atol=1e-12)

    @pytest.mark.parametrize("cell", ["lstm", "gru"])
    def test_reversal_swaps_halves(self, rng, cell):
        with reference_mode():
            one = BiRNN(4, 3, rng, cell)
            two = BiRNN(4, 3, rng, cell)
            for k in one.fwd.params:
                two.fwd.params[k].data[...] = one.bwd.params[k].data
                two.bwd.params[k].data[...] = one.fwd.params[k].data
            e = rng.normal(size=(4, 3))
            h = encode_rnn(Tensor(e), one).data
            r = encode_rnn(Tensor(e[:, ::-1].copy()), two).data
        np.testing.assert_allclose(r[:3], h[3:, ::-1], atol=1e-12)
        np.testing.assert_allclose(r[3:], h[:3, ::-1], atol=1e-12)

    def test_padding_does_not_leak(self, rng):
        rnn = BiRNN(4, 3, rng)
        x = rng.normal(size=(1, 5, 4))
        short, _ = rnn.forward(Tensor(x[:, :3]))
        padded = x.copy()
        padded[:, 3:] = rng.normal(size=(1, 2, 4))
        long, final = rnn.forward(Tensor(padded), as_mask([3], 5))
        np.testing.assert_allclose(long.data[:, :3], short.data, atol=1e-6)
        np.testing.assert_array_equal(long.data[:, 3:], 0)
        np.testing.assert_allclose(final.data[0, :3], short.data[0, 2, :3], atol=1e-6)
        np.testing.assert_allclose(final.data[0, 3:], short.data[0, 0, 3:], atol=1e-6)


class TestCNN:
    def test_output_width(self, rng):
        cfg = EncoderConfig("cnn", windows=(2, 3, 4, 5), d_c=200)
        assert cfg.d_out == 800
        conv = ConvEncoder(6, (2, 3, 4, 5), 7, rng)
        assert encode_cnn(Tensor(rng.normal(size=(6, 9))), conv).shape == (28, 9)

    def test_single_token_sees_zero_padding(self, rng):
        with reference_mode():
            conv = ConvEncoder(3, (3,), 2, rng)
            e = rng.normal(size=(3, 1))
            h = encode_cnn(Tensor(e), conv).data
        window = np.concatenate([np.zeros(3), e[:, 0], np.zeros(3)])
        expected = np.tanh(window @ conv.params["W3"].data + conv.params["b3"].data)
        np.testing.assert_allclose(h[:, 0], expected, atol=1e-12)

    def test_window_one_is_columnwise_linear(self, rng):
        with reference_mode():
            conv = ConvEncoder(4, (1,), 4, rng)
            conv.params["W1"].data[...] = np.eye(4) * 0.5
            conv.params["b1"].data[...] = 0.1
            e = rng.normal(size=(4, 6)) * 0.5
            h = encode_cnn(Tensor(e), conv).data
        np.testing.assert_allclose(np.arctanh(h), 0.5 * e + 0.1, atol=1e-10)

    def test_truncation_equivariance(self, rng):
        conv = ConvEncoder(3, (2, 3, 5), 4, rng)
        x = rng.normal(size=(1, 7, 3))
        short, _ = conv.forward(Tensor(x[:, :4]))
        long, _ = conv.forward(Tensor(x), as_mask([4], 7))
        np.testing.assert_allclose(long.data[:, :4], short.data, atol=1e-6)


class TestAttention:
    def test_zero_context_vectors_give_mean(self, rng):
        attn = AttentionPooling(5, 4, 3, rng)
        attn.params["U_s"].data[...] = 0
        h = rng.normal(size=(5, 7))
        s, a = attention_pool(Tensor(h), attn, return_weights=True)
        np.testing.assert_allclose(a.data, 1 / 7, atol=1e-7)
        np.testing.assert_allclose(s.data.reshape(3, 5), np.tile(h.mean(axis=1), (3, 1)), atol=1e-6)

    def test_single_position(self, rng):
        attn = AttentionPooling(5, 4, 3, rng)
        h = rng.normal(size=(5, 1))
        s, a = attention_pool(Tensor(h), attn, return_weights=True)
        np.testing.assert_array_equal(a.data, np.ones((3, 1)))
        np.testing.assert_allclose(s.data, np.tile(h[:, 0], 3), atol=1e-6)

    def test_matches_float64_reference(self, rng):
        attn = AttentionPooling(2, 3, 2, rng)
        h = rng.normal(size=(2, 3))
        s = attention_pool(Tensor(h), attn).data
        W, b, U = (attn.params[k].data.astype(np.float64) for k in ("W_s", "b_s", "U_s"))
        scores = U @ np.tanh(W @ h + b[:, None])
        A = np.exp(scores - scores.max(axis=1, keepdims=True))
        A /= A.sum(axis=1, keepdims=True)
        np.testing.assert_allclose(s, (A @ h.T).reshape(-1), rtol=1e-5, atol=1e-6)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 8).flatmap(lambda n: arrays(np.float64, (4, n), elements=st.floats(-5, 5))),
           st.integers(0, 1000))
    def test_rows_sum_to_one_and_convex_hull(self, h, seed):
        attn = AttentionPooling(4, 3, 2, np.random.default_rng(seed))
        s, a = attention_pool(Tensor(h), attn, return_weights=True)
        np.testing.assert_allclose(a.data.sum(axis=1), 1.0, atol=1e-6)
        rows = s.data.reshape(2, 4)
        assert np.all(rows >= h.min(axis=1) - 1e-5)
        assert np.all(rows <= h.max(axis=1) + 1e-5)

    def test_padding_gets_no_weight(self, rng):
        attn = AttentionPooling(4, 3, 2, rng)
        h = rng.normal(size=(1, 5, 4))
        _, a = attn.forward(Tensor(h), as_mask([3], 5))
        np.testing.assert_array_equal(a.data[0, :, 3:], 0)
        np.testing.assert_allclose(a.data.sum(axis=-1), 1.0, atol=1e-6)


class TestFallback:
    def test_single_column(self):
        h = Tensor(np.array([[1.0], [2.0], [3.0], [4.0]]))
        np.testing.assert_array_equal(fallback_pool(h, "rnn").data, [1, 2, 3, 4])
        np.testing.assert_array_equal(fallback_pool(h, "cnn").data, [1, 2, 3, 4])

    def test_max_pool(self):
        np.testing.assert_array_equal(fallback_pool(Tensor([[1.0, 3.0], [4.0, 2.0]]), "cnn").data, [3, 4])

    def test_rnn_final_states(self, rng):
        rnn = BiRNN(4, 3, rng)
        e = rng.normal(size=(4, 3))
        s = fallback_pool(encode_rnn(Tensor(e), rnn), "rnn").data
        fwd = lstm_reference(rnn.fwd, e.T)
        bwd = lstm_reference(rnn.bwd, e.T[::-1])
        np.testing.assert_allclose(s, np.concatenate([fwd[-1], bwd[-1]]), atol=1e-6)

    def test_unknown_kind(self):
        with pytest.raises(ContractError):
            fallback_pool(Tensor(np.ones((2, 2))), "transformer")


class TestSentenceEncoder:
    def test_sentence_dim(self):
        assert EncoderConfig("rnn", d_hs=200, r=15).sentence_dim == 6000
        assert EncoderConfig("cnn", pooling="last_state_or_maxpool", d_c=10).sentence_dim == 40

    @pytest.mark.parametrize("kind", ["rnn", "cnn"])
    @pytest.mark.parametrize("pooling", ["attention", "last_state_or_maxpool"])
    def test_batch_matches_single(self, rng, kind, pooling):
        cfg = EncoderConfig(kind, d_hs=3, windows=(2, 3), d_c=3, d_a=4, r=2, pooling=pooling)
        enc = SentenceEncoder(cfg, 5, rng)
        x = rng.normal(size=(2, 4, 5))
        batch = enc.forward(Tensor(x), as_mask([4, 2], 4)).data
        alone = enc.forward(Tensor(x[1:, :2]), as_mask([2], 2)).data
        assert batch.shape == (2, cfg.sentence_dim)
        np.testing.assert_allclose(batch[1], alone[0], atol=1e-6)

    def test_config_validation(self):
        with pytest.raises(ContractError):
            EncoderConfig("transformer")
        with pytest.raises(ContractError):
            EncoderConfig("cnn", windows=())
        with pytest.raises(ContractError):
            EncoderConfig(r=0)
