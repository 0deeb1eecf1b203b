import numpy as np
import pytest

from hsln.context import ContextConfig, ContextLayer, EmissionHead, contextualize, emit
from hsln.errors import ContractError
from hsln.tensor import Tensor


def vectors(rng, n, d):
    return [Tensor(rng.normal(size=d)) for _ in range(n)]


class TestContextualize:
    def test_single_sentence(self, rng):
        layer = ContextLayer(ContextConfig(d_hd=3, ffn_hidden=3), 4, rng)
        out = contextualize(vectors(rng, 1, 4), layer)
        assert len(out) == 1 and out[0].shape == (6,)

    def test_bypass_is_identity(self, rng):
        layer = ContextLayer(ContextConfig(d_hd=2, ffn_hidden=3, use_context=False), 4, rng)
        s = vectors(rng, 3, 4)
        out = contextualize(s, layer)
        assert layer.params == {}
        for a, b in zip(s, out):
            np.testing.assert_array_equal(a.data, b.data)

    def test_bypass_projects_when_sizes_differ(self, rng):
        layer = ContextLayer(ContextConfig(d_hd=3, ffn_hidden=3, use_context=False), 4, rng)
        out = contextualize(vectors(rng, 2, 4), layer)
        assert out[0].shape == (6,)
        assert set(layer.params) == {"proj"}

    def test_late_change_reaches_early_positions(self, rng):
        layer = ContextLayer(ContextConfig(d_hd=3, ffn_hidden=3), 4, rng)
        s = vectors(rng, 3, 4)
        before = [o.data.copy() for o in contextualize(s, layer)]
        s[2] = Tensor(s[2].data + 1.0)
        after = [o.data for o in contextualize(s, layer)]
        for t in (0, 1):
            np.testing.assert_array_equal(before[t][:3], after[t][:3])
            assert not np.allclose(before[t][3:], after[t][3:])

    def test_empty_abstract(self, rng):
        layer = ContextLayer(ContextConfig(d_hd=2, ffn_hidden=2), 4, rng)
        with pytest.raises(ContractError):
            contextualize([], layer)


class TestEmit:
    def test_zero_weights(self, rng):
        head = EmissionHead(4, 3, 5, rng)
        for p in head.params.values():
            p.data[...] = 0
        np.testing.assert_array_equal(emit(Tensor(rng.normal(size=4)), head).data, np.zeros(5))

    def test_hand_computed(self, rng):
        head = EmissionHead(1, 1, 2, rng)
        head.params["W1"].data[...] = [[2.0]]
        head.params["b1"].data[...] = [0.5]
        head.params["W2"].data[...] = [[1.0, -3.0]]
        head.params["b2"].data[...] = [0.0, 1.0]
        hidden = np.tanh(2.0 * 0.25 + 0.5)
        np.testing.assert_allclose(emit(Tensor([0.25]), head).data, [hidden, 1.0 - 3.0 * hidden], rtol=1e-6)

    @pytest.mark.parametrize("n_labels", [5, 6])
    def test_output_length(self, rng, n_labels):
        assert emit(Tensor(rng.normal(size=4)), EmissionHead(4, 3, n_labels, rng)).shape == (n_labels,)

    def test_optional_softmax(self, rng):
        head = EmissionHead(4, 3, 5, rng, emission_softmax=True)
        assert emit(Tensor(rng.normal(size=4)), head).data.sum() == pytest.approx(1.0, abs=1e-6)

    def test_non_finite_input(self, rng):
        with pytest.raises(ContractError):
            emit(Tensor([np.nan, 0.0]), EmissionHead(2, 2, 2, rng))


def test_bypass_is_position_independent(rng):
    cfg = ContextConfig(d_hd=2, ffn_hidden=3, use_context=False)
    layer, head = ContextLayer(cfg, 4, rng), EmissionHead(4, 3, 5, rng)
    v = rng.normal(size=4)
    out = contextualize([Tensor(v), Tensor(rng.normal(size=4)), Tensor(v)], layer)
    np.testing.assert_array_equal(emit(out[0], head).data, emit(out[2], head).data)
