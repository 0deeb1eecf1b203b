import numpy as np
import pytest

from hsln.config import apply_ablation, preset
from hsln.data import Abstract
from hsln.embeddings import Vocabulary, random_table
from hsln.gradcheck import check_model_gradients, tiny_config
from hsln.model import HSLN, make_batch

VOCAB = Vocabulary(["a", "b", "c", "d", "e"])


def abstracts():
    return [Abstract("1", (("a", "b"), ("c",), ("d", "e", "a")), (0, 1, 2)),
            Abstract("2", (("e",), ("b", "b", "c", "d")), (2, 0))]


def model(ablation=None):
    cfg = preset("tiny-cnn")
    if ablation:
        apply_ablation(cfg, ablation)
    return HSLN(cfg.model, random_table(VOCAB, cfg.model.d_w, seed=0), 3, seed=0)


class TestBatch:
    def test_layout(self):
        b = make_batch(abstracts(), VOCAB)
        assert b.tokens.shape == (5, 4)
        np.testing.assert_array_equal(b.layout, [[0, 1, 2], [3, 4, 5]])
        np.testing.assert_array_equal(b.sentence_mask, [[1, 1, 1], [1, 1, 0]])
        assert b.lengths == [3, 2] and b.n_sentences == 5


class TestForward:
    @pytest.mark.parametrize("ablation", [None, "context", "seq-opt", "attention"])
    def test_batch_equals_individual(self, ablation):
        m = model(ablation)
        both = m.emissions(make_batch(abstracts(), VOCAB)).data
        alone = m.emissions(make_batch(abstracts()[1:], VOCAB)).data
        assert both.shape == (2, 3, 3)
        np.testing.assert_allclose(both[1, :2], alone[0], atol=1e-5)
        assert m.predict(abstracts(), VOCAB)[1] == m.predict(abstracts()[1:], VOCAB)[0]

    def test_loss_is_per_abstract(self):
        m = model()
        b = make_batch(abstracts(), VOCAB)
        loss = m.sequence_loss(m.emissions(b), b)
        assert loss.shape == (2,)
        assert np.all(loss.data > 0)

    def test_state_lists_embedding_first(self):
        names = list(model().state())
        assert names[0] == "embedding.matrix"
        assert "embedding.matrix" not in model().parameters()


@pytest.mark.parametrize("variant", ["gru", "no-context", "no-crf", "boundary", "fallback"])
def test_gradients_of_variants(variant):
    mcfg = tiny_config("rnn")
    if variant == "gru":
        mcfg.encoder.rnn_cell = "gru"
    elif variant == "no-context":
        mcfg.context.use_context = False
    elif variant == "no-crf":
        mcfg.use_crf = False
    elif variant == "boundary":
        mcfg.crf_boundary = True
    else:
        mcfg.encoder.pooling = "last_state_or_maxpool"
    result = check_model_gradients(seed=2, mcfg=mcfg)
    assert result.passed(1e-3), result.errors
