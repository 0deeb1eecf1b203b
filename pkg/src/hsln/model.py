"""The hierarchical sequential labeling network.

word embeddings -> sentence encoder (+ pooling) -> abstract-level bi-LSTM
-> one-hidden-layer head -> CRF (or per-sentence softmax without it).
"""

from dataclasses import dataclass

import numpy as np

from .context import ContextLayer, EmissionHead
from .crf import CRF, argmax_decode, softmax_nll
from .nn import as_mask, dropout
from .encoder import SentenceEncoder
from .tensor import Tensor, concat, getitem, no_grad


@dataclass
class Batch:
    """Padded index arrays for a list of abstracts.

    ``tokens (S, N)`` holds every sentence of every abstract; ``layout (B, n)``
    maps abstract positions to rows of ``tokens`` (``S`` marks padding).
    """

    tokens: np.ndarray
    token_mask: np.ndarray
    layout: np.ndarray
    sentence_mask: np.ndarray
    labels: np.ndarray
    lengths: list

    @property
    def n_sentences(self):
        return int(self.sentence_mask.sum())


def make_batch(abstracts, vocab):
    sentences = [vocab.encode(s) for a in abstracts for s in a.sentences]
    max_len = max(len(s) for s in sentences)
    tokens = np.zeros((len(sentences), max_len), dtype=np.int64)
    for i, s in enumerate(sentences):
        tokens[i, :len(s)] = s
    lengths = [len(a) for a in abstracts]
    n_max = max(lengths)
    layout = np.full((len(abstracts), n_max), len(sentences), dtype=np.int64)
    labels = np.zeros((len(abstracts), n_max), dtype=np.int64)
    row = 0
    for b, a in enumerate(abstracts):
        layout[b, :len(a)] = np.arange(row, row + len(a))
        labels[b, :len(a)] = a.labels
        row += len(a)
    return Batch(tokens, as_mask([len(s) for s in sentences], max_len), layout,
                 as_mask(lengths, n_max), labels, lengths)


class HSLN:
    """Full model; parameters are exposed as one ordered name -> Tensor dict."""

    def __init__(self, cfg, embeddings, n_labels, seed=0):
        self.cfg = cfg
        self.embeddings = embeddings
        self.n_labels = n_labels
        rng = np.random.default_rng(seed)
        self.encoder = SentenceEncoder(cfg.encoder, embeddings.dim, rng)
        self.context = ContextLayer(cfg.context, self.encoder.d_out, rng)
        self.head = EmissionHead(self.context.d_out, cfg.context.ffn_hidden, n_labels, rng,
                                 cfg.context.emission_softmax)
        self.crf = CRF(n_labels, cfg.crf_boundary) if cfg.use_crf else None

    def parameters(self):
        params = {}
        if self.embeddings.trainable:
            params["embedding.matrix"] = self.embeddings.matrix
        params.update(self.encoder.parameters("sentence."))
        params.update(self.context.parameters("context."))
        params.update(self.head.parameters("head."))
        if self.crf is not None:
            params.update(self.crf.parameters("crf."))
        return params

    def state(self):
        """Every tensor needed to rebuild the model, embedding matrix first."""
        state = {"embedding.matrix": self.embeddings.matrix}
        state.update(self.parameters())
        return state

    def load_state(self, arrays):
        for name, tensor in self.state().items():
            tensor.data[...] = arrays[name]

    def zero_grad(self):
        for p in self.parameters().values():
            p.grad = None

    def emissions(self, batch, rng=None, rate=0.0):
        """Emission scores ``(B, n, l)``; dropout is sampled only when ``rng`` is given."""
        x = self.embeddings.lookup(batch.tokens)
        s = self.encoder.forward(x, batch.token_mask)
        s = dropout(s, rate, rng)
        pad = Tensor(np.zeros((1, s.shape[1])), dtype=s.dtype)
        grouped = getitem(concat([s, pad], axis=0), batch.layout)
        h = self.context.forward(grouped, batch.sentence_mask)
        h = dropout(h, rate, rng)
        return self.head.forward(h)

    def sequence_loss(self, emissions, batch):
        """Per-abstract loss ``(B,)``: CRF negative log-likelihood or summed cross-entropy."""
        if self.crf is not None:
            return self.crf.nll(emissions, batch.labels, batch.sentence_mask)
        return softmax_nll(emissions, batch.labels, batch.sentence_mask)

    def decode(self, batch):
        with no_grad():
            em = self.emissions(batch).data
        if self.crf is not None:
            return self.crf.decode(em, batch.lengths)
        return argmax_decode(em, batch.lengths)

    def predict(self, abstracts, vocab, batch_size=64):
        paths = []
        for start in range(0, len(abstracts), batch_size):
            paths.extend(self.decode(make_batch(abstracts[start:start + batch_size], vocab)))
        return paths


def expectation_gap(sampled, deterministic, sentence_mask):
    """Mean over real sentences of ``||sampled - deterministic||^2``.

    ``deterministic`` is treated as a constant.
    """
    det = deterministic.data if isinstance(deterministic, Tensor) else np.asarray(deterministic)
    diff = sampled - Tensor(det, dtype=sampled.dtype)
    m = Tensor(sentence_mask[..., None], dtype=sampled.dtype)
    sq = (diff * diff * m).sum()
    return sq * (1.0 / float(sentence_mask.sum()))


def el_penalty(model, batch, dr, mask_seed):
    """Expectation-linearisation gap for one dropout sample.

    Compares the emissions of a dropout forward pass (seeded by
    ``mask_seed``) with those of the deterministic network.
    """
    if dr <= 0:
        return Tensor(0.0)
    sampled = model.emissions(batch, np.random.default_rng(mask_seed), dr)
    with no_grad():
        det = model.emissions(batch)
    return expectation_gap(sampled, det, batch.sentence_mask)

