"""Abstract-level context enrichment and the emission head.

Sentence vectors of one abstract pass through a bi-LSTM over sentence
positions; each output then goes through a one-hidden-layer tanh network
producing ``l`` unnormalised label scores (emissions) for the CRF.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .nn import BiRNN, Layer, glorot, zeros
from .tensor import matmul, reshape, softmax, stack, tanh


@dataclass
class ContextConfig:
    d_hd: int = 200
    ffn_hidden: int = 200
    use_context: bool = True
    emission_softmax: bool = False

    def __post_init__(self):
        if self.d_hd < 1 or self.ffn_hidden < 1:
            raise ContractError("d_hd and ffn_hidden must be >= 1")


class ContextLayer(Layer):
    """Bi-LSTM over sentences, or the identity when ``use_context`` is off.

    Without context the sentence vectors go straight to the head; if their
    size differs from ``2 * d_hd`` a linear projection (no bias) matches it
    so the head keeps its shape.
    """

    def __init__(self, cfg, d_in, rng):
        super().__init__()
        self.cfg = cfg
        self.rnn = None
        self.projection = None
        if cfg.use_context:
            self.rnn = BiRNN(d_in, cfg.d_hd, rng, "lstm")
            self.params.update(self.rnn.parameters("lstm."))
        elif d_in != 2 * cfg.d_hd:
            self.projection = glorot(rng, (d_in, 2 * cfg.d_hd))
            self.params["proj"] = self.projection

    @property
    def d_out(self):
        return 2 * self.cfg.d_hd

    def forward(self, s, mask=None):
        """``s (B, n, d_in)`` -> ``(B, n, 2 d_hd)``."""
        if self.rnn is not None:
            return self.rnn.forward(s, mask)[0]
        if self.projection is not None:
            return matmul(s, self.projection)
        return s


class EmissionHead(Layer):
    def __init__(self, d_in, hidden, n_labels, rng, emission_softmax=False):
        super().__init__()
        self.emission_softmax = emission_softmax
        self.params["W1"] = glorot(rng, (d_in, hidden))
        self.params["b1"] = zeros((hidden,))
        self.params["W2"] = glorot(rng, (hidden, n_labels))
        self.params["b2"] = zeros((n_labels,))

    def forward(self, h):
        hidden = tanh(matmul(h, self.params["W1"]) + self.params["b1"])
        scores = matmul(hidden, self.params["W2"]) + self.params["b2"]
        if self.emission_softmax:
            scores = softmax(scores, axis=-1)
        return scores


def contextualize(sentence_vectors, layer):
    """List of ``n`` sentence vectors -> list of ``n`` enriched vectors."""
    if len(sentence_vectors) < 1:
        raise ContractError("an abstract needs at least one sentence")
    s = reshape(stack(sentence_vectors, axis=0), (1, len(sentence_vectors), -1))
    out = layer.forward(s)
    return [out[0, i] for i in range(out.shape[1])]


def emit(h, head):
    """One enriched vector ``(d,)`` -> emission scores ``(l,)``."""
    if not np.all(np.isfinite(h.data)):
        raise ContractError("non-finite input to the emission head")
    return reshape(head.forward(reshape(h, (1, -1))), (-1,))
