"""Sentence encoding: bi-RNN or CNN over word vectors, then pooling.

Attention pooling with ``r`` context vectors::

    A = softmax(U_s tanh(W_s H + b_s))      # (r, N), rows sum to 1
    S = A H^T                               # (r, d_out)
    s = S.flatten()                         # (r * d_out,)

Single-sentence functions follow the column layout above (``H`` is
``(d_out, N)``). :class:`SentenceEncoder` runs the same computation on a
padded batch laid out ``(batch, N, features)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .nn import BiRNN, Layer, glorot, zeros
from .tensor import (Tensor, concat, getitem, masked_fill, matmul, reshape, softmax, tanh,
                     tmax, transpose)


@dataclass
class EncoderConfig:
    kind: str = "rnn"                 # rnn | cnn
    rnn_cell: str = "lstm"            # lstm | gru
    d_hs: int = 200
    windows: tuple = (2, 3, 4, 5)
    d_c: int = 200
    d_a: int = 200
    r: int = 15
    pooling: str = "attention"        # attention | last_state_or_maxpool

    def __post_init__(self):
        self.windows = tuple(int(w) for w in self.windows)
        if self.kind not in ("rnn", "cnn"):
            raise ContractError(f"encoder kind must be rnn or cnn, got {self.kind!r}")
        if self.rnn_cell not in ("lstm", "gru"):
            raise ContractError(f"rnn_cell must be lstm or gru, got {self.rnn_cell!r}")
        if self.pooling not in ("attention", "last_state_or_maxpool"):
            raise ContractError(f"unknown pooling {self.pooling!r}")
        if self.kind == "rnn" and self.d_hs < 1:
            raise ContractError("d_hs must be >= 1")
        if self.kind == "cnn" and (not self.windows or self.d_c < 1 or min(self.windows) < 1):
            raise ContractError("cnn encoder needs non-empty positive windows and d_c >= 1")
        if self.r < 1 or self.d_a < 1:
            raise ContractError("r and d_a must be >= 1")

    @property
    def d_out(self):
        return 2 * self.d_hs if self.kind == "rnn" else len(self.windows) * self.d_c

    @property
    def sentence_dim(self):
        return self.r * self.d_out if self.pooling == "attention" else self.d_out


class ConvEncoder(Layer):
    """One 1-D convolution per window size, "same" zero padding, tanh.

    For window ``w`` the sequence is padded with ``(w - 1) // 2`` zero
    columns on the left and the rest on the right, so every token gets one
    output position.
    """

    def __init__(self, d_in, windows, d_c, rng):
        super().__init__()
        self.windows = tuple(windows)
        self.d_c = d_c
        for w in self.windows:
            self.params[f"W{w}"] = glorot(rng, (w * d_in, d_c))
            self.params[f"b{w}"] = zeros((d_c,))

    @property
    def d_out(self):
        return len(self.windows) * self.d_c

    def forward(self, x, mask=None):
        batch, steps, d_in = x.shape
        if mask is not None and not mask.all():
            x = x * Tensor(mask[:, :, None], dtype=x.dtype)
        features = []
        for w in self.windows:
            left = (w - 1) // 2
            right = w - 1 - left
            parts = []
            if left:
                parts.append(Tensor(np.zeros((batch, left, d_in)), dtype=x.dtype))
            parts.append(x)
            if right:
                parts.append(Tensor(np.zeros((batch, right, d_in)), dtype=x.dtype))
            padded = concat(parts, axis=1) if len(parts) > 1 else x
            cols = [padded[:, k:k + steps] for k in range(w)]
            windowed = concat(cols, axis=2) if w > 1 else cols[0]
            features.append(tanh(matmul(windowed, self.params[f"W{w}"]) + self.params[f"b{w}"]))
        h = concat(features, axis=2) if len(features) > 1 else features[0]
        if mask is not None and not mask.all():
            h = h * Tensor(mask[:, :, None], dtype=h.dtype)
        return h, None


class AttentionPooling(Layer):
    """Parameters ``W_s (d_a, d_out)``, ``b_s (d_a,)``, ``U_s (r, d_a)``."""

    def __init__(self, d_out, d_a, r, rng):
        super().__init__()
        self.r = r
        self.params["W_s"] = glorot(rng, (d_a, d_out))
        self.params["b_s"] = zeros((d_a,))
        self.params["U_s"] = glorot(rng, (r, d_a))

    def forward(self, h, mask=None):
        """``h (B, N, d_out)`` -> ``(s (B, r*d_out), A (B, r, N))``."""
        u = tanh(matmul(h, transpose(self.params["W_s"])) + self.params["b_s"])
        scores = transpose(matmul(u, transpose(self.params["U_s"])), (0, 2, 1))
        if mask is not None and not mask.all():
            scores = masked_fill(scores, (mask == 0)[:, None, :], -np.inf)
        a = softmax(scores, axis=-1)
        s = matmul(a, h)
        return reshape(s, (h.shape[0], -1)), a


class SentenceEncoder(Layer):
    """Word vectors of a padded batch of sentences -> one vector per sentence."""

    def __init__(self, cfg, d_in, rng):
        super().__init__()
        self.cfg = cfg
        if cfg.kind == "rnn":
            self.encoder = BiRNN(d_in, cfg.d_hs, rng, cfg.rnn_cell)
        else:
            self.encoder = ConvEncoder(d_in, cfg.windows, cfg.d_c, rng)
        self.params.update(self.encoder.parameters(f"{cfg.kind}."))
        self.attention = None
        if cfg.pooling == "attention":
            self.attention = AttentionPooling(self.encoder.d_out, cfg.d_a, cfg.r, rng)
            self.params.update(self.attention.parameters("attn."))

    @property
    def d_out(self):
        return self.cfg.sentence_dim

    def forward(self, x, mask):
        h, final = self.encoder.forward(x, mask)
        if self.attention is not None:
            return self.attention.forward(h, mask)[0]
        if self.cfg.kind == "rnn":
            return final
        return tmax(masked_fill(h, (mask == 0)[:, :, None], -np.inf), axis=1)


# -- single-sentence API (column layout) ---------------------------------------

def _columns_to_batch(e):
    return reshape(transpose(e), (1, e.shape[1], e.shape[0]))


def _batch_to_columns(h):
    return transpose(reshape(h, h.shape[1:]))


def encode_rnn(e, rnn):
    """``E (d_w, N)`` -> ``H (2 d_hs, N)`` with a :class:`~hsln.nn.BiRNN`."""
    if e.shape[1] < 1:
        raise ContractError("sentence must have at least one token")
    h, _ = rnn.forward(_columns_to_batch(e))
    return _batch_to_columns(h)


def encode_cnn(e, conv):
    """``E (d_w, N)`` -> ``H (|windows| d_c, N)`` with a :class:`ConvEncoder`."""
    if e.shape[1] < 1:
        raise ContractError("sentence must have at least one token")
    h, _ = conv.forward(_columns_to_batch(e))
    return _batch_to_columns(h)


def attention_pool(h, attn, return_weights=False):
    """``H (d_out, N)`` -> ``s (r * d_out,)``; optionally also ``A (r, N)``."""
    s, a = attn.forward(_columns_to_batch(h))
    s = reshape(s, (s.shape[1],))
    if return_weights:
        return s, reshape(a, a.shape[1:])
    return s


def fallback_pool(h, kind):
    """Pooling without attention.

    rnn: forward half of the last column stacked on the backward half of the
    first column (the final state of each direction). cnn: max over columns.
    """
    if kind == "cnn":
        return tmax(h, axis=1)
    if kind != "rnn":
        raise ContractError(f"unknown encoder kind {kind!r}")
    half = h.shape[0] // 2
    last = h.shape[1] - 1
    return concat([getitem(h, (slice(0, half), last)), getitem(h, (slice(half, None), 0))], axis=0)
