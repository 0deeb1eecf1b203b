"""Finite-difference verification of the full model's gradients."""

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .context import ContextConfig
from .data import Abstract
from .embeddings import Vocabulary, random_table
from .encoder import EncoderConfig
from .model import HSLN, expectation_gap, make_batch
from .tensor import backward, no_grad, reference_mode


def numeric_gradient(f, x, h=1e-3):
    """Central differences of scalar ``f()`` w.r.t. every entry of array ``x`` (in place)."""
    grad = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        up = f()
        flat[i] = old - h
        down = f()
        flat[i] = old
        out[i] = (up - down) / (2 * h)
    return grad


def relative_error(analytic, numeric):
    """``||a - n|| / max(||a||, ||n||)`` (0 when both vanish)."""
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / scale)


def tiny_config(kind="rnn"):
    enc = EncoderConfig(kind, "lstm", d_hs=6, windows=(2, 3), d_c=4, d_a=5, r=2)
    return ModelConfig(d_w=8, encoder=enc, context=ContextConfig(d_hd=6, ffn_hidden=5),
                       trainable_embeddings=True)


def tiny_abstract():
    return Abstract("gradcheck", (("a", "b", "c"), ("b", "d")), (0, 2))


@dataclass
class GradCheckResult:
    errors: dict
    n_parameters: int

    @property
    def max_error(self):
        return max(self.errors.values())

    def passed(self, tol=1e-3):
        return self.max_error < tol


def check_model_gradients(seed=0, kind="rnn", dropout=0.2, beta=0.01, h=1e-3, n_labels=3,
                          mcfg=None):
    """Compare autodiff and central-difference gradients of the training loss.

    The loss is the CRF negative log-likelihood of one two-sentence abstract
    plus ``beta`` times the expectation-linearisation gap, with one dropout
    sample whose masks are fixed by ``seed``. Runs in float64.
    """
    with reference_mode():
        mcfg = mcfg or tiny_config(kind)
        vocab = Vocabulary(["<pad>", "<unk>", "a", "b", "c", "d"])
        emb = random_table(vocab, mcfg.d_w, seed, trainable=mcfg.trainable_embeddings)
        model = HSLN(mcfg, emb, n_labels, seed)
        batch = make_batch([tiny_abstract()], vocab)
        with no_grad():
            det = model.emissions(batch).data.copy()

        def loss():
            rng = np.random.default_rng(seed + 1)
            em = model.emissions(batch, rng, dropout)
            total = model.sequence_loss(em, batch).sum()
            if beta > 0:
                total = total + beta * expectation_gap(em, det, batch.sentence_mask)
            return total

        def value():
            with no_grad():
                return float(loss().data)

        model.zero_grad()
        backward(loss())
        params = model.parameters()
        errors = {}
        for name, p in params.items():
            analytic = np.zeros_like(p.data) if p.grad is None else p.grad
            errors[name] = relative_error(analytic, numeric_gradient(value, p.data, h))
        return GradCheckResult(errors, sum(p.size for p in params.values()))
