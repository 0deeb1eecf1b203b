"""Parameter initialisation, dropout and the recurrent cells.

Batched sequences are laid out ``(batch, time, features)`` with a float
``mask`` of shape ``(batch, time)`` marking real positions. Padding is
always on the right.
"""

import numpy as np

from .tensor import Tensor, concat, default_dtype, matmul, sigmoid, stack, tanh


def glorot(rng, shape, name=None):
    """Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out))."""
    limit = np.sqrt(6.0 / (shape[0] + shape[-1]))
    return Tensor(rng.uniform(-limit, limit, size=shape), requires_grad=True, name=name)


def zeros(shape, name=None):
    return Tensor(np.zeros(shape), requires_grad=True, name=name)


def dropout(x, rate, rng):
    """Inverted dropout: keep with probability 1 - rate, rescale survivors.

    Inference simply skips this call, which is the scaled-weights network.
    """
    if rate <= 0.0 or rng is None:
        return x
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return x * Tensor(keep, dtype=x.dtype)


class Layer:
    """Holds named parameter tensors in ``self.params`` (insertion ordered)."""

    def __init__(self):
        self.params = {}

    def parameters(self, prefix=""):
        return {prefix + k: v for k, v in self.params.items()}


class LSTMCell(Layer):
    """Standard LSTM; gate blocks ordered input, forget, candidate, output.

    i = sigmoid(x W_i + h U_i + b_i), f and o likewise,
    g = tanh(x W_g + h U_g + b_g), c' = f * c + i * g, h' = o * tanh(c').
    """

    n_gates = 4

    def __init__(self, d_in, hidden, rng):
        super().__init__()
        self.hidden = hidden
        self.params["W"] = glorot(rng, (d_in, 4 * hidden))
        self.params["U"] = glorot(rng, (hidden, 4 * hidden))
        self.params["b"] = zeros((4 * hidden,))

    def initial_state(self, batch, dtype):
        z = Tensor(np.zeros((batch, self.hidden)), dtype=dtype)
        return (z, z)

    def input_projection(self, x):
        return matmul(x, self.params["W"]) + self.params["b"]

    def step(self, xw, state):
        h, c = state
        k = self.hidden
        z = xw + matmul(h, self.params["U"])
        i = sigmoid(z[:, :k])
        f = sigmoid(z[:, k:2 * k])
        g = tanh(z[:, 2 * k:3 * k])
        o = sigmoid(z[:, 3 * k:])
        c = f * c + i * g
        return o * tanh(c), c

    @staticmethod
    def output(state):
        return state[0]


class GRUCell(Layer):
    """GRU with update gate z, reset gate r and candidate n.

    n = tanh(x W_n + r * (h U_n) + b_n), h' = (1 - z) * n + z * h.
    """

    n_gates = 3

    def __init__(self, d_in, hidden, rng):
        super().__init__()
        self.hidden = hidden
        self.params["W"] = glorot(rng, (d_in, 3 * hidden))
        self.params["U"] = glorot(rng, (hidden, 3 * hidden))
        self.params["b"] = zeros((3 * hidden,))

    def initial_state(self, batch, dtype):
        return Tensor(np.zeros((batch, self.hidden)), dtype=dtype)

    def input_projection(self, x):
        return matmul(x, self.params["W"]) + self.params["b"]

    def step(self, xw, h):
        k = self.hidden
        hu = matmul(h, self.params["U"])
        z = sigmoid(xw[:, :k] + hu[:, :k])
        r = sigmoid(xw[:, k:2 * k] + hu[:, k:2 * k])
        n = tanh(xw[:, 2 * k:] + r * hu[:, 2 * k:])
        return n + z * (h - n)

    @staticmethod
    def output(state):
        return state


CELLS = {"lstm": LSTMCell, "gru": GRUCell}


def _blend(new, old, m):
    """``new`` where the step is real, ``old`` where it is padding."""
    if m is None:
        return new
    if isinstance(new, tuple):
        return tuple(_blend(a, b, m) for a, b in zip(new, old))
    return old + m * (new - old)


class BiRNN(Layer):
    """Bidirectional recurrent layer, both directions starting from zeros.

    ``forward`` returns ``(H, final)`` where ``H[b, t]`` concatenates the
    forward and backward outputs at ``t`` (zero on padding) and ``final``
    concatenates the forward output at the last real step with the backward
    output at the first step.
    """

    def __init__(self, d_in, hidden, rng, cell="lstm"):
        super().__init__()
        cls = CELLS[cell]
        self.cell = cell
        self.hidden = hidden
        self.fwd = cls(d_in, hidden, rng)
        self.bwd = cls(d_in, hidden, rng)
        for direction, c in (("fwd", self.fwd), ("bwd", self.bwd)):
            for k, v in c.params.items():
                self.params[f"{direction}.{k}"] = v

    @property
    def d_out(self):
        return 2 * self.hidden

    def _run(self, cell, xw, mask, reverse):
        batch, steps = xw.shape[0], xw.shape[1]
        state = cell.initial_state(batch, xw.dtype)
        outputs = [None] * steps
        order = range(steps - 1, -1, -1) if reverse else range(steps)
        for t in order:
            m = None
            if mask is not None and not mask[:, t].all():
                m = Tensor(mask[:, t:t + 1], dtype=xw.dtype)
            state = _blend(cell.step(xw[:, t], state), state, m)
            outputs[t] = cell.output(state)
        return outputs, cell.output(state)

    def forward(self, x, mask=None):
        f_out, f_last = self._run(self.fwd, self.fwd.input_projection(x), mask, reverse=False)
        b_out, b_last = self._run(self.bwd, self.bwd.input_projection(x), mask, reverse=True)
        h = concat([stack(f_out, axis=1), stack(b_out, axis=1)], axis=2)
        if mask is not None and not mask.all():
            h = h * Tensor(mask[:, :, None], dtype=h.dtype)
        return h, concat([f_last, b_last], axis=1)


def as_mask(lengths, steps=None):
    lengths = np.asarray(lengths)
    steps = int(lengths.max()) if steps is None else steps
    return (np.arange(steps)[None, :] < lengths[:, None]).astype(default_dtype())
