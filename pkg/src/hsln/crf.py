"""Linear-chain CRF over sentence labels.

The score of a label path ``y`` for emissions ``R`` (``n x l``) and
transitions ``T`` (``l x l``, row = previous label, column = next label) is

    s(y) = sum_i R[i, y_i] + sum_{i>=2} T[y_{i-1}, y_i]

and ``p(y) = exp(s(y)) / Z`` with ``log Z`` computed by the forward
algorithm in log space. There are no start/end scores unless a
:class:`CRF` is built with ``boundary=True``.

Batched functions take emissions ``(B, n, l)``, integer labels ``(B, n)``
and a float mask ``(B, n)`` with right padding.
"""

import numpy as np

from .errors import ContractError
from .nn import Layer
from .tensor import Tensor, as_tensor, getitem, logsumexp, log_softmax, reshape, tsum


class CRF(Layer):
    """Holds the transition matrix (zero-initialised) and optional boundary scores."""

    def __init__(self, n_labels, boundary=False):
        super().__init__()
        self.n_labels = n_labels
        self.params["T"] = Tensor(np.zeros((n_labels, n_labels)), requires_grad=True)
        self.boundary = boundary
        if boundary:
            self.params["start"] = Tensor(np.zeros(n_labels), requires_grad=True)
            self.params["end"] = Tensor(np.zeros(n_labels), requires_grad=True)

    @property
    def T(self):
        return self.params["T"]

    def _boundaries(self):
        if self.boundary:
            return self.params["start"], self.params["end"]
        return None, None

    def nll(self, emissions, labels, mask):
        """Per-abstract negative log-likelihood ``(B,)``."""
        start, end = self._boundaries()
        return (batch_log_partition(emissions, self.T, mask, start, end)
                - batch_sequence_score(emissions, labels, self.T, mask, start, end))

    def decode(self, emissions, lengths):
        start, end = self._boundaries()
        t = self.T.data
        s = None if start is None else start.data
        e = None if end is None else end.data
        return [_viterbi(emissions[b, :n], t, s, e) for b, n in enumerate(lengths)]


def batch_sequence_score(emissions, labels, trans, mask, start=None, end=None):
    batch, steps, _ = emissions.shape
    labels = np.asarray(labels)
    rows = np.arange(batch)[:, None]
    cols = np.arange(steps)[None, :]
    safe = np.where(mask > 0, labels, 0)
    m = Tensor(mask, dtype=emissions.dtype)
    score = tsum(getitem(emissions, (rows, cols, safe)) * m, axis=1)
    if steps > 1:
        pair = getitem(trans, (safe[:, :-1], safe[:, 1:]))
        score = score + tsum(pair * Tensor(mask[:, 1:], dtype=emissions.dtype), axis=1)
    if start is not None:
        score = score + getitem(start, safe[:, 0])
    if end is not None:
        last = mask.sum(axis=1).astype(int) - 1
        score = score + getitem(end, safe[np.arange(batch), last])
    return score


def batch_log_partition(emissions, trans, mask, start=None, end=None):
    batch, steps, n_labels = emissions.shape
    alpha = emissions[:, 0]
    if start is not None:
        alpha = alpha + start
    t = reshape(trans, (1, n_labels, n_labels))
    for i in range(1, steps):
        nxt = logsumexp(reshape(alpha, (batch, n_labels, 1)) + t, axis=1) + emissions[:, i]
        m = mask[:, i:i + 1]
        if m.all():
            alpha = nxt
        else:
            alpha = alpha + Tensor(m, dtype=emissions.dtype) * (nxt - alpha)
    if end is not None:
        alpha = alpha + end
    return logsumexp(alpha, axis=1)


def _viterbi(r, t, start=None, end=None):
    n, n_labels = r.shape
    score = r[0].astype(np.float64) + (0.0 if start is None else start)
    back = np.zeros((n, n_labels), dtype=np.int64)
    for i in range(1, n):
        cand = score[:, None] + t
        back[i] = np.argmax(cand, axis=0)  # first maximum = lowest index
        score = cand[back[i], np.arange(n_labels)] + r[i]
    if end is not None:
        score = score + end
    path = [int(np.argmax(score))]
    for i in range(n - 1, 0, -1):
        path.append(int(back[i, path[-1]]))
    return path[::-1]


def softmax_nll(emissions, labels, mask):
    """Per-abstract sum of per-sentence cross-entropy ``(B,)`` (no CRF)."""
    batch, steps, _ = emissions.shape
    safe = np.where(mask > 0, labels, 0)
    logp = getitem(log_softmax(emissions, axis=-1),
                   (np.arange(batch)[:, None], np.arange(steps)[None, :], safe))
    return -tsum(logp * Tensor(mask, dtype=emissions.dtype), axis=1)


def argmax_decode(emissions, lengths):
    return [[int(k) for k in np.argmax(emissions[b, :n], axis=1)] for b, n in enumerate(lengths)]


# -- single-sequence API --------------------------------------------------------

def _single(r, y=None):
    r = as_tensor(r)
    if r.ndim != 2:
        raise ContractError(f"emissions must be (n, l), got shape {r.shape}")
    if y is not None:
        y = np.asarray(y, dtype=np.int64)
        if y.shape != (r.shape[0],):
            raise ContractError(f"label path of length {len(y)} for {r.shape[0]} sentences")
        if np.any(y < 0) or np.any(y >= r.shape[1]):
            raise ContractError(f"label index outside [0, {r.shape[1]})")
    return reshape(r, (1,) + r.shape), y, np.ones((1, r.shape[0]))


def sequence_score(r, y, trans):
    """Score of path ``y`` under emissions ``r (n, l)`` and transitions ``trans``."""
    e, y, mask = _single(r, y)
    return reshape(batch_sequence_score(e, y[None], as_tensor(trans), mask), ())


def log_partition(r, trans):
    """``log`` of the sum of ``exp(score)`` over all label paths."""
    e, _, mask = _single(r)
    if e.shape[1] < 1:
        raise ContractError("need at least one sentence")
    return reshape(batch_log_partition(e, as_tensor(trans), mask), ())


def nll_loss(r, gold, trans):
    """``-log p(gold)``; always >= 0."""
    return log_partition(r, trans) - sequence_score(r, gold, trans)


def viterbi_decode(r, trans):
    """Highest-scoring path; ties go to the lowest label index."""
    r = r.data if isinstance(r, Tensor) else np.asarray(r)
    trans = trans.data if isinstance(trans, Tensor) else np.asarray(trans)
    if r.ndim != 2 or r.shape[0] < 1:
        raise ContractError(f"emissions must be (n >= 1, l), got shape {r.shape}")
    return _viterbi(r, trans)


# -- transition report ------------------------------------------------------------

def export_transitions(trans, label_set):
    """Text table of ``trans``: rows = previous label, columns = current label."""
    t = trans.data if isinstance(trans, Tensor) else np.asarray(trans)
    names = list(label_set)
    if t.shape != (len(names), len(names)):
        raise ContractError(f"transition matrix {t.shape} does not match {len(names)} labels")
    width = max(8, max(len(n) for n in names) + 1)
    lines = ["prev\\next".ljust(width) + "".join(n.rjust(width) for n in names)]
    for name, row in zip(names, t):
        # -0.00 would not survive a parse/print round trip
        cells = "".join(f"{(0.0 if abs(v) < 0.005 else v):.2f}".rjust(width) for v in row)
        lines.append(name.ljust(width) + cells)
    return "\n".join(lines) + "\n"


def parse_transitions(text):
    """Inverse of :func:`export_transitions`: ``(label names, matrix)``."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    names = lines[0].split()[1:]
    matrix = np.zeros((len(names), len(names)))
    for i, line in enumerate(lines[1:]):
        parts = line.split()
        if parts[0] != names[i] or len(parts) != len(names) + 1:
            raise ContractError(f"malformed transition row {i + 1}: {line!r}")
        matrix[i] = [float(v) for v in parts[1:]]
    return names, matrix


def best_transition_path(trans, length):
    """Highest-scoring path of ``length`` labels under transitions alone."""
    t = trans.data if isinstance(trans, Tensor) else np.asarray(trans)
    return _viterbi(np.zeros((length, t.shape[0])), t)
