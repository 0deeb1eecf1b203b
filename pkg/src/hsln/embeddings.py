"""Vocabulary and the word embedding table.

The table is stored the way the model consumes it: one column per
vocabulary entry, ``matrix.shape == (dim, len(vocab))``.
"""

import hashlib
from collections import Counter
from pathlib import Path

import numpy as np

from .errors import ContractError, EmptyCorpusError, FormatError, ParseError
from .tensor import Tensor, getitem, transpose

PAD = "<pad>"
UNK = "<unk>"
PAD_INDEX = 0
UNK_INDEX = 1
OOV_SCALE = 0.25


class Vocabulary:
    """Token -> index map; index 0 is padding, index 1 the unknown token."""

    def __init__(self, tokens):
        tokens = list(tokens)
        if tokens[:2] != [PAD, UNK]:
            tokens = [PAD, UNK] + [t for t in tokens if t not in (PAD, UNK)]
        if len(set(tokens)) != len(tokens):
            raise ContractError("vocabulary tokens must be unique")
        self.tokens = tokens
        self._index = {t: i for i, t in enumerate(tokens)}

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self._index

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def __repr__(self):
        return f"Vocabulary(size={len(self)})"

    def index(self, token):
        return self._index.get(token, UNK_INDEX)

    def encode(self, tokens):
        return np.array([self._index.get(t, UNK_INDEX) for t in tokens], dtype=np.int64)

    def fingerprint(self):
        return hashlib.sha256("\n".join(self.tokens).encode("utf-8")).hexdigest()


def build_vocab(corpus, min_count=1):
    """Vocabulary of every token seen at least ``min_count`` times.

    Ordered by descending frequency, ties broken lexicographically.
    """
    if min_count < 1:
        raise ContractError("min_count must be >= 1")
    if len(corpus) == 0:
        raise EmptyCorpusError("cannot build a vocabulary from an empty corpus")
    counts = Counter(t for a in corpus for s in a.sentences for t in s)
    kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    return Vocabulary([PAD, UNK] + kept)


class EmbeddingTable:
    """Word vectors as columns of a ``(dim, |V|)`` matrix.

    With ``trainable=False`` (the default) the matrix never receives
    gradients, so training leaves it bitwise unchanged.
    """

    def __init__(self, matrix, trainable=False, coverage=None):
        matrix = np.asarray(matrix)
        if matrix.ndim != 2:
            raise ContractError(f"embedding matrix must be (dim, |V|), got shape {matrix.shape}")
        self.matrix = Tensor(matrix, requires_grad=trainable, name="embedding.matrix")
        self.trainable = trainable
        self.coverage = coverage

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __len__(self):
        return self.matrix.shape[1]

    def lookup(self, ids):
        """Rows ``(len(ids), dim)`` for an integer id array of any shape."""
        if self.trainable:
            return getitem(transpose(self.matrix), ids)
        return Tensor(self.matrix.data.T[ids], dtype=self.matrix.dtype)

    def coverage_report(self):
        if self.coverage is None:
            return "0/0 (n/a)"
        covered, total = self.coverage
        pct = 100.0 * covered / total if total else 0.0
        return f"{covered}/{total} ({pct:.1f}%)"


def random_table(vocab, dim, seed=0, trainable=False):
    """Seeded uniform(-0.25, 0.25) vectors; the padding column is zero."""
    rng = np.random.default_rng(seed)
    matrix = rng.uniform(-OOV_SCALE, OOV_SCALE, size=(dim, len(vocab))).astype(np.float32)
    matrix[:, PAD_INDEX] = 0.0
    return EmbeddingTable(matrix, trainable, coverage=(0, len(vocab) - 2))


def load_pretrained(path, vocab, seed=0, dim=None, trainable=False, lowercase=False):
    """Load word2vec text-format vectors for ``vocab``.

    Vocabulary words found in the file get their file vector, padding gets
    zeros and everything else (UNK included) a seeded uniform(-0.25, 0.25)
    sample. ``coverage`` counts covered words out of ``|V| - 2``.

    With ``lowercase`` the file words are lowercased and the first occurrence
    of each lowercased form wins.
    """
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2 or not all(h.isdigit() for h in header):
            raise FormatError(f"{path}: header must be '<count> <dim>', got {' '.join(header)!r}")
        count, file_dim = int(header[0]), int(header[1])
        if dim is not None and dim != file_dim:
            raise FormatError(f"{path}: file has dimension {file_dim}, configuration expects {dim}")
        table = random_table(vocab, file_dim, seed, trainable)
        matrix = table.matrix.data
        covered = set()
        n_vectors = 0
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\r\n").rstrip(" ").split(" ")
            if parts == [""]:
                continue
            n_vectors += 1
            if len(parts) != file_dim + 1:
                raise ParseError(f"{path}: expected {file_dim} values, got {len(parts) - 1}", lineno)
            word = parts[0].lower() if lowercase else parts[0]
            idx = vocab.index(word)
            if idx <= UNK_INDEX or word not in vocab or idx in covered:
                continue
            try:
                matrix[:, idx] = np.array(parts[1:], dtype=np.float32)
            except ValueError:
                raise ParseError(f"{path}: non-numeric vector value", lineno) from None
            covered.add(idx)
    if n_vectors != count:
        raise FormatError(f"{path}: header announces {count} vectors, file has {n_vectors}")
    table.coverage = (len(covered), len(vocab) - 2)
    return table


def embed(sentence, table, vocab):
    """Embedding columns ``(dim, N)`` for a token list (UNK for unknown tokens)."""
    if len(sentence) == 0:
        raise ContractError("cannot embed an empty sentence")
    return transpose(table.lookup(vocab.encode(sentence)))
