"""Corpus files for sequential sentence classification.

File layout (PubMed-RCT style, UTF-8)::

    ###24854809
    BACKGROUND<TAB>Emotional eating is associated with overeating ...
    OBJECTIVE<TAB>The aim of this study was ...

    ###24854810
    ...

An abstract starts at a ``###<id>`` header and ends at a blank line or the
next header. A trailing ``\\r`` on any line is ignored.
"""

import logging
import re
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError, EmptyCorpusError, LabelError, ParseError

logger = logging.getLogger(__name__)

SPLITS = ("train", "validation", "test")
UNLABELED = -1
_MULTI_LABEL_SEP = re.compile(r"[|,]")
_DIGIT = re.compile(r"\d")


class EmptySentenceError(ContractError):
    pass


class LabelSet(Sequence):
    """Ordered, duplicate-free list of label names (index <-> name bijection)."""

    def __init__(self, names):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise LabelError(f"duplicate labels in {names}")
        if len(names) < 2:
            raise LabelError(f"need at least 2 labels, got {names}")
        self.names = names
        self._index = {name: i for i, name in enumerate(names)}

    def __getitem__(self, i):
        return self.names[i]

    def __len__(self):
        return len(self.names)

    def __contains__(self, name):
        return name in self._index

    def __eq__(self, other):
        return isinstance(other, LabelSet) and self.names == other.names

    def __hash__(self):
        return hash(self.names)

    def __repr__(self):
        return f"LabelSet({list(self.names)})"

    def index(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise LabelError(f"unknown label {name!r}; known: {list(self.names)}") from None


@dataclass(frozen=True)
class Abstract:
    """One document: ordered tokenized sentences with one label index each.

    ``texts`` keeps the original sentence strings so files can be written
    back unchanged. Label entries are :data:`UNLABELED` for input that
    carried no labels.
    """

    id: str
    sentences: tuple
    labels: tuple
    texts: tuple = None

    def __post_init__(self):
        if not self.sentences:
            raise ContractError(f"abstract {self.id!r} has no sentences")
        if len(self.sentences) != len(self.labels):
            raise ContractError(
                f"abstract {self.id!r}: {len(self.sentences)} sentences but {len(self.labels)} labels")
        if any(len(s) == 0 for s in self.sentences):
            raise ContractError(f"abstract {self.id!r} has an empty sentence")
        if self.texts is None:
            object.__setattr__(self, "texts", tuple(" ".join(s) for s in self.sentences))

    def __len__(self):
        return len(self.sentences)

    @property
    def is_labeled(self):
        return all(y != UNLABELED for y in self.labels)


@dataclass(frozen=True)
class Corpus:
    abstracts: tuple
    label_set: LabelSet
    split: str = "train"
    multi_label_reduced: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ContractError(f"split must be one of {SPLITS}, got {self.split!r}")
        n = len(self.label_set)
        for a in self.abstracts:
            if any(y >= n or y < UNLABELED for y in a.labels):
                raise LabelError(f"abstract {a.id!r} has a label index outside [0, {n})")

    def __len__(self):
        return len(self.abstracts)

    def __iter__(self):
        return iter(self.abstracts)

    @property
    def n_sentences(self):
        return sum(len(a) for a in self.abstracts)

    def label_paths(self):
        return [list(a.labels) for a in self.abstracts]


def tokenize(sentence, lowercase=True, normalize_digits=False):
    """Whitespace tokenization, lowercased by default.

    >>> tokenize("N = 85", normalize_digits=True)
    ['n', '=', '00']
    """
    tokens = sentence.split()
    if not tokens:
        raise EmptySentenceError("sentence contains no tokens")
    if lowercase:
        tokens = [t.lower() for t in tokens]
    if normalize_digits:
        tokens = [_DIGIT.sub("0", t) for t in tokens]
    return tokens


def parse_rct_text(text, known_labels=None, split="train", lowercase=True,
                   normalize_digits=False, require_labels=True, source="<string>"):
    """Parse corpus text. See :func:`parse_rct`."""
    raw = []  # (id, [(label_field, text, lineno)])
    current = None
    for lineno, line in enumerate(text.split("\n"), start=1):
        if line.endswith("\r"):
            line = line[:-1]
        if line.startswith("###"):
            current = (line[3:].strip(), [])
            raw.append(current)
            continue
        if not line.strip():
            current = None
            continue
        if current is None:
            raise ParseError(f"{source}: sentence line outside an abstract (missing ### header)", lineno)
        if "\t" in line:
            label, sentence = line.split("\t", 1)
        elif require_labels:
            raise ParseError(f"{source}: expected LABEL<TAB>sentence", lineno)
        else:
            label, sentence = None, line
        current[1].append((label, sentence, lineno))

    if not raw:
        raise EmptyCorpusError(f"{source}: no abstracts found")

    names = list(known_labels.names) if known_labels is not None else []
    seen = set(names)
    reduced = 0
    parsed = []
    for doc_id, lines in raw:
        if not lines:
            raise ParseError(f"{source}: abstract {doc_id!r} has no sentences")
        sentences, labels, texts = [], [], []
        for label, sentence, lineno in lines:
            try:
                sentences.append(tuple(tokenize(sentence, lowercase, normalize_digits)))
            except EmptySentenceError:
                raise ParseError(f"{source}: empty sentence", lineno) from None
            texts.append(sentence)
            if label is None:
                labels.append(None)
                continue
            parts = [p.strip() for p in _MULTI_LABEL_SEP.split(label) if p.strip()]
            if not parts:
                raise ParseError(f"{source}: empty label", lineno)
            if len(parts) > 1:
                reduced += 1
            label = parts[0]
            if label not in seen:
                if known_labels is not None:
                    raise LabelError(f"{source}: line {lineno}: unknown label {label!r}")
                seen.add(label)
                names.append(label)
            labels.append(label)
        parsed.append((doc_id, sentences, labels, texts))

    if reduced:
        logger.warning("%s: %d multi-label sentences reduced to their first label", source, reduced)
    label_set = known_labels if known_labels is not None else LabelSet(names)
    abstracts = tuple(
        Abstract(doc_id, tuple(sents),
                 tuple(UNLABELED if y is None else label_set.index(y) for y in labels),
                 tuple(texts))
        for doc_id, sents, labels, texts in parsed)
    return Corpus(abstracts, label_set, split, multi_label_reduced=reduced)


def parse_rct(path, known_labels=None, split="train", lowercase=True,
              normalize_digits=False, require_labels=True):
    """Read a corpus file.

    Labels are collected in order of first appearance unless ``known_labels``
    is given, in which case every label must belong to it. Sentences tagged
    with several labels (``A|B`` or ``A,B``) keep the first one; the number
    of such reductions is stored on the corpus.

    With ``require_labels=False`` lines without a tab are accepted and get
    the label index :data:`UNLABELED`.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_rct_text(text, known_labels, split, lowercase, normalize_digits,
                          require_labels, source=str(path))


def serialize_rct(corpus, labels=None):
    """Render ``corpus`` in the corpus file format.

    ``labels`` optionally overrides the stored labels (one path per abstract),
    which is how predictions are written.
    """
    out = []
    for k, a in enumerate(corpus.abstracts):
        path = a.labels if labels is None else labels[k]
        out.append(f"###{a.id}\n")
        for y, text in zip(path, a.texts):
            if y == UNLABELED:
                out.append(f"{text}\n")
            else:
                out.append(f"{corpus.label_set[y]}\t{text}\n")
        out.append("\n")
    return "".join(out)


def write_rct(corpus, path, labels=None):
    Path(path).write_text(serialize_rct(corpus, labels), encoding="utf-8")


def make_batches(corpus, max_abstracts_per_batch, seed=0, shuffle=None):
    """Group whole abstracts into batches.

    Training corpora are shuffled with ``seed``; other splits keep file order
    unless ``shuffle`` says otherwise.
    """
    if max_abstracts_per_batch < 1:
        raise ContractError("max_abstracts_per_batch must be >= 1")
    if shuffle is None:
        shuffle = corpus.split == "train"
    order = np.arange(len(corpus))
    if shuffle:
        order = np.random.default_rng(seed).permutation(len(corpus))
    abstracts = corpus.abstracts
    return [[abstracts[i] for i in order[start:start + max_abstracts_per_batch]]
            for start in range(0, len(order), max_abstracts_per_batch)]
