"""Grammar-generated abstracts with a known, learnable label structure.

Every abstract visits BACKGROUND -> OBJECTIVE -> METHODS -> RESULTS ->
CONCLUSIONS, each label repeated a number of times drawn from its count
range. Sentences mix label-specific words with shared filler words, so the
label is recoverable from content.

With ``ambiguity > 0`` each BACKGROUND or OBJECTIVE sentence, with that
probability, draws its content words from the union of the two label
vocabularies. Such a sentence carries no information about which of the
two it is; only its position in the abstract does.
"""

from dataclasses import dataclass, field

import numpy as np

from .data import Abstract, Corpus, LabelSet

LABELS = ("BACKGROUND", "OBJECTIVE", "METHODS", "RESULTS", "CONCLUSIONS")
_SHARED_WORDS = 40
_LABEL_WORDS = 30


@dataclass
class SyntheticSpec:
    counts: dict = field(default_factory=lambda: {label: (1, 1) for label in LABELS})
    ambiguity: float = 0.0
    min_tokens: int = 5
    max_tokens: int = 12
    content_fraction: float = 0.5


def fixed_spec():
    """Exactly one sentence per label: B, O, M, R, C."""
    return SyntheticSpec()


def canonical_spec():
    """B, O, M, R, C in order with realistic repeat counts (one OBJECTIVE,
    up to three METHODS and RESULTS sentences)."""
    return SyntheticSpec(counts={"BACKGROUND": (1, 2), "OBJECTIVE": (1, 1), "METHODS": (1, 3),
                                 "RESULTS": (1, 3), "CONCLUSIONS": (1, 2)},
                         min_tokens=6, content_fraction=0.6)


GRAMMARS = {"canonical": canonical_spec, "fixed": fixed_spec}


def context_spec(ambiguity=0.3):
    """Two BACKGROUND then two OBJECTIVE sentences at fixed positions, with
    B/O content ambiguity. The B/O boundary sits between positions 2 and 3,
    so an ambiguous sentence there cannot be resolved from neighbouring
    labels alone, only from its position."""
    return SyntheticSpec(counts={"BACKGROUND": (2, 2), "OBJECTIVE": (2, 2), "METHODS": (1, 2),
                                 "RESULTS": (1, 2), "CONCLUSIONS": (1, 1)},
                         ambiguity=ambiguity)


def _vocabularies():
    shared = [f"w{i}" for i in range(_SHARED_WORDS)]
    own = {label: [f"{label[:3].lower()}{i}" for i in range(_LABEL_WORDS)] for label in LABELS}
    return shared, own


def generate(n_abstracts, seed=0, spec=None, split="train", id_offset=0):
    """A :class:`~hsln.data.Corpus` of ``n_abstracts`` grammar-generated abstracts."""
    spec = spec or canonical_spec()
    rng = np.random.default_rng(seed)
    shared, own = _vocabularies()
    ambiguous = own["BACKGROUND"] + own["OBJECTIVE"]
    label_set = LabelSet(LABELS)
    abstracts = []
    for k in range(n_abstracts):
        sentences, labels = [], []
        for y, label in enumerate(LABELS):
            lo, hi = spec.counts[label]
            for _ in range(int(rng.integers(lo, hi + 1))):
                pool = own[label]
                if label in ("BACKGROUND", "OBJECTIVE") and rng.random() < spec.ambiguity:
                    pool = ambiguous
                n = int(rng.integers(spec.min_tokens, spec.max_tokens + 1))
                words = [pool[rng.integers(len(pool))] if rng.random() < spec.content_fraction
                         else shared[rng.integers(len(shared))] for _ in range(n)]
                sentences.append(tuple(words))
                labels.append(y)
        abstracts.append(Abstract(str(id_offset + k), tuple(sentences), tuple(labels)))
    return Corpus(tuple(abstracts), label_set, split)


def generate_splits(n_train, n_val, n_test, seed=0, spec=None):
    """Disjoint train/validation/test corpora (separate seeds, distinct ids)."""
    return (generate(n_train, seed, spec, "train", 0),
            generate(n_val, seed + 1000, spec, "validation", n_train),
            generate(n_test, seed + 2000, spec, "test", n_train + n_val))
