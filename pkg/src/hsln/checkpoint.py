"""Checkpoint container.

Layout::

    HSLN-CHECKPOINT 1\\n
    <header length in bytes>\\n
    <header: canonical JSON, UTF-8>\\n
    <parameter blocks: little-endian float32, C order, in header order>

The header records the flat configuration, label names, vocabulary (with a
SHA-256 fingerprint), every parameter's name and shape, the selected epoch,
its validation weighted F1 and a SHA-256 of the parameter payload. Writing
is canonical, so save -> load -> save reproduces the file byte for byte.
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError, CorruptCheckpointError, HSLNError

MAGIC = b"HSLN-CHECKPOINT 1\n"


@dataclass
class Checkpoint:
    params: dict          # name -> ndarray, "embedding.matrix" first
    vocab: object
    label_set: object
    config: object
    epoch: int
    val_weighted_f1: float
    history: list = field(default_factory=list, compare=False)
    log_lines: list = field(default_factory=list, compare=False)

    def to_model(self):
        """Rebuild the :class:`~hsln.model.HSLN` these parameters belong to."""
        from .embeddings import EmbeddingTable
        from .model import HSLN
        mcfg = self.config.model
        table = EmbeddingTable(self.params["embedding.matrix"], mcfg.trainable_embeddings)
        model = HSLN(mcfg, table, len(self.label_set), self.config.seed)
        expected = {k: v.shape for k, v in model.state().items()}
        got = {k: v.shape for k, v in self.params.items()}
        if expected != got:
            raise CorruptCheckpointError(
                f"parameter shapes do not match the configuration: expected {expected}, got {got}")
        model.load_state(self.params)
        return model


def _header(ckpt, payload_hash):
    from .config import to_flat
    return {
        "config": to_flat(ckpt.config),
        "epoch": int(ckpt.epoch),
        "labels": list(ckpt.label_set),
        "params": [{"name": k, "shape": list(v.shape)} for k, v in ckpt.params.items()],
        "payload_sha256": payload_hash,
        "val_weighted_f1": float(ckpt.val_weighted_f1),
        "vocab": list(ckpt.vocab.tokens),
        "vocab_sha256": ckpt.vocab.fingerprint(),
    }


def dumps_checkpoint(ckpt):
    payload = b"".join(np.ascontiguousarray(v, dtype="<f4").tobytes() for v in ckpt.params.values())
    header = json.dumps(_header(ckpt, hashlib.sha256(payload).hexdigest()),
                        sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    return MAGIC + f"{len(header)}\n".encode("ascii") + header + b"\n" + payload


def save_checkpoint(ckpt, path):
    Path(path).write_bytes(dumps_checkpoint(ckpt))


def loads_checkpoint(blob):
    from .config import from_flat
    from .data import LabelSet
    from .embeddings import Vocabulary

    if not blob.startswith(MAGIC):
        raise CorruptCheckpointError("not a checkpoint file (bad magic line)")
    rest = blob[len(MAGIC):]
    try:
        nl = rest.index(b"\n")
        size = int(rest[:nl])
        header = json.loads(rest[nl + 1:nl + 1 + size].decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise CorruptCheckpointError(f"unreadable header: {exc}") from None
    body = rest[nl + 1 + size:]
    if not body.startswith(b"\n"):
        raise CorruptCheckpointError("header length does not match header")
    payload = body[1:]
    try:
        specs = [(p["name"], tuple(int(n) for n in p["shape"])) for p in header["params"]]
        vocab = Vocabulary(header["vocab"])
        labels = LabelSet(header["labels"])
        config = from_flat(header["config"])
        epoch = int(header["epoch"])
        f1 = float(header["val_weighted_f1"])
        payload_hash = header["payload_sha256"]
        vocab_hash = header["vocab_sha256"]
    except (KeyError, TypeError, ValueError, HSLNError) as exc:
        raise CorruptCheckpointError(f"invalid header: {exc}") from None
    if vocab.fingerprint() != vocab_hash:
        raise CorruptCheckpointError("vocabulary hash mismatch")
    if any(n < 1 for _, shape in specs for n in shape):
        raise CorruptCheckpointError("non-positive dimension in a parameter shape")
    expected = 4 * sum(int(np.prod(shape)) for _, shape in specs)
    if expected != len(payload):
        raise CorruptCheckpointError(
            f"parameter payload has {len(payload)} bytes, shapes require {expected}")
    if hashlib.sha256(payload).hexdigest() != payload_hash:
        raise CorruptCheckpointError("parameter payload hash mismatch")
    params, offset = {}, 0
    for name, shape in specs:
        count = int(np.prod(shape))
        params[name] = np.frombuffer(payload, dtype="<f4", count=count, offset=offset).reshape(shape).astype(np.float32)
        offset += 4 * count
    ckpt = Checkpoint(params, vocab, labels, config, epoch, f1)
    if "embedding.matrix" not in params or params["embedding.matrix"].shape[1] != len(vocab):
        raise CorruptCheckpointError("embedding matrix missing or inconsistent with the vocabulary")
    try:
        ckpt.to_model()
    except (ContractError, KeyError) as exc:
        raise CorruptCheckpointError(f"checkpoint does not describe a valid model: {exc}") from None
    return ckpt


def load_checkpoint(path):
    return loads_checkpoint(Path(path).read_bytes())
