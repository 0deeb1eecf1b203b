"""Training: Adam with per-epoch learning-rate decay, dropout with the
expectation-linearisation penalty, and best-validation-epoch selection."""

import logging
from dataclasses import dataclass, field

import numpy as np

from .checkpoint import Checkpoint
from .config import to_flat
from .data import make_batches
from .embeddings import build_vocab, load_pretrained, random_table
from .errors import LabelError, TrainingError
from .metrics import evaluate
from .model import HSLN, expectation_gap, make_batch
from .tensor import backward, no_grad

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, state, lr):
    """One bias-corrected Adam update of every tensor in ``params`` (name -> Tensor).

    A missing gradient counts as zero. Moments are kept in float64.
    """
    for name, p in params.items():
        if p.grad is not None and not np.all(np.isfinite(p.grad)):
            raise TrainingError(f"non-finite gradient for parameter {name!r}")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for name, p in params.items():
        g = np.zeros(p.shape) if p.grad is None else p.grad.astype(np.float64)
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros(p.shape)
            state.v[name] = np.zeros(p.shape)
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        update = lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        p.data -= update.astype(p.dtype)


def epoch_lr(epoch, cfg):
    """Learning rate for 0-based ``epoch``: ``lr0 * lr_decay ** epoch``."""
    return cfg.lr0 * cfg.lr_decay ** epoch


def clip_gradients(params, max_norm):
    grads = [p.grad for p in params.values() if p.grad is not None]
    norm = float(np.sqrt(sum(float((g.astype(np.float64) ** 2).sum()) for g in grads)))
    if norm > max_norm:
        scale = max_norm / norm
        for p in params.values():
            if p.grad is not None:
                p.grad = p.grad * scale
    return norm


def batch_loss(model, batch, rate, beta, rng):
    """Mean per-abstract loss on one dropout sample, plus ``beta`` times the
    squared emission gap to the deterministic network."""
    em = model.emissions(batch, rng if rate > 0 else None, rate)
    loss = model.sequence_loss(em, batch).mean()
    if beta > 0 and rate > 0:
        with no_grad():
            det = model.emissions(batch).data
        loss = loss + beta * expectation_gap(em, det, batch.sentence_mask)
    return loss


def evaluate_model(model, corpus, vocab, batch_size=64):
    pred = model.predict(list(corpus.abstracts), vocab, batch_size)
    return evaluate(pred, corpus.label_paths(), corpus.label_set)


class TrainLog:
    """Plain-text log, one ``key=value`` record per line (no wall-clock fields)."""

    def __init__(self, path=None):
        self.path = path
        self.lines = []
        if path is not None:
            open(path, "a", encoding="utf-8").close()

    def write(self, kind, /, **fields):
        line = kind + "".join(f" {k}={_fmt(v)}" for k, v in fields.items())
        self.lines.append(line)
        logger.info(line)
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6f}"
    if isinstance(v, (list, tuple)):
        return ",".join(str(x) for x in v) or "none"
    return str(v)


def parse_log(text):
    records = []
    for line in text.splitlines():
        if not line.strip():
            continue
        kind, *items = line.split(" ")
        records.append((kind, dict(item.split("=", 1) for item in items)))
    return records


def train(cfg, train_corpus, val_corpus, embeddings_path=None, log_path=None, vocab=None):
    """Train from scratch and return the checkpoint of the best validation epoch.

    Each epoch shuffles the training abstracts, takes one Adam step per batch
    at :func:`epoch_lr`, then scores weighted F1 on ``val_corpus``. Training
    stops after ``cfg.epochs`` epochs or ``cfg.patience`` epochs without
    improvement. With ``epochs=0`` the initial model is evaluated once.
    """
    if train_corpus.label_set != val_corpus.label_set:
        raise LabelError("training and validation corpora use different label sets")
    mcfg = cfg.model
    vocab = vocab or build_vocab(train_corpus, cfg.min_count)
    if embeddings_path is not None:
        table = load_pretrained(embeddings_path, vocab, cfg.seed, dim=mcfg.d_w,
                                trainable=mcfg.trainable_embeddings, lowercase=cfg.lowercase)
    else:
        table = random_table(vocab, mcfg.d_w, cfg.seed, trainable=mcfg.trainable_embeddings)
    labels = train_corpus.label_set
    model = HSLN(mcfg, table, len(labels), cfg.seed)
    params = model.parameters()
    log = TrainLog(log_path)
    log.write("config", **to_flat(cfg))
    log.write("setup", ablations=cfg.ablations(), labels=list(labels), vocab=len(vocab),
              parameters=sum(p.size for p in params.values()),
              embedding_coverage=table.coverage_report().replace(" ", ""),
              train_abstracts=len(train_corpus), train_sentences=train_corpus.n_sentences,
              val_abstracts=len(val_corpus))

    def snapshot():
        return {k: t.data.copy() for k, t in model.state().items()}

    best_f1 = evaluate_model(model, val_corpus, vocab).weighted_f1
    best_epoch, best_state = 0, snapshot()
    log.write("epoch", epoch=0, lr=0.0, train_loss=float("nan"), val_weighted_f1=best_f1)
    history = []
    adam = AdamState()
    rng = np.random.default_rng(cfg.seed + 1)
    beta = cfg.effective_beta
    stale = 0
    for epoch in range(cfg.epochs):
        lr = epoch_lr(epoch, cfg)
        total, count = 0.0, 0
        batches = make_batches(train_corpus, cfg.batch_size, seed=cfg.seed + epoch, shuffle=True)
        for k, abstracts in enumerate(batches):
            batch = make_batch(abstracts, vocab)
            model.zero_grad()
            loss = batch_loss(model, batch, cfg.dropout, beta, rng)
            value = float(loss.data)
            if not np.isfinite(value):
                raise TrainingError(f"non-finite loss at epoch {epoch + 1}, batch {k + 1}")
            backward(loss)
            if cfg.clip_norm > 0:
                clip_gradients(params, cfg.clip_norm)
            try:
                adam_step(params, adam, lr)
            except TrainingError as exc:
                raise TrainingError(f"epoch {epoch + 1}, batch {k + 1}: {exc}") from None
            total += value * len(abstracts)
            count += len(abstracts)
        train_loss = total / count
        val_f1 = evaluate_model(model, val_corpus, vocab).weighted_f1
        history.append({"epoch": epoch + 1, "lr": lr, "train_loss": train_loss,
                        "val_weighted_f1": val_f1})
        log.write("epoch", epoch=epoch + 1, lr=lr, train_loss=train_loss, val_weighted_f1=val_f1)
        if val_f1 > best_f1:
            best_f1, best_epoch, best_state, stale = val_f1, epoch + 1, snapshot(), 0
        else:
            stale += 1
            if cfg.patience and stale >= cfg.patience:
                log.write("early_stop", epoch=epoch + 1)
                break
    log.write("best", epoch=best_epoch, val_weighted_f1=best_f1)
    ckpt = Checkpoint(best_state, vocab, labels, cfg, best_epoch, best_f1)
    ckpt.history = history
    ckpt.log_lines = log.lines
    return ckpt
