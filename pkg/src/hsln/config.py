"""Model/training configuration, presets and flat ``key = value`` files."""

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .context import ContextConfig
from .encoder import EncoderConfig
from .errors import ContractError

ABLATIONS = ("context", "seq-opt", "dropout-reg", "attention")


@dataclass
class ModelConfig:
    d_w: int = 200
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    context: ContextConfig = field(default_factory=ContextConfig)
    use_crf: bool = True
    crf_boundary: bool = False
    trainable_embeddings: bool = False


@dataclass
class TrainConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    lr0: float = 0.003
    lr_decay: float = 0.9
    epochs: int = 30
    patience: int = 5
    dropout: float = 0.5
    beta: float = 0.01
    use_el_reg: bool = True
    batch_size: int = 16
    clip_norm: float = 0.0
    min_count: int = 1
    seed: int = 0
    lowercase: bool = True
    normalize_digits: bool = False

    def __post_init__(self):
        if not 0.0 <= self.dropout < 1.0:
            raise ContractError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.beta < 0:
            raise ContractError("beta must be >= 0")
        if self.lr0 <= 0 or not 0.0 < self.lr_decay <= 1.0:
            raise ContractError("need lr0 > 0 and 0 < lr_decay <= 1")
        if self.epochs < 0 or self.batch_size < 1:
            raise ContractError("need epochs >= 0 and batch_size >= 1")

    @property
    def effective_beta(self):
        return self.beta if self.use_el_reg and self.dropout > 0 else 0.0

    def ablations(self):
        m = self.model
        out = []
        if not m.context.use_context:
            out.append("context")
        if not m.use_crf:
            out.append("seq-opt")
        if not self.use_el_reg:
            out.append("dropout-reg")
        if m.encoder.pooling != "attention":
            out.append("attention")
        return out


def apply_ablation(cfg, name):
    """Switch off one component: context, seq-opt, dropout-reg or attention."""
    if name == "context":
        cfg.model.context.use_context = False
    elif name == "seq-opt":
        cfg.model.use_crf = False
    elif name == "dropout-reg":
        cfg.use_el_reg = False
    elif name == "attention":
        cfg.model.encoder.pooling = "last_state_or_maxpool"
    else:
        raise ContractError(f"unknown ablation {name!r}; choose from {ABLATIONS}")
    return cfg


# -- flat key/value mapping -----------------------------------------------------

def _sections(cfg):
    return {"train": cfg, "model": cfg.model, "encoder": cfg.model.encoder,
            "context": cfg.model.context}


def _leaf_fields(obj):
    return [f for f in dataclasses.fields(obj) if not dataclasses.is_dataclass(getattr(obj, f.name))]


def to_flat(cfg):
    """Ordered ``{key: string value}``; keys are unique across sections."""
    flat = {}
    for obj in _sections(cfg).values():
        for f in _leaf_fields(obj):
            flat[f.name] = format_value(getattr(obj, f.name))
    return flat


def format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def _coerce(kind, text, key):
    try:
        if kind is bool:
            low = text.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if kind is tuple:
            return tuple(int(x) for x in text.split(",") if x.strip())
        return kind(text.strip())
    except ValueError:
        raise ContractError(f"bad value for {key}: {text!r}") from None


def set_value(cfg, key, text):
    for obj in _sections(cfg).values():
        for f in _leaf_fields(obj):
            if f.name == key:
                current = getattr(obj, key)
                setattr(obj, key, _coerce(type(current), text, key) if isinstance(text, str) else text)
                return cfg
    raise ContractError(f"unknown configuration key {key!r}")


def validate(cfg):
    """Re-run field checks after in-place edits."""
    EncoderConfig(**dataclasses.asdict(cfg.model.encoder))
    ContextConfig(**dataclasses.asdict(cfg.model.context))
    TrainConfig(**{f.name: getattr(cfg, f.name) for f in dataclasses.fields(cfg)})
    return cfg


def from_flat(flat, base=None):
    cfg = copy_config(base) if base is not None else TrainConfig()
    for k, v in flat.items():
        set_value(cfg, k, v)
    return validate(cfg)


def copy_config(cfg):
    return TrainConfig(
        model=ModelConfig(
            encoder=dataclasses.replace(cfg.model.encoder),
            context=dataclasses.replace(cfg.model.context),
            **{f.name: getattr(cfg.model, f.name) for f in _leaf_fields(cfg.model)}),
        **{f.name: getattr(cfg, f.name) for f in _leaf_fields(cfg)})


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    flat = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ContractError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        flat[key.strip()] = value.strip()
    return flat


def write_config_file(cfg, path):
    text = "".join(f"{k} = {v}\n" for k, v in to_flat(cfg).items())
    Path(path).write_text(text, encoding="utf-8")


# -- presets ----------------------------------------------------------------------

def _preset(d_w, enc, ctx, dropout, beta, epochs=30, batch_size=16):
    return TrainConfig(model=ModelConfig(d_w=d_w, encoder=enc, context=ctx),
                       dropout=dropout, beta=beta, epochs=epochs, batch_size=batch_size)


def preset(name):
    """Named configurations.

    The four dataset presets carry the published grid-search values; the
    ``tiny-*`` presets are small enough for CPU tests. The width of the
    feed-forward hidden layer is not published and is set equal to d_hd.
    """
    builders = {
        "pubmed-rnn": lambda: _preset(
            200, EncoderConfig("rnn", "lstm", d_hs=200, d_a=200, r=15),
            ContextConfig(d_hd=200, ffn_hidden=200), dropout=0.5, beta=0.01),
        "pubmed-cnn": lambda: _preset(
            200, EncoderConfig("cnn", windows=(2, 3, 4, 5), d_c=200, d_a=100, r=1),
            ContextConfig(d_hd=200, ffn_hidden=200), dropout=0.5, beta=0.001),
        "nicta-rnn": lambda: _preset(
            200, EncoderConfig("rnn", "gru", d_hs=200, d_a=250, r=5),
            ContextConfig(d_hd=200, ffn_hidden=200), dropout=0.6, beta=0.01),
        "nicta-cnn": lambda: _preset(
            200, EncoderConfig("cnn", windows=(2, 3, 4, 5), d_c=150, d_a=75, r=4),
            ContextConfig(d_hd=300, ffn_hidden=300), dropout=0.6, beta=0.01),
        "tiny-rnn": lambda: _preset(
            32, EncoderConfig("rnn", "lstm", d_hs=24, d_a=24, r=2),
            ContextConfig(d_hd=24, ffn_hidden=24), dropout=0.2, beta=0.01),
        "tiny-cnn": lambda: _preset(
            32, EncoderConfig("cnn", windows=(2, 3), d_c=24, d_a=24, r=2),
            ContextConfig(d_hd=24, ffn_hidden=24), dropout=0.2, beta=0.01),
    }
    if name not in builders:
        raise ContractError(f"unknown preset {name!r}; choose from {sorted(builders)}")
    return builders[name]()


PRESETS = ("pubmed-rnn", "pubmed-cnn", "nicta-rnn", "nicta-cnn", "tiny-rnn", "tiny-cnn")


def count_parameters(mcfg, n_labels, vocab_size=0):
    """Trainable parameter count predicted from the configuration alone.

    rnn encoder: 2 * g * d_hs * (d_w + d_hs + 1), g = 4 (lstm) or 3 (gru)
    cnn encoder: sum over windows of d_c * (w * d_w + 1)
    attention:   d_a * d_out + d_a + r * d_a
    context:     8 * d_hd * (d_s + d_hd + 1), or a d_s x 2 d_hd projection
                 when switched off and d_s != 2 d_hd
    head:        2 d_hd * f + f + f * l + l
    crf:         l * l (+ 2 l with boundary scores)
    """
    enc, ctx = mcfg.encoder, mcfg.context
    total = 0
    if enc.kind == "rnn":
        gates = 4 if enc.rnn_cell == "lstm" else 3
        total += 2 * gates * enc.d_hs * (mcfg.d_w + enc.d_hs + 1)
    else:
        total += sum(enc.d_c * (w * mcfg.d_w + 1) for w in enc.windows)
    if enc.pooling == "attention":
        total += enc.d_a * enc.d_out + enc.d_a + enc.r * enc.d_a
    d_s = enc.sentence_dim
    if ctx.use_context:
        total += 8 * ctx.d_hd * (d_s + ctx.d_hd + 1)
    elif d_s != 2 * ctx.d_hd:
        total += d_s * 2 * ctx.d_hd
    total += 2 * ctx.d_hd * ctx.ffn_hidden + ctx.ffn_hidden + ctx.ffn_hidden * n_labels + n_labels
    if mcfg.use_crf:
        total += n_labels * n_labels + (2 * n_labels if mcfg.crf_boundary else 0)
    if mcfg.trainable_embeddings:
        total += mcfg.d_w * vocab_size
    return total
