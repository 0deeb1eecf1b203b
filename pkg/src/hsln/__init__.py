"""Hierarchical sequential labeling network for classifying the sentences
of scientific abstracts, written on a small numpy autodiff engine."""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import ModelConfig, TrainConfig, apply_ablation, preset
from .data import Abstract, Corpus, LabelSet, parse_rct, write_rct
from .metrics import evaluate, format_report
from .model import HSLN
from .trainer import train

__version__ = "0.1.0"

__all__ = [
    "Abstract", "Checkpoint", "Corpus", "HSLN", "LabelSet", "ModelConfig", "TrainConfig",
    "apply_ablation", "evaluate", "format_report", "load_checkpoint", "parse_rct", "preset",
    "save_checkpoint", "train", "write_rct",
]
