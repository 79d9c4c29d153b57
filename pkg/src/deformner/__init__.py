"""Deformable stacked BiLSTM-CRF named entity tagger on a small numpy autodiff core."""

from .config import ModelConfig, TrainConfig
from .data import LabelScheme, Sentence, Vocab, build_vocab, parse_conll, to_bioes
from .evaluation import evaluate, extract_spans, offset_kde, prf1
from .model import Tagger

__all__ = [
    "LabelScheme",
    "ModelConfig",
    "Sentence",
    "Tagger",
    "TrainConfig",
    "Vocab",
    "build_vocab",
    "evaluate",
    "extract_spans",
    "offset_kde",
    "parse_conll",
    "prf1",
    "to_bioes",
]

__version__ = "0.1.0"
