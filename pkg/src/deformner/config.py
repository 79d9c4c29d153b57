"""Model and optimization settings, plus two preset configurations."""
from __future__ import annotations

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class ModelConfig:
    word_dim: int = 100
    use_chars: bool = True
    char_dim: int = 30
    char_filters: int = 30
    char_window: int = 3
    char_init_std: float = 1.0
    hidden: int = 200  # per direction
    layers: int = 2
    structure: int = 3  # 0 vanilla, 1 between BiLSTM layers, 2 before CRF, 3 both
    offsets: int = 3
    window: int = 3
    offset_mode: str = "wide"
    dropout: float = 0.5
    normalize_digits: bool = True
    bioes_constraints: bool = False

    def __post_init__(self):
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.structure not in (0, 1, 2, 3):
            raise ValueError("structure must be 0, 1, 2 or 3")
        if self.offset_mode not in ("single", "multi", "wide"):
            raise ValueError(f"unknown offset mode {self.offset_mode!r}")
        if self.offset_mode == "single" and self.offsets != 1:
            raise ValueError("single offset mode requires offsets=1")
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError("offset window must be odd and positive")
        if min(self.word_dim, self.hidden, self.layers, self.offsets) < 1:
            raise ValueError("sizes must be positive")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 8
    lr: float = 0.005
    momentum: float = 0.9
    l2: float = 1e-8
    clip: float | None = 5.0
    lr_decay: float = 0.0  # lr / (1 + decay * epoch); 0 keeps it constant
    seed: int = 1

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.lr < 0:
            raise ValueError("learning rate must be non-negative")


def conll2003() -> tuple[ModelConfig, TrainConfig]:
    return (ModelConfig(hidden=256, layers=1, structure=2),
            TrainConfig(batch_size=10, lr=0.008))


def ontonotes() -> tuple[ModelConfig, TrainConfig]:
    return (ModelConfig(hidden=200, layers=2, structure=3),
            TrainConfig(batch_size=8, lr=0.005))


def override(cfg, **changes):
    """Copy of ``cfg`` with those of ``changes`` that name one of its fields applied."""
    known = {f.name for f in fields(cfg)}
    return replace(cfg, **{k: v for k, v in changes.items() if k in known})
