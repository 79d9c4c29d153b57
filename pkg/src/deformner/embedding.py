"""Word embedding tables and the character-level CNN word feature extractor."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .data import EncodedSentence, Vocab

# added to invalid (padding-only) windows before max-pooling; tanh never goes below -1
_WINDOW_PENALTY = -3.0


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def read_embedding_tokens(path: str | Path) -> set[str]:
    tokens = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split(" ", 1)
            if parts[0]:
                tokens.add(parts[0])
    return tokens


def load_pretrained(path: str | Path, vocab: Vocab, dim: int, seed=0) -> tuple[Tensor, int]:
    """Embedding table for ``vocab`` seeded from a GloVe-style text file.

    Rows of tokens present in the file are copied verbatim; all other rows are
    drawn from N(0, 1/dim).  Returns the table and the number of copied rows.
    """
    rng = _rng(seed)
    table = rng.normal(0.0, np.sqrt(1.0 / dim), size=(len(vocab), dim))
    found = np.zeros(len(vocab), dtype=bool)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").rstrip().split(" ")
            if not parts[0]:
                continue
            if lineno == 1 and len(parts) == 2 and parts[0].isdigit() and parts[1].isdigit():
                continue  # word2vec-style "count dim" header
            if len(parts) - 1 != dim:
                raise ValueError(f"{path}:{lineno}: expected {dim} values, found {len(parts) - 1}")
            idx = vocab.token_index.get(parts[0])
            if idx is not None and not found[idx]:
                table[idx] = np.array(parts[1:], dtype=np.float64)
                found[idx] = True
    return ag.parameter(table, name="word_emb"), int(found.sum())


@dataclass
class CharCnnParams:
    """Character table, a width-``window`` filter bank and per-filter bias.

    ``filters`` is laid out as ``[window * char_dim, n_filters]``; row
    ``t * char_dim + c`` multiplies component ``c`` of the ``t``-th character
    in the window.
    """

    embedding: Tensor
    filters: Tensor
    bias: Tensor
    window: int

    @property
    def n_filters(self) -> int:
        return self.filters.shape[1]

    @property
    def char_dim(self) -> int:
        return self.embedding.shape[1]

    @classmethod
    def init(cls, n_chars: int, char_dim: int = 30, n_filters: int = 30, window: int = 3,
             seed=0, char_std: float = 1.0) -> "CharCnnParams":
        from .train import xavier_init

        if n_filters < 1 or window < 1:
            raise ValueError("filter count and window size must be positive")
        rng = _rng(seed)
        emb = rng.normal(0.0, char_std, size=(n_chars, char_dim))
        return cls(
            embedding=ag.parameter(emb, name="char_emb"),
            filters=xavier_init((window * char_dim, n_filters), rng, name="char_cnn.W"),
            bias=xavier_init((n_filters,), rng, name="char_cnn.b"),
            window=window,
        )

    def parameters(self) -> dict[str, Tensor]:
        return {"char_emb": self.embedding, "char_cnn.W": self.filters, "char_cnn.b": self.bias}


def char_features_batch(words: Sequence[np.ndarray], params: CharCnnParams) -> Tensor:
    """Max-pooled tanh convolution features for each word: ``[len(words), n_filters]``.

    Each word is zero-padded by ``window - 1`` positions split around it, so a
    word of length m yields m windows (at least one, even for an empty word).
    """
    w, dc = params.window, params.char_dim
    left = (w - 1) // 2
    n = len(words)
    L = max(1, max(len(c) for c in words))
    ids = np.zeros((n, L + w - 1), dtype=np.int64)
    present = np.zeros((n, L + w - 1, 1))
    penalty = np.full((n, L, 1), _WINDOW_PENALTY)
    for r, chars in enumerate(words):
        m = len(chars)
        ids[r, left:left + m] = chars
        present[r, left:left + m] = 1.0
        penalty[r, :max(m, 1)] = 0.0

    emb = ag.take_rows(params.embedding, ids) * present            # [n, L+w-1, dc]
    windows = np.arange(L)[:, None] + np.arange(w)[None, :]        # [L, w]
    x = emb[:, windows].reshape(n * L, w * dc)
    conv = ag.tanh(x @ params.filters + params.bias).reshape(n, L, params.n_filters)
    return ag.max_(conv + penalty, axis=1)


def char_features(chars: np.ndarray, params: CharCnnParams) -> Tensor:
    """Feature vector ``[n_filters]`` for a single word."""
    return char_features_batch([np.asarray(chars, dtype=np.int64)], params)[0]


def embed_sentence(sentence: EncodedSentence, words: Tensor, chars: CharCnnParams | None) -> Tensor:
    """Per-token word vector, concatenated with char-CNN features when enabled."""
    word_vecs = ag.take_rows(words, sentence.words)
    if chars is None:
        return word_vecs
    return ag.concat([word_vecs, char_features_batch(sentence.chars, chars)], axis=1)
