"""The full tagger: embeddings, stacked BiLSTMs with deformable connections, CRF."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autograd import Tensor
from .config import ModelConfig
from .crf import CrfParams, decode_masks, emission_scores, nll, viterbi
from .data import EncodedSentence, LabelScheme, Sentence, Vocab, encode_sentence
from .deform import OffsetPredictor, deformable_connect, wire_structure
from .embedding import CharCnnParams, embed_sentence
from .encoder import BiLstmLayer
from .train import apply_dropout, embedding_init


@dataclass
class Forward:
    emissions: Tensor
    offsets: list[np.ndarray]  # one [n, k] array per deformable connection


class Tagger:
    """Deformable stacked BiLSTM-CRF.

    Parameters are created in a fixed order from one generator seeded with
    ``seed``, so equal seeds give bit-identical models.
    """

    def __init__(self, config: ModelConfig, vocab: Vocab, scheme: LabelScheme, seed: int = 0,
                 word_table: Tensor | None = None):
        self.config = config
        self.vocab = vocab
        self.scheme = scheme
        self.wiring = wire_structure(config.structure, config.layers)
        rng = np.random.default_rng(seed)

        if word_table is None:
            word_table = embedding_init(config.word_dim, rng, rows=len(vocab))
        if word_table.shape != (len(vocab), config.word_dim):
            raise ValueError(f"word table {word_table.shape} does not match vocab/word_dim")
        self.words = word_table
        self.chars = None
        width = config.word_dim
        if config.use_chars:
            self.chars = CharCnnParams.init(len(vocab.chars), config.char_dim, config.char_filters,
                                            config.char_window, rng, config.char_init_std)
            width += config.char_filters

        self.layers: list[BiLstmLayer] = []
        self.predictors: list[OffsetPredictor] = []
        k = config.offsets
        for l in range(config.layers):
            self.layers.append(BiLstmLayer.init(width, config.hidden, rng, f"bilstm{l}"))
            width = 2 * config.hidden
            if l in self.wiring.between or (l == config.layers - 1 and self.wiring.before_decoder):
                self.predictors.append(OffsetPredictor.init(
                    width, config.offset_mode, k, config.window, rng, name=f"offset{len(self.predictors)}"))
                width *= k
        self.crf = CrfParams.init(width, len(scheme), rng)

        trans_mask, start_mask = decode_masks(
            len(scheme), scheme.pad_index,
            scheme.allowed_transitions() if config.bioes_constraints else None,
            scheme.allowed_starts() if config.bioes_constraints else None)
        self._trans_mask, self._start_mask = trans_mask, start_mask

    # -- parameters -------------------------------------------------------

    def parameters(self) -> dict[str, Tensor]:
        params = {"word_emb": self.words}
        if self.chars is not None:
            params.update(self.chars.parameters())
        for l, layer in enumerate(self.layers):
            params.update(layer.parameters(f"bilstm{l}"))
        for c, pred in enumerate(self.predictors):
            params[f"offset{c}.weight"] = pred.weight
        params.update(self.crf.parameters())
        return params

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self.parameters().items()}

    def load_state_dict(self, state: dict[str, np.ndarray], strict: bool = True) -> None:
        params = self.parameters()
        if strict and set(state) != set(params):
            missing = sorted(set(params) - set(state))
            extra = sorted(set(state) - set(params))
            raise KeyError(f"state mismatch; missing {missing}, unexpected {extra}")
        for name, value in state.items():
            if name not in params:
                continue
            if params[name].shape != value.shape:
                raise ValueError(f"{name}: shape {value.shape} != {params[name].shape}")
            params[name].data[...] = value

    # -- computation ------------------------------------------------------

    def encode(self, sentence: Sentence, with_gold: bool = True) -> EncodedSentence:
        scheme = self.scheme if with_gold else None
        return encode_sentence(sentence, self.vocab, scheme, self.config.normalize_digits)

    def forward(self, sentence: EncodedSentence, training: bool = False, rng=None) -> Forward:
        rate = self.config.dropout if training else 0.0
        x = apply_dropout(embed_sentence(sentence, self.words, self.chars), rate, rng, training)
        offsets = []
        connection = 0
        for l, layer in enumerate(self.layers):
            h = apply_dropout(layer(x), rate, rng, training)
            deform_here = l in self.wiring.between or (
                l == len(self.layers) - 1 and self.wiring.before_decoder)
            if deform_here:
                h, o = deformable_connect(h, self.predictors[connection])
                offsets.append(o)
                connection += 1
            x = h
        return Forward(emission_scores(x, self.crf), offsets)

    def loss(self, sentence: EncodedSentence, training: bool = False, rng=None) -> Tensor:
        if sentence.gold is None:
            raise ValueError("sentence has no gold labels")
        scores = self.forward(sentence, training, rng).emissions
        return nll(scores, self.crf.transitions, self.crf.start, sentence.gold)

    def decode(self, sentence: EncodedSentence) -> list[int]:
        scores = self.forward(sentence).emissions
        path, _ = viterbi(scores.data, self.crf.transitions.data + self._trans_mask,
                          self.crf.start.data + self._start_mask)
        return path

    def predict(self, sentences: list[Sentence]) -> list[list[str]]:
        return [self.scheme.decode(self.decode(self.encode(s, with_gold=False))) for s in sentences]

    def record_offsets(self, sentences: list[Sentence]) -> list[list[np.ndarray]]:
        """Per sentence, the raw offsets of every deformable connection."""
        return [self.forward(self.encode(s, with_gold=False)).offsets for s in sentences]
