"""Linear-chain CRF: emission scoring, forward algorithm, likelihood and Viterbi.

All scores live in log space.  A sequence ``y`` of length n scores

    start[y_0] + s_0[y_0] + sum_{i>=1} (trans[y_{i-1}, y_i] + s_i[y_i])

where ``s_i`` are per-position emission scores.  The explicit start vector
lets the first token contribute its own emission.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import Tensor


@dataclass
class CrfParams:
    W: Tensor  # [d_in, T]
    b: Tensor  # [T]
    transitions: Tensor  # [T, T], from -> to
    start: Tensor  # [T]

    def __post_init__(self):
        T = self.W.shape[1]
        if self.b.shape != (T,) or self.transitions.shape != (T, T) or self.start.shape != (T,):
            raise ValueError("CRF parameter shapes disagree on the tag count")

    @property
    def n_tags(self) -> int:
        return self.W.shape[1]

    @classmethod
    def init(cls, input_dim: int, n_tags: int, seed=0) -> "CrfParams":
        from .train import xavier_init

        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return cls(
            W=xavier_init((input_dim, n_tags), rng, name="crf.W"),
            b=xavier_init((n_tags,), rng, name="crf.b"),
            transitions=xavier_init((n_tags, n_tags), rng, name="crf.trans"),
            start=xavier_init((n_tags,), rng, name="crf.start"),
        )

    def parameters(self) -> dict[str, Tensor]:
        return {"crf.W": self.W, "crf.b": self.b, "crf.trans": self.transitions, "crf.start": self.start}


def emission_scores(H: Tensor, params: CrfParams) -> Tensor:
    if H.ndim != 2 or H.shape[1] != params.W.shape[0]:
        raise ValueError(f"emission scorer expects width {params.W.shape[0]}, got {H.shape}")
    return H @ params.W + params.b


def _check_labels(labels, n: int, T: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n,):
        raise ValueError(f"expected {n} labels, got {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= T):
        raise IndexError(f"label index out of range for {T} tags")
    return labels


def sequence_score(scores: Tensor, transitions: Tensor, start: Tensor, labels) -> Tensor:
    """Unnormalized log score of one label sequence."""
    n, T = scores.shape
    if n < 1:
        raise ValueError("empty sequence")
    y = _check_labels(labels, n, T)
    total = start[y[0]] + scores[np.arange(n), y].sum()
    if n > 1:
        total = total + transitions[y[:-1], y[1:]].sum()
    return total


def log_partition(scores: Tensor, transitions: Tensor, start: Tensor) -> Tensor:
    """Log of the summed exponentiated score over all ``T**n`` sequences (forward algorithm)."""
    n, T = scores.shape
    if n < 1:
        raise ValueError("empty sequence")
    alpha = start + scores[0]
    for i in range(1, n):
        alpha = ag.logsumexp(alpha.reshape(T, 1) + transitions, axis=0) + scores[i]
    return ag.logsumexp(alpha, axis=0)


def nll(scores: Tensor, transitions: Tensor, start: Tensor, gold) -> Tensor:
    """Negative log-likelihood of the gold sequence."""
    return log_partition(scores, transitions, start) - sequence_score(scores, transitions, start, gold)


def viterbi(scores, transitions, start) -> tuple[list[int], float]:
    """Best label sequence and its score; ties go to the lowest tag index.

    Accepts tensors or arrays; ``-inf`` entries forbid a start or transition.
    """
    s = np.asarray(getattr(scores, "data", scores), dtype=np.float64)
    trans = np.asarray(getattr(transitions, "data", transitions), dtype=np.float64)
    st = np.asarray(getattr(start, "data", start), dtype=np.float64)
    n, T = s.shape
    if n < 1:
        raise ValueError("empty sequence")
    delta = st + s[0]
    back = np.zeros((n, T), dtype=np.int64)
    for i in range(1, n):
        cand = delta[:, None] + trans
        back[i] = np.argmax(cand, axis=0)
        delta = cand[back[i], np.arange(T)] + s[i]
    best = int(np.argmax(delta))
    path = [best]
    for i in range(n - 1, 0, -1):
        best = int(back[i, best])
        path.append(best)
    path.reverse()
    return path, float(np.max(delta))


def decode_masks(n_tags: int, pad_index: int | None, allowed: np.ndarray | None = None,
                 allowed_start: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Additive ``(transition, start)`` masks: 0 where permitted, ``-inf`` elsewhere.

    The padding tag is always excluded; ``allowed``/``allowed_start`` add
    optional scheme constraints.
    """
    trans = np.zeros((n_tags, n_tags))
    start = np.zeros(n_tags)
    if allowed is not None:
        trans[~allowed] = -np.inf
    if allowed_start is not None:
        start[~allowed_start] = -np.inf
    if pad_index is not None:
        trans[pad_index, :] = -np.inf
        trans[:, pad_index] = -np.inf
        start[pad_index] = -np.inf
    return trans, start
