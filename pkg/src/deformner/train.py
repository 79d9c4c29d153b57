"""Initialization, dropout, SGD with momentum and the epoch loop."""
from __future__ import annotations

import copy
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .config import TrainConfig

logger = logging.getLogger(__name__)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def xavier_init(shape, seed=0, *, fan_in: int | None = None, fan_out: int | None = None,
                name: str | None = None) -> Tensor:
    """Xavier-normal weights, N(0, 2 / (fan_in + fan_out)); 1-d shapes are biases and start at zero.

    For 2-d shapes the fans are ``shape``; pass them explicitly for anything else.
    """
    shape = tuple(int(s) for s in np.atleast_1d(shape))
    if len(shape) == 1:
        return ag.parameter(np.zeros(shape), name=name)
    if fan_in is None or fan_out is None:
        if len(shape) != 2:
            raise ValueError(f"pass fan_in/fan_out for {len(shape)}-d shape {shape}")
        fan_in, fan_out = shape
    std = np.sqrt(2.0 / (fan_in + fan_out))
    return ag.parameter(_rng(seed).normal(0.0, std, size=shape), name=name)


def embedding_init(dim: int, seed=0, rows: int | None = None, name: str | None = None) -> Tensor:
    """N(0, 1/dim) samples: one vector, or a ``[rows, dim]`` table."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    size = dim if rows is None else (rows, dim)
    return ag.parameter(_rng(seed).normal(0.0, np.sqrt(1.0 / dim), size=size), name=name)


def apply_dropout(x: Tensor, rate: float, seed=None, training: bool = True) -> Tensor:
    """Inverted dropout; the identity at inference or when ``rate`` is 0."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    if not training or rate == 0.0:
        return x
    keep = _rng(seed).random(x.shape) >= rate
    return x * (keep / (1.0 - rate))


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class OptimizerState:
    lr: float
    momentum: float = 0.9
    l2: float = 1e-8
    clip: float | None = 5.0
    velocity: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: Mapping[str, Tensor], config: TrainConfig) -> "OptimizerState":
        state = cls(lr=config.lr, momentum=config.momentum, l2=config.l2, clip=config.clip)
        for name, p in params.items():
            if name in state.velocity:
                raise ValueError(f"parameter {name!r} registered twice")
            state.velocity[name] = np.zeros_like(p.data)
        return state


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_global_norm(grads: Mapping[str, np.ndarray], max_norm: float) -> dict[str, np.ndarray]:
    norm = global_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return dict(grads)
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}


def sgd_momentum_step(params: Mapping[str, Tensor], grads: Mapping[str, np.ndarray],
                      state: OptimizerState) -> Mapping[str, Tensor]:
    """In-place update ``v <- mu v - lr (g + 2 lambda theta)``; ``theta <- theta + v``.

    ``grads`` may omit parameters that received no gradient (treated as zero).
    Gradients are clipped by global norm first when ``state.clip`` is set.
    """
    for name, g in grads.items():
        if g.shape != params[name].shape:
            raise ValueError(f"gradient for {name!r} has shape {g.shape}, expected {params[name].shape}")
    if state.clip:
        grads = clip_global_norm(grads, state.clip)
    for name, p in params.items():
        g = grads.get(name)
        g = np.zeros_like(p.data) if g is None else g
        if state.l2:
            g = g + 2.0 * state.l2 * p.data
        v = state.velocity.get(name)
        if v is None:
            v = state.velocity[name] = np.zeros_like(p.data)
        v *= state.momentum
        v -= state.lr * g
        p.data += v
    return params


# ---------------------------------------------------------------------------
# epoch loop


class TrainingError(RuntimeError):
    pass


@dataclass
class EpochStats:
    epoch: int
    mean_loss: float
    seconds: float
    step_losses: list[float]
    dev_f1: float | None = None

    def log_line(self) -> str:
        dev = "" if self.dev_f1 is None else f"{self.dev_f1:.6f}"
        return f"{self.epoch}\t{self.mean_loss:.6f}\t{self.seconds:.3f}\t{dev}"


def make_batches(n: int, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    order = rng.permutation(n)
    return [order[i:i + batch_size] for i in range(0, n, batch_size)]


def batch_step(model, batch: Sequence, state: OptimizerState, rng: np.random.Generator,
               batch_id: int = 0) -> float:
    """Mean loss over ``batch``, one backward pass, one optimizer step."""
    params = model.parameters()
    ag.zero_grad(params.values())
    losses = [model.loss(s, training=True, rng=rng) for s in batch]
    loss = losses[0]
    for extra in losses[1:]:
        loss = loss + extra
    loss = loss / len(losses)
    value = loss.item()
    if not np.isfinite(value):
        norms = {k: float(np.linalg.norm(p.data)) for k, p in params.items()}
        raise TrainingError(f"non-finite loss {value} at batch {batch_id}; parameter norms {norms}")
    ag.backward(loss)
    grads = {k: p.grad for k, p in params.items() if p.grad is not None}
    sgd_momentum_step(params, grads, state)
    return value


def train_epoch(model, sentences: Sequence, config: TrainConfig, state: OptimizerState,
                epoch: int = 0) -> EpochStats:
    """One shuffled pass over ``sentences`` (encoded) in mini-batches."""
    if not sentences:
        raise ValueError("empty training set")
    rng = np.random.default_rng([config.seed, epoch])
    state.lr = config.lr / (1.0 + config.lr_decay * epoch)
    t0 = time.perf_counter()
    step_losses, total = [], 0.0
    for b, idx in enumerate(make_batches(len(sentences), config.batch_size, rng)):
        value = batch_step(model, [sentences[i] for i in idx], state, rng, b)
        step_losses.append(value)
        total += value * len(idx)
    return EpochStats(epoch, total / len(sentences), time.perf_counter() - t0, step_losses)


def fit(model, train: Sequence, config: TrainConfig, dev: Sequence | None = None,
        log: Callable[[str], None] | None = None,
        stop: Callable[[EpochStats], bool] | None = None) -> list[EpochStats]:
    """Train for ``config.epochs`` epochs, keeping the best dev-F1 parameters.

    ``dev`` holds raw :class:`~deformner.data.Sentence` objects with labels.
    Without a dev set the last epoch's parameters are kept.  ``stop`` may end
    training early after any epoch.
    """
    from .evaluation import evaluate_model

    state = OptimizerState.for_params(model.parameters(), config)
    history: list[EpochStats] = []
    best_f1, best_params = -1.0, None
    for epoch in range(config.epochs):
        stats = train_epoch(model, train, config, state, epoch)
        if dev:
            stats.dev_f1 = evaluate_model(model, dev).overall.f1
            if stats.dev_f1 > best_f1:
                best_f1, best_params = stats.dev_f1, copy.deepcopy(model.state_dict())
        history.append(stats)
        logger.info("epoch %d loss %.4f dev_f1 %s", epoch, stats.mean_loss, stats.dev_f1)
        if log is not None:
            log(stats.log_line())
        if stop is not None and stop(stats):
            break
    if best_params is not None:
        model.load_state_dict(best_params)
    return history
