"""Deformable connections between stacked layers.

Each position of the upper layer reads the lower layer at a continuous
position ``i + o``; the offset ``o`` is a learned function of the lower
layer's hidden states and the read is a bilinear (tent-kernel) interpolation
between the two nearest positions, so the whole thing is differentiable in
both the hidden states and the offsets.

Read positions are clamped into the sentence before the kernel is applied,
which keeps the interpolation weights summing to one at the edges.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import Tensor

MODES = ("single", "multi", "wide")


def bilinear_mask(target: float, n: int) -> np.ndarray:
    """Interpolation weights ``max(0, 1 - |target - j|)`` for ``j = 1..n``.

    Positions are numbered from 1 here, as in the kernel's usual statement;
    ``target`` is clamped into ``[1, n]`` first.
    """
    if n < 1:
        raise ValueError("sequence length must be positive")
    t = min(max(float(target), 1.0), float(n))
    return np.maximum(0.0, 1.0 - np.abs(t - np.arange(1, n + 1)))


def interpolate(H: Tensor, offsets: Tensor) -> Tensor:
    """Gather ``k`` deformable inputs per position: ``[n, d]`` x ``[n, k]`` -> ``[n, k * d]``.

    Block ``s`` of row ``i`` is ``sum_j g(i + offsets[i, s], j) * H[j]``.  The
    kernel's derivative is taken as 0 where it has a kink (integer distance)
    and the clamp passes no gradient once a read position hits the boundary.
    """
    n, d = H.shape
    if offsets.ndim != 2 or offsets.shape[0] != n:
        raise ValueError(f"offsets must be [{n}, k], got {offsets.shape}")
    k = offsets.shape[1]
    raw = np.arange(n)[:, None] + offsets.data                     # 0-based read positions
    target = np.clip(raw, 0.0, n - 1.0)
    diff = target[:, :, None] - np.arange(n)[None, None, :]        # [n, k, n]
    weights = np.maximum(0.0, 1.0 - np.abs(diff))
    Hd = H.data
    out = (weights @ Hd).reshape(n, k * d)

    def vjp(g):
        g = g.reshape(n, k, d)
        dH = np.einsum("isj,isd->jd", weights, g)
        inside = np.abs(diff) < 1.0
        slope = np.where(inside & (diff != 0.0), -np.sign(diff), 0.0)
        dtarget = np.einsum("isj,isj->is", slope, g @ Hd.T)
        dtarget *= (raw > 0.0) & (raw < n - 1.0)
        return dH, dtarget

    return ag.apply_op(out, (H, offsets), vjp)


def deform_gather(H: Tensor, i: int, o) -> Tensor:
    """Deformable input for the single (0-based) position ``i`` and offset ``o``."""
    n = H.shape[0]
    if not 0 <= i < n:
        raise IndexError(f"position {i} outside sequence of length {n}")
    o = ag.as_tensor(o).reshape(1, 1)
    # pad the offset into a full [n, 1] column; only row i is used
    column = ag.concat([ag.Tensor(np.zeros((i, 1))), o, ag.Tensor(np.zeros((n - i - 1, 1)))], axis=0)
    return interpolate(H, column)[i]


# ---------------------------------------------------------------------------
# offset predictors


def predict_offset_single(h: Tensor, v: Tensor) -> Tensor:
    return ag.dot(v, h)


def predict_offsets_multi(h: Tensor, V: Tensor) -> Tensor:
    if V.ndim != 2 or V.shape[1] != h.shape[0]:
        raise ValueError(f"offset matrix {V.shape} does not match hidden size {h.shape}")
    return V @ h


def predict_offsets_wide(H: Tensor, W: Tensor) -> Tensor:
    """Centered 1-D convolution over positions: ``[n, d]`` with ``W[w, k, d]`` -> ``[n, k]``.

    ``H`` is zero-padded by ``(w - 1) / 2`` rows on both ends.
    """
    if W.ndim != 3 or W.shape[2] != H.shape[1]:
        raise ValueError(f"offset filter {W.shape} does not match hidden size {H.shape[1]}")
    w, k, d = W.shape
    if w % 2 == 0:
        raise ValueError("offset window must be odd")
    n = H.shape[0]
    half = (w - 1) // 2
    pad = ag.Tensor(np.zeros((half, d)))
    padded = ag.concat([pad, H, pad], axis=0) if half else H
    windows = np.arange(n)[:, None] + np.arange(w)[None, :]
    x = padded[windows].reshape(n, w * d)
    filt = W.transpose(0, 2, 1).reshape(w * d, k)
    return x @ filt


@dataclass
class OffsetPredictor:
    """Offset parameters for one deformable connection.

    ``weight`` is ``v[d]`` (single), ``V[k, d]`` (multi) or ``W[w, k, d]`` (wide).
    """

    mode: str
    weight: Tensor

    def __post_init__(self):
        expected = {"single": 1, "multi": 2, "wide": 3}.get(self.mode)
        if expected is None:
            raise ValueError(f"unknown offset mode {self.mode!r}")
        if self.weight.ndim != expected:
            raise ValueError(f"{self.mode} predictor needs a {expected}-d weight, got {self.weight.shape}")
        if self.mode == "wide" and self.weight.shape[0] % 2 == 0:
            raise ValueError("offset window must be odd")

    @classmethod
    def init(cls, dim: int, mode: str = "wide", k: int = 3, window: int = 3, seed=0,
             name: str = "offset") -> "OffsetPredictor":
        from .train import xavier_init

        if k < 1 or window < 1:
            raise ValueError("k and window must be positive")
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        if mode == "single":
            if k != 1:
                raise ValueError("single mode predicts exactly one offset")
            w = xavier_init((dim, 1), rng)
            weight = ag.parameter(w.data[:, 0], name=name)
        elif mode == "multi":
            weight = xavier_init((k, dim), rng, fan_in=dim, fan_out=k, name=name)
        elif mode == "wide":
            weight = xavier_init((window, k, dim), rng, fan_in=window * dim, fan_out=k, name=name)
        else:
            raise ValueError(f"unknown offset mode {mode!r}")
        return cls(mode, weight)

    @property
    def k(self) -> int:
        return 1 if self.mode == "single" else self.weight.shape[-2]

    @property
    def window(self) -> int:
        return self.weight.shape[0] if self.mode == "wide" else 1

    @property
    def dim(self) -> int:
        return self.weight.shape[-1]

    def __call__(self, H: Tensor) -> Tensor:
        """Offsets for every position, ``[n, k]``."""
        if H.shape[1] != self.dim:
            raise ValueError(f"predictor expects width {self.dim}, got {H.shape[1]}")
        if self.mode == "single":
            return (H @ self.weight).reshape(H.shape[0], 1)
        if self.mode == "multi":
            return H @ self.weight.T
        return predict_offsets_wide(H, self.weight)


def deformable_connect(H: Tensor, predictor: OffsetPredictor) -> tuple[Tensor, np.ndarray]:
    """Deformable input for the next layer and the offsets that produced it.

    Returns ``Z[n, k * d]`` (slot blocks in predictor order) and a copy of the
    raw offsets ``[n, k]``.
    """
    offsets = predictor(H)
    return interpolate(H, offsets), offsets.data.copy()


# ---------------------------------------------------------------------------
# wiring


@dataclass(frozen=True)
class Wiring:
    """Where deformable connections sit in an encoder of ``n_layers`` BiLSTM layers.

    ``between`` lists lower-layer indices ``l`` whose output is deformed before
    feeding layer ``l + 1``; ``before_decoder`` deforms the top output before
    the emission scorer.
    """

    structure: int
    n_layers: int
    between: tuple[int, ...]
    before_decoder: bool

    @property
    def n_connections(self) -> int:
        return len(self.between) + int(self.before_decoder)

    def connection_names(self) -> list[str]:
        names = [f"layer{l}-layer{l + 1}" for l in self.between]
        if self.before_decoder:
            names.append(f"layer{self.n_layers - 1}-crf")
        return names


def wire_structure(structure: int, n_layers: int) -> Wiring:
    """Placement for structure 1 (between BiLSTM layers), 2 (encoder to CRF) or 3 (both).

    Structure 0 is the vanilla stack with no deformable connection.
    """
    if n_layers < 1:
        raise ValueError("need at least one encoder layer")
    if structure not in (0, 1, 2, 3):
        raise ValueError(f"structure must be 0, 1, 2 or 3, got {structure}")
    if structure in (1, 3) and n_layers < 2:
        raise ValueError(f"structure {structure} needs at least 2 encoder layers, got {n_layers}")
    between = tuple(range(n_layers - 1)) if structure in (1, 3) else ()
    return Wiring(structure, n_layers, between, structure in (2, 3))
