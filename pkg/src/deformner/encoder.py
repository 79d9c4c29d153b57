"""LSTM cells and bi-directional LSTM layers."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autograd as ag
from .autograd import Tensor, _sigmoid


@dataclass
class LstmParams:
    """One LSTM direction.  Gate blocks along the last axis are ordered i, f, o, g."""

    Wx: Tensor  # [d_in, 4 * hidden]
    Wh: Tensor  # [hidden, 4 * hidden]
    b: Tensor  # [4 * hidden]

    def __post_init__(self):
        h4 = self.Wh.shape[1]
        if h4 % 4 or self.Wh.shape[0] * 4 != h4 or self.Wx.shape[1] != h4 or self.b.shape != (h4,):
            raise ValueError(
                f"inconsistent LSTM shapes Wx{self.Wx.shape} Wh{self.Wh.shape} b{self.b.shape}")

    @property
    def hidden(self) -> int:
        return self.Wh.shape[0]

    @property
    def input_dim(self) -> int:
        return self.Wx.shape[0]

    @classmethod
    def init(cls, input_dim: int, hidden: int, seed=0, prefix: str = "lstm") -> "LstmParams":
        from .train import xavier_init

        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return cls(
            Wx=xavier_init((input_dim, 4 * hidden), rng, name=f"{prefix}.Wx"),
            Wh=xavier_init((hidden, 4 * hidden), rng, name=f"{prefix}.Wh"),
            b=xavier_init((4 * hidden,), rng, name=f"{prefix}.b"),
        )

    def parameters(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.Wx": self.Wx, f"{prefix}.Wh": self.Wh, f"{prefix}.b": self.b}


def lstm_step(x: Tensor, h: Tensor, c: Tensor, params: LstmParams) -> tuple[Tensor, Tensor]:
    """One cell update built from primitive graph ops; returns ``(h', c')``."""
    if x.shape != (params.input_dim,) or h.shape != (params.hidden,) or c.shape != (params.hidden,):
        raise ValueError(
            f"lstm_step shape mismatch: x{x.shape} h{h.shape} c{c.shape} "
            f"for input {params.input_dim}, hidden {params.hidden}")
    d = params.hidden
    z = x @ params.Wx + h @ params.Wh + params.b
    i = ag.sigmoid(z[0:d])
    f = ag.sigmoid(z[d:2 * d])
    o = ag.sigmoid(z[2 * d:3 * d])
    g = ag.tanh(z[3 * d:4 * d])
    c_new = f * c + i * g
    h_new = o * ag.tanh(c_new)
    return h_new, c_new


def lstm_sequence(x: Tensor, params: LstmParams, reverse: bool = False) -> Tensor:
    """Run one direction over ``x[n, d_in]`` from a zero state; returns ``[n, hidden]``.

    Mathematically identical to chaining :func:`lstm_step`, but recorded as a
    single graph node with a hand-written backward pass through time.
    """
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise ValueError(f"expected input [n, {params.input_dim}], got {x.shape}")
    n, d = x.shape[0], params.hidden
    X, Wx, Wh, b = x.data, params.Wx.data, params.Wh.data, params.b.data
    order = range(n - 1, -1, -1) if reverse else range(n)

    pre_x = X @ Wx + b
    H = np.zeros((n, d))
    C = np.zeros((n, d))
    gates = np.zeros((n, 4 * d))
    prev_h = np.zeros((n, d))
    prev_c = np.zeros((n, d))
    h = np.zeros(d)
    c = np.zeros(d)
    for t in order:
        prev_h[t], prev_c[t] = h, c
        z = pre_x[t] + h @ Wh
        ifo = _sigmoid(z[:3 * d])
        g = np.tanh(z[3 * d:])
        c = ifo[d:2 * d] * c + ifo[:d] * g
        h = ifo[2 * d:] * np.tanh(c)
        gates[t, :3 * d], gates[t, 3 * d:] = ifo, g
        H[t], C[t] = h, c

    def vjp(gH):
        dpre = np.zeros((n, 4 * d))
        dWh = np.zeros_like(Wh)
        dh_next = np.zeros(d)
        dc_next = np.zeros(d)
        for t in reversed(order):
            i, f, o, g = (gates[t, k * d:(k + 1) * d] for k in range(4))
            tc = np.tanh(C[t])
            dh = gH[t] + dh_next
            dc = dh * o * (1.0 - tc * tc) + dc_next
            dz = dpre[t]
            dz[:d] = dc * g * i * (1.0 - i)
            dz[d:2 * d] = dc * prev_c[t] * f * (1.0 - f)
            dz[2 * d:3 * d] = dh * tc * o * (1.0 - o)
            dz[3 * d:] = dc * i * (1.0 - g * g)
            dWh += np.outer(prev_h[t], dz)
            dh_next = Wh @ dz
            dc_next = dc * f
        return dpre @ Wx.T, X.T @ dpre, dWh, dpre.sum(axis=0)

    return ag.apply_op(H, (x, params.Wx, params.Wh, params.b), vjp)


def bilstm_forward(inputs: Tensor, fwd: LstmParams, bwd: LstmParams) -> Tensor:
    """Concatenated forward/backward states ``[n, 2 * hidden]``."""
    if inputs.shape[0] < 1:
        raise ValueError("empty sequence")
    return ag.concat([lstm_sequence(inputs, fwd), lstm_sequence(inputs, bwd, reverse=True)], axis=1)


@dataclass
class BiLstmLayer:
    fwd: LstmParams
    bwd: LstmParams

    @classmethod
    def init(cls, input_dim: int, hidden: int, seed=0, prefix: str = "bilstm") -> "BiLstmLayer":
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return cls(LstmParams.init(input_dim, hidden, rng, f"{prefix}.fwd"),
                   LstmParams.init(input_dim, hidden, rng, f"{prefix}.bwd"))

    @property
    def input_dim(self) -> int:
        return self.fwd.input_dim

    @property
    def output_dim(self) -> int:
        return self.fwd.hidden + self.bwd.hidden

    def __call__(self, inputs: Tensor) -> Tensor:
        return bilstm_forward(inputs, self.fwd, self.bwd)

    def parameters(self, prefix: str) -> dict[str, Tensor]:
        return {**self.fwd.parameters(f"{prefix}.fwd"), **self.bwd.parameters(f"{prefix}.bwd")}


def vanilla_stack(layers: Sequence[BiLstmLayer], inputs: Tensor) -> Tensor:
    """Position i of each layer reads position i of the layer below."""
    h = inputs
    for depth, layer in enumerate(layers):
        if h.shape[1] != layer.input_dim:
            raise ValueError(f"layer {depth} expects width {layer.input_dim}, got {h.shape[1]}")
        h = layer(h)
    return h
