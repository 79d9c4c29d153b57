"""Reverse-mode gradients on a tiny expression, checked against finite differences."""
import numpy as np

from deformner import autograd as ag
from deformner.autograd import backward, finite_diff_check, parameter

# %% build a small graph: loss = logsumexp(tanh(W x))
rng = np.random.default_rng(0)
W = parameter(rng.normal(size=(3, 4)), name="W")
x = parameter(rng.normal(size=4), name="x")

loss = ag.logsumexp(ag.tanh(W @ x), axis=0)
print("loss", loss.item())

# %% gradients land on every leaf that asked for them
grads = backward(loss)
print("dL/dx", grads[x])
print("dL/dW shape", grads[W].shape)

# %% the finite-difference harness reports the worst relative error
err = finite_diff_check(lambda W, x: ag.logsumexp(ag.tanh(W @ x), axis=0), [W, x])
print(f"max relative error vs central differences: {err:.2e}")
