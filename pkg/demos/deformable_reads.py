"""How a deformable connection reads its lower layer at continuous positions."""
import numpy as np

from deformner.autograd import Tensor, backward, parameter
from deformner.deform import OffsetPredictor, bilinear_mask, deform_gather, deformable_connect

# %% interpolation weights for reading position 3.2 of a 5-token sentence (1-based)
print(bilinear_mask(3.2, 5))          # [0, 0, 0.8, 0.2, 0]
print(bilinear_mask(7.0, 5))          # clamped onto the last token

# %% the same read as a gather over hidden states (0-based position 1, offset 1.2)
H = parameter(np.arange(15.0).reshape(5, 3))
z = deform_gather(H, 1, 1.2)
print(z.data, "=", 0.8 * H.data[2] + 0.2 * H.data[3])

# %% offsets are differentiable, so the predictor learns where to look
o = parameter([1.2])
backward(deform_gather(H, 1, o[0]).sum())
print("d(sum z)/d offset:", o.grad)

# %% a wide-window predictor with k=3 slots over a random sentence
rng = np.random.default_rng(2)
H = Tensor(rng.normal(size=(6, 4)))
predictor = OffsetPredictor.init(4, mode="wide", k=3, window=3, seed=3)
Z, offsets = deformable_connect(H, predictor)
print("Z shape", Z.shape)
print("offsets per token and slot:")
print(np.round(offsets, 3))
