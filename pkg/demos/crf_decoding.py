"""Linear-chain CRF: partition function, likelihood and Viterbi on a toy chain."""
import itertools

import numpy as np

from deformner.autograd import Tensor, backward, parameter
from deformner.crf import log_partition, nll, sequence_score, viterbi

rng = np.random.default_rng(1)
n, T = 4, 3
scores = parameter(rng.normal(size=(n, T)))
trans = Tensor(rng.normal(size=(T, T)))
start = Tensor(rng.normal(size=T))

# %% the forward algorithm against brute force over all T**n label sequences
logZ = log_partition(scores, trans, start).item()
every = [sequence_score(scores, trans, start, y).item() for y in itertools.product(range(T), repeat=n)]
print("forward algorithm", logZ)
print("enumeration      ", np.log(np.sum(np.exp(every))))

# %% Viterbi finds the best of those sequences
path, best = viterbi(scores, trans, start)
print("viterbi path", path, "score", best, "enumerated max", max(every))

# %% the gradient of log Z with respect to emissions is the posterior marginal table
backward(log_partition(scores, trans, start))
print("marginals (rows sum to 1):")
print(np.round(scores.grad, 3))

print("nll of the Viterbi path", nll(scores, trans, start, path).item())
