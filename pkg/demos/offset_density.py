"""Record the offsets a model predicts and summarize them with a kernel density curve."""
import numpy as np

from deformner.config import ModelConfig, TrainConfig
from deformner.data import LabelScheme, build_vocab, encode_sentence
from deformner.evaluation import offset_kde
from deformner.model import Tagger
from deformner.synthetic import generate_corpus
from deformner.train import fit

corpus = generate_corpus(40, seed=5)
vocab = build_vocab(corpus)
scheme = LabelScheme.from_labels(s.labels for s in corpus)
model = Tagger(ModelConfig(hidden=30, word_dim=30, layers=2, structure=3, dropout=0.0), vocab, scheme, seed=1)
fit(model, [encode_sentence(s, vocab, scheme) for s in corpus], TrainConfig(epochs=15, lr=0.01))

# %% offsets for every token, per connection and slot
recorded = model.record_offsets(corpus)
names = model.wiring.connection_names()
for c, name in enumerate(names):
    values = np.concatenate([sent[c] for sent in recorded])
    print(f"{name}: mean offset per slot {np.round(values.mean(axis=0), 3)}")

# %% density of the first slot of the connection feeding the CRF
values = np.concatenate([sent[-1][:, 0] for sent in recorded])
curve = offset_kde(values)
peak = curve.grid[np.argmax(curve.density)]
print(f"bandwidth {curve.bandwidth:.4f}, mode near {peak:.3f}, "
      f"integral {np.trapezoid(curve.density, curve.grid):.4f}")
print(curve.to_csv().splitlines()[:4])
