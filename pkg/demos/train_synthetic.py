"""Train a small tagger on the bundled synthetic corpus, then save, reload and score it."""
import tempfile
from pathlib import Path

from deformner import archive
from deformner.config import ModelConfig, TrainConfig
from deformner.data import LabelScheme, build_vocab, encode_sentence
from deformner.evaluation import evaluate_model
from deformner.model import Tagger
from deformner.synthetic import generate_corpus
from deformner.train import fit

train = generate_corpus(50, seed=0)
test = generate_corpus(20, seed=1)
print(" ".join(train[0].tokens))
print(" ".join(train[0].labels))

# %% vocabulary, tag inventory and a scaled-down model
vocab = build_vocab(train)
scheme = LabelScheme.from_labels(s.labels for s in train)
config = ModelConfig(hidden=50, layers=2, structure=3, offsets=3, window=3, dropout=0.0)
model = Tagger(config, vocab, scheme, seed=0)
print(f"{len(vocab)} words, {len(scheme)} tags, {sum(p.data.size for p in model.parameters().values())} weights")

# %% train until the training set is tagged perfectly
encoded = [encode_sentence(s, vocab, scheme) for s in train]


def perfect(stats):
    f1 = evaluate_model(model, train).overall.f1
    print(f"epoch {stats.epoch:3d}  loss {stats.mean_loss:8.4f}  train F1 {f1:.4f}")
    return f1 == 1.0


fit(model, encoded, TrainConfig(epochs=200, batch_size=8, lr=0.01, seed=0), stop=perfect)

# %% held-out sentences from the same grammar
print(evaluate_model(model, test).to_tsv())

# %% persistence is bit-exact
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "tagger.bin"
    archive.save(model, path)
    print("reloaded predictions identical:", archive.load(path).predict(test) == model.predict(test))
