import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from deformner.config import ModelConfig  # noqa: E402
from deformner.data import LabelScheme, build_vocab, prepare_labels  # noqa: E402
from deformner.model import Tagger  # noqa: E402
from deformner.synthetic import generate_corpus  # noqa: E402

# criterion number -> (description, passed); filled in by test_acceptance.py
ACCEPTANCE_RESULTS: dict[int, tuple[str, bool]] = {}


def small_config(**changes) -> ModelConfig:
    base = dict(word_dim=8, char_dim=4, char_filters=5, hidden=6, layers=2, structure=3,
                offsets=2, window=3, dropout=0.0)
    base.update(changes)
    return ModelConfig(**base)


def build_tagger(sentences, seed=0, **changes) -> Tagger:
    vocab = build_vocab(sentences)
    scheme = LabelScheme.from_labels(s.labels for s in sentences)
    return Tagger(small_config(**changes), vocab, scheme, seed=seed)


@pytest.fixture(scope="session")
def corpus():
    return prepare_labels(generate_corpus(12, seed=3))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        text, ok = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {text}")


def zeroed_pair(sentences, structure, seed=0, **changes):
    """A deformable tagger with k=1 and zeroed predictors, and a vanilla twin sharing its weights."""
    deformable = build_tagger(sentences, seed=seed, structure=structure, offsets=1, **changes)
    for pred in deformable.predictors:
        pred.weight.data[...] = 0.0
    layers = changes.pop("layers", 2)
    vanilla = build_tagger(sentences, seed=seed + 1, structure=0, offsets=1, layers=layers, **changes)
    shared = {k: v for k, v in deformable.state_dict().items() if not k.startswith("offset")}
    vanilla.load_state_dict(shared)
    return deformable, vanilla
