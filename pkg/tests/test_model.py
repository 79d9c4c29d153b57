import numpy as np
import pytest

from deformner.autograd import backward
from deformner.config import ModelConfig, conll2003, ontonotes, override
from deformner.data import LabelScheme, Sentence, build_vocab
from deformner.model import Tagger

from conftest import build_tagger, small_config, zeroed_pair


@pytest.mark.parametrize("structure,layers,connections", [(0, 2, 0), (1, 2, 1), (2, 1, 1), (3, 2, 2), (3, 3, 3)])
def test_connection_count(corpus, structure, layers, connections):
    model = build_tagger(corpus, structure=structure, layers=layers)
    assert len(model.predictors) == connections
    fwd = model.forward(model.encode(corpus[0]))
    assert len(fwd.offsets) == connections
    assert all(o.shape == (len(corpus[0]), 2) for o in fwd.offsets)


def test_scorer_width_follows_offset_count(corpus):
    model = build_tagger(corpus, structure=2, layers=1, offsets=3, hidden=5)
    assert model.crf.W.shape[0] == 3 * 10
    assert build_tagger(corpus, structure=1, offsets=3, hidden=5).crf.W.shape[0] == 10


def test_structure_needs_layers(corpus):
    with pytest.raises(ValueError, match="at least 2"):
        build_tagger(corpus, structure=3, layers=1)


@pytest.mark.parametrize("structure", [1, 2, 3])
def test_zero_offsets_match_vanilla(corpus, structure):
    deformable, vanilla = zeroed_pair(corpus, structure)
    for sent in corpus[:4]:
        a, b = deformable.encode(sent), vanilla.encode(sent)
        ea, eb = deformable.forward(a).emissions.data, vanilla.forward(b).emissions.data
        assert np.max(np.abs(ea - eb)) < 1e-10
        assert abs(deformable.loss(a).item() - vanilla.loss(b).item()) < 1e-10
        assert deformable.decode(a) == vanilla.decode(b)
        assert all(not o.any() for o in deformable.forward(a).offsets)


def test_equal_seeds_give_identical_models(corpus):
    a, b = build_tagger(corpus, seed=7), build_tagger(corpus, seed=7)
    for name, value in a.state_dict().items():
        assert np.array_equal(value, b.state_dict()[name])
    assert not np.array_equal(a.crf.W.data, build_tagger(corpus, seed=8).crf.W.data)


def test_gradients_reach_every_parameter(corpus):
    model = build_tagger(corpus, seed=3)
    backward(model.loss(model.encode(corpus[1])))
    for name, p in model.parameters().items():
        assert p.grad is not None, name
        assert np.abs(p.grad).sum() > 0, name


def test_predict_never_emits_padding(corpus):
    model = build_tagger(corpus, seed=5)
    model.crf.b.data[model.scheme.pad_index] = 100.0
    for tags in model.predict(corpus[:3]):
        assert "<pad>" not in tags


def test_bioes_constraints_produce_valid_sequences(corpus):
    model = build_tagger(corpus, seed=6, bioes_constraints=True)
    ok = model.scheme.allowed_transitions()
    for sent in corpus:
        path = model.decode(model.encode(sent, with_gold=False))
        assert model.scheme.allowed_starts()[path[0]]
        assert all(ok[a, b] for a, b in zip(path, path[1:]))


def test_oov_tokens_use_unknown_path(corpus):
    model = build_tagger(corpus)
    tags = model.predict([Sentence(["Qwxz", "zzyzx", "1234"])])
    assert len(tags[0]) == 3


def test_no_char_model(corpus):
    model = build_tagger(corpus, use_chars=False)
    assert "char_emb" not in model.parameters()
    assert model.forward(model.encode(corpus[0])).emissions.shape == (len(corpus[0]), len(model.scheme))


def test_load_state_dict_checks(corpus):
    model = build_tagger(corpus)
    state = model.state_dict()
    with pytest.raises(KeyError):
        model.load_state_dict({k: v for k, v in state.items() if k != "crf.W"})
    state["crf.W"] = np.zeros((1, 1))
    with pytest.raises(ValueError):
        model.load_state_dict(state)


def test_word_table_shape_check(corpus):
    from deformner.autograd import parameter
    vocab = build_vocab(corpus)
    with pytest.raises(ValueError):
        Tagger(small_config(), vocab, LabelScheme(["PER"]), word_table=parameter(np.zeros((2, 2))))


def test_record_offsets(corpus):
    model = build_tagger(corpus, seed=2)
    recorded = model.record_offsets(corpus[:2])
    assert len(recorded) == 2 and len(recorded[0]) == 2
    assert recorded[1][0].shape == (len(corpus[1]), 2)


def test_presets():
    model, train = conll2003()
    assert (model.hidden, model.layers, model.structure, train.batch_size, train.lr) == (256, 1, 2, 10, 0.008)
    model, train = ontonotes()
    assert (model.hidden, model.layers, model.structure, train.batch_size, train.lr) == (200, 2, 3, 8, 0.005)
    assert (model.offsets, model.window, model.char_filters, model.dropout) == (3, 3, 30, 0.5)


def test_config_validation_and_override():
    for bad in (dict(dropout=1.0), dict(structure=5), dict(offset_mode="x"), dict(window=2),
                dict(offset_mode="single", offsets=2), dict(hidden=0)):
        with pytest.raises(ValueError):
            ModelConfig(**bad)
    assert override(ModelConfig(), hidden=7, lr=0.1).hidden == 7
