import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deformner import autograd as ag
from deformner.autograd import Tensor, backward, finite_diff_check, parameter
from deformner.deform import (OffsetPredictor, bilinear_mask, deform_gather, deformable_connect,
                              interpolate, predict_offset_single, predict_offsets_multi,
                              predict_offsets_wide, wire_structure)

from oracles import matmul_loops, tent_gather, wide_offsets_loops


@pytest.mark.parametrize("target,expected", [
    (3.2, [0, 0, 0.8, 0.2, 0]),
    (2.0, [0, 1, 0, 0, 0]),
    (4.7, [0, 0, 0, 0.3, 0.7]),
    (-3.0, [1, 0, 0, 0, 0]),
    (9.5, [0, 0, 0, 0, 1]),
])
def test_bilinear_mask_values(target, expected):
    np.testing.assert_allclose(bilinear_mask(target, 5), expected, rtol=0, atol=1e-15)


def test_bilinear_mask_needs_positive_length():
    with pytest.raises(ValueError):
        bilinear_mask(1.0, 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-10, 10), st.integers(1, 8))
def test_bilinear_mask_is_valid_weighting(target, n):
    g = bilinear_mask(target, n)
    assert np.count_nonzero(g) <= 2
    assert np.all((g >= 0) & (g <= 1))
    assert abs(g.sum() - 1.0) < 1e-12


def _H(n=5, d=3, seed=0):
    return parameter(np.random.default_rng(seed).normal(size=(n, d)))


def test_gather_zero_offset_is_identity():
    H = _H()
    for i in range(5):
        np.testing.assert_array_equal(deform_gather(H, i, 0.0).data, H.data[i])


def test_gather_worked_example():
    H = _H()
    # 0-based position 1 is the second token; target 2.2 mixes rows 2 and 3
    z = deform_gather(H, 1, 1.2).data
    np.testing.assert_allclose(z, 0.8 * H.data[2] + 0.2 * H.data[3], atol=1e-15)


def test_gather_clamps_past_the_end():
    H = _H()
    np.testing.assert_array_equal(deform_gather(H, 4, 5.0).data, H.data[4])
    np.testing.assert_array_equal(deform_gather(H, 0, -2.5).data, H.data[0])


def test_gather_position_out_of_range():
    with pytest.raises(IndexError):
        deform_gather(_H(), 5, 0.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 4), st.floats(-6, 6))
def test_gather_matches_tent_oracle(i, o):
    H = _H()
    np.testing.assert_allclose(deform_gather(H, i, o).data, tent_gather(H.data, i, o), atol=1e-14)


def test_gather_is_linear_in_H():
    A, B = _H(seed=1).data, _H(seed=2).data
    for i, o in [(0, 0.3), (2, -1.7), (4, -0.2)]:
        lhs = deform_gather(Tensor(2.5 * A - 0.5 * B), i, o).data
        rhs = 2.5 * deform_gather(Tensor(A), i, o).data - 0.5 * deform_gather(Tensor(B), i, o).data
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_gather_gradient_at_non_integer_offsets():
    rng = np.random.default_rng(3)
    for _ in range(10):
        H = _H(seed=int(rng.integers(1000)))
        i = int(rng.integers(5))
        o = parameter([rng.uniform(-i, 4 - i)])
        if abs(o.data[0] - round(o.data[0])) < 0.01:
            continue
        w = Tensor(rng.normal(size=3))
        assert finite_diff_check(lambda H, o: (deform_gather(H, i, o[0]) * w).sum(), [H, o]) < 1e-4


def test_gather_offset_gradient_is_zero_outside_boundary():
    H = _H()
    o = parameter([7.3])
    backward(deform_gather(H, 2, o[0]).sum())
    assert o.grad.tolist() == [0.0]


def test_single_predictor():
    h = Tensor(np.random.default_rng(4).normal(size=4))
    assert predict_offset_single(h, Tensor(np.zeros(4))).item() == 0.0
    assert predict_offset_single(Tensor([0.5, 2.0, 3.0]), Tensor([1.0, 0.0, 0.0])).item() == 0.5
    v = np.random.default_rng(5).normal(size=4)
    loop = sum(a * b for a, b in zip(v, h.data))
    assert abs(predict_offset_single(h, Tensor(v)).item() - loop) < 1e-14


def test_multi_predictor():
    rng = np.random.default_rng(6)
    h, V = rng.normal(size=4), rng.normal(size=(3, 4))
    out = predict_offsets_multi(Tensor(h), Tensor(V)).data
    np.testing.assert_allclose(out, matmul_loops(V.tolist(), h[:, None].tolist())[:, 0], atol=1e-14)
    assert predict_offsets_multi(Tensor(h), Tensor(V[:1])).item() == pytest.approx(
        predict_offset_single(Tensor(h), Tensor(V[0])).item(), abs=1e-15)
    assert not predict_offsets_multi(Tensor(h), Tensor(np.zeros((2, 4)))).data.any()
    with pytest.raises(ValueError):
        predict_offsets_multi(Tensor(h), Tensor(np.zeros((2, 3))))


def test_wide_predictor_matches_sliding_window():
    rng = np.random.default_rng(7)
    H, W = rng.normal(size=(3, 4)), rng.normal(size=(3, 2, 4))
    out = predict_offsets_wide(Tensor(H), Tensor(W)).data
    assert np.max(np.abs(out - wide_offsets_loops(H, W))) < 1e-12


def test_wide_predictor_window_five_on_short_sentence():
    rng = np.random.default_rng(8)
    H, W = rng.normal(size=(2, 3)), rng.normal(size=(5, 2, 3))
    np.testing.assert_allclose(predict_offsets_wide(Tensor(H), Tensor(W)).data,
                               wide_offsets_loops(H, W), atol=1e-12)


def test_wide_window_one_is_multi_per_position():
    rng = np.random.default_rng(9)
    H, V = rng.normal(size=(4, 3)), rng.normal(size=(2, 3))
    wide = predict_offsets_wide(Tensor(H), Tensor(V[None])).data
    per_pos = np.stack([predict_offsets_multi(Tensor(h), Tensor(V)).data for h in H])
    np.testing.assert_allclose(wide, per_pos, atol=1e-14)


def test_wide_zero_filters():
    assert not predict_offsets_wide(_H(), Tensor(np.zeros((3, 2, 3)))).data.any()


def test_wide_rejects_even_window():
    with pytest.raises(ValueError, match="odd"):
        predict_offsets_wide(_H(), Tensor(np.zeros((2, 1, 3))))


@pytest.mark.parametrize("mode,k", [("single", 1), ("multi", 3), ("wide", 3)])
def test_predictor_gradients(mode, k):
    H = _H(n=4, d=3, seed=10)
    pred = OffsetPredictor.init(3, mode=mode, k=k, window=3, seed=11)
    w = Tensor(np.random.default_rng(12).normal(size=(4, k)))
    err = finite_diff_check(lambda H, W: (OffsetPredictor(mode, W)(H) * w).sum(), [H, pred.weight])
    assert err < 1e-4


def test_predictor_validation():
    with pytest.raises(ValueError):
        OffsetPredictor.init(3, mode="single", k=2)
    with pytest.raises(ValueError):
        OffsetPredictor.init(3, mode="cubic")
    with pytest.raises(ValueError):
        OffsetPredictor("multi", Tensor(np.zeros(3)))
    with pytest.raises(ValueError, match="width"):
        OffsetPredictor.init(3, mode="multi", k=2)(_H(d=4))


def test_predictor_properties():
    p = OffsetPredictor.init(6, mode="wide", k=3, window=5, seed=0)
    assert (p.k, p.window, p.dim) == (3, 5, 6)


def test_connect_zero_predictor_is_identity():
    H = _H()
    pred = OffsetPredictor("multi", parameter(np.zeros((1, 3))))
    Z, offsets = deformable_connect(H, pred)
    np.testing.assert_array_equal(Z.data, H.data)
    assert not offsets.any() and offsets.shape == (5, 1)


def test_connect_width_and_blocks_match_gathers():
    H = _H(n=6, d=4, seed=13)
    pred = OffsetPredictor.init(4, mode="wide", k=3, window=3, seed=14)
    pred.weight.data *= 3.0
    Z, offsets = deformable_connect(H, pred)
    assert Z.shape == (6, 12)
    for i in range(6):
        expected = np.concatenate([deform_gather(H, i, offsets[i, s]).data for s in range(3)])
        np.testing.assert_array_equal(Z.data[i], expected)


def test_slot_permutation_permutes_blocks():
    H = _H(n=5, d=2, seed=15)
    V = np.random.default_rng(16).normal(size=(3, 2)) * 2
    perm = [2, 0, 1]
    Z, _ = deformable_connect(H, OffsetPredictor("multi", Tensor(V)))
    Zp, _ = deformable_connect(H, OffsetPredictor("multi", Tensor(V[perm])))
    blocks = Z.data.reshape(5, 3, 2)
    np.testing.assert_array_equal(Zp.data.reshape(5, 3, 2), blocks[:, perm])


def test_offset_gradient_nonzero_for_non_integer_offsets():
    H = _H(n=5, d=3, seed=17)
    v = parameter(np.random.default_rng(18).normal(size=3))
    Z, offsets = deformable_connect(H, OffsetPredictor("single", v))
    assert np.all(np.abs(offsets - np.round(offsets)) > 1e-3)
    backward((Z * Tensor(np.random.default_rng(19).normal(size=Z.shape))).sum())
    assert np.abs(v.grad).sum() > 0


def test_interpolate_shape_check():
    with pytest.raises(ValueError):
        interpolate(_H(), Tensor(np.zeros((4, 1))))


@pytest.mark.parametrize("structure,layers,between,before", [
    (0, 2, (), False), (1, 2, (0,), False), (2, 1, (), True), (3, 2, (0,), True), (3, 3, (0, 1), True),
])
def test_wiring(structure, layers, between, before):
    w = wire_structure(structure, layers)
    assert w.between == between and w.before_decoder == before
    assert w.n_connections == len(between) + before


def test_wiring_names():
    assert wire_structure(3, 2).connection_names() == ["layer0-layer1", "layer1-crf"]


@pytest.mark.parametrize("structure", [1, 3])
def test_wiring_needs_two_layers(structure):
    with pytest.raises(ValueError, match="at least 2"):
        wire_structure(structure, 1)


def test_wiring_rejects_unknown_structure():
    with pytest.raises(ValueError):
        wire_structure(4, 2)
