import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import gaussian_kde

from deformner.data import spans_to_tags
from deformner.evaluation import (Counts, Span, evaluate, extract_spans, kde_at, offset_kde, prf1,
                                  silverman_bandwidth)


@pytest.mark.parametrize("tags,spans", [
    (["B-PER", "E-PER", "O"], {(0, 1, "PER")}),
    (["S-LOC", "S-LOC"], {(0, 0, "LOC"), (1, 1, "LOC")}),
    (["B-PER", "I-ORG", "E-PER"], {(0, 2, "PER")}),
    (["O", "O"], set()),
    ([], set()),
    # entity left open by O, B, S or the sentence end closes at the previous token
    (["B-PER", "I-PER", "O"], {(0, 1, "PER")}),
    (["B-PER", "B-LOC", "E-LOC"], {(0, 0, "PER"), (1, 2, "LOC")}),
    (["B-PER", "S-LOC"], {(0, 0, "PER"), (1, 1, "LOC")}),
    (["B-ORG", "I-ORG"], {(0, 1, "ORG")}),
    # I or E with nothing open starts an entity of its own type
    (["O", "I-LOC", "E-LOC"], {(1, 2, "LOC")}),
    (["E-PER", "O"], {(0, 0, "PER")}),
    (["I-PER", "I-LOC"], {(0, 1, "PER")}),
    # BIO input works too
    (["B-PER", "I-PER", "B-PER"], {(0, 1, "PER"), (2, 2, "PER")}),
    (["O", "<pad>", "S-PER"], {(2, 2, "PER")}),
])
def test_extract_spans_table(tags, spans):
    assert extract_spans(tags) == spans


def test_span_fields():
    s = Span(1, 3, "ORG")
    assert (s.start, s.end, s.type) == (1, 3, "ORG")


@st.composite
def span_sets(draw):
    n = draw(st.integers(0, 15))
    spans, i = [], 0
    while i < n:
        if draw(st.booleans()):
            end = draw(st.integers(i, min(n - 1, i + 3)))
            spans.append((i, end, draw(st.sampled_from(["PER", "LOC", "ORG"]))))
            i = end + 1
        else:
            i += 1
    return n, spans


@settings(max_examples=200, deadline=None)
@given(span_sets(), st.sampled_from(["bioes", "bio"]))
def test_tag_encode_then_extract_is_identity(data, scheme):
    n, spans = data
    assert extract_spans(spans_to_tags(spans, n, scheme)) == set(spans)


def test_prf1_examples():
    gold = {(0, 0, "PER"), (2, 3, "LOC")}
    assert prf1(gold, gold) == (1.0, 1.0, 1.0)
    assert prf1(gold, {(0, 0, "PER"), (5, 5, "ORG")}) == (0.5, 0.5, 0.5)
    assert prf1(gold, set()) == (0.0, 0.0, 0.0)
    assert prf1(set(), set()) == (0.0, 0.0, 0.0)


span_pool = st.sets(st.tuples(st.integers(0, 5), st.integers(0, 5), st.sampled_from("AB")), max_size=8)


@settings(max_examples=100, deadline=None)
@given(span_pool, span_pool)
def test_prf1_swap_symmetry(gold, pred):
    p, r, f = prf1(gold, pred)
    p2, r2, f2 = prf1(pred, gold)
    assert (p, r) == (r2, p2)
    assert f == pytest.approx(f2, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(span_pool, span_pool)
def test_f1_between_precision_and_recall(gold, pred):
    p, r, f = prf1(gold, pred)
    if p > 0 and r > 0:
        assert min(p, r) - 1e-12 <= f <= max(p, r) + 1e-12


def test_evaluate_hand_counted():
    gold = [["B-PER", "E-PER", "O", "S-LOC"], ["S-ORG", "O"]]
    pred = [["B-PER", "E-PER", "O", "S-ORG"], ["O", "S-ORG"]]
    report = evaluate(gold, pred)
    assert (report.overall.tp, report.overall.fp, report.overall.fn) == (1, 2, 2)
    assert report.overall.precision == pytest.approx(1 / 3)
    assert report.overall.recall == pytest.approx(1 / 3)
    assert report.per_type["ORG"].fp == 2 and report.per_type["ORG"].fn == 1
    assert report.per_type["LOC"].fn == 1
    assert report.per_type["PER"].f1 == 1.0


def test_evaluate_perfect_and_report_format():
    gold = [["B-PER", "E-PER"], ["S-LOC"]]
    report = evaluate(gold, gold)
    assert report.overall.f1 == 1.0
    lines = report.to_tsv().splitlines()
    assert lines[0] == "type\tTP\tFP\tFN\tP\tR\tF"
    assert lines[-1] == "overall\t2\t0\t0\t1.0000\t1.0000\t1.0000"
    assert [l.split("\t")[0] for l in lines[1:-1]] == ["LOC", "PER"]


def test_evaluate_errors_name_the_sentence():
    with pytest.raises(ValueError, match="2 gold sentences but 1"):
        evaluate([["O"], ["O"]], [["O"]])
    with pytest.raises(ValueError, match="sentence 1"):
        evaluate([["O"], ["O", "O"]], [["O"], ["O"]])


def test_counts_empty():
    assert (Counts().precision, Counts().recall, Counts().f1) == (0.0, 0.0, 0.0)


def test_kde_identical_samples_peak_at_value():
    curve = offset_kde([0.7] * 10)
    assert curve.bandwidth == 0.1
    assert abs(curve.grid[np.argmax(curve.density)] - 0.7) <= (curve.grid[1] - curve.grid[0]) / 2 + 1e-12


def test_kde_symmetric_bimodal():
    curve = offset_kde([-1.0, 1.0], bandwidth=0.5)
    d = kde_at(np.array([-1.0, 1.0]), np.array([-1.0, 1.0]), 0.5)
    assert abs(d[0] - d[1]) < 1e-12
    np.testing.assert_allclose(curve.density, curve.density[::-1], atol=1e-12)


def test_kde_grid_and_integral():
    x = np.random.default_rng(0).normal(0.3, 0.8, 150)
    curve = offset_kde(x)
    h = silverman_bandwidth(x)
    assert curve.bandwidth == h
    assert curve.grid[0] == pytest.approx(x.min() - 3 * h) and curve.grid[-1] == pytest.approx(x.max() + 3 * h)
    assert len(curve.grid) == 512
    assert abs(np.trapezoid(curve.density, curve.grid) - 1) < 0.02
    assert np.all(curve.density >= 0)


def test_kde_matches_scipy():
    x = np.random.default_rng(1).normal(size=200)
    curve = offset_kde(x, bandwidth=0.4)
    reference = gaussian_kde(x, bw_method=0.4 / np.std(x, ddof=1))(curve.grid)
    np.testing.assert_allclose(curve.density, reference, rtol=1e-10, atol=1e-14)


def test_kde_errors():
    with pytest.raises(ValueError):
        offset_kde([1.0])
    with pytest.raises(ValueError):
        offset_kde([1.0, 2.0], bandwidth=0.0)


def test_density_csv():
    text = offset_kde([0.0, 1.0], bandwidth=1.0, grid_points=3).to_csv()
    lines = text.splitlines()
    assert lines[0] == "offset,density" and len(lines) == 4
    assert lines[1].startswith("-3,")
