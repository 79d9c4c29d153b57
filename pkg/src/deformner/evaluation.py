"""Entity-level scoring and kernel density estimates of recorded offsets."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .data import OUTSIDE, PAD_LABEL, split_tag


class Span(NamedTuple):
    start: int
    end: int  # inclusive
    type: str


def extract_spans(tags: Sequence[str]) -> set[Span]:
    """Entity spans from a BIOES (or BIO) tag sequence.

    Malformed runs are repaired rather than rejected: an ``I``/``E`` tag with
    no open entity starts one of its own type; inside an open entity any
    ``I``/``E`` continues it and the type comes from the opening tag; an entity
    left open by ``O``, ``B``, ``S`` or the end of the sentence is closed at
    the preceding token.
    """
    spans: set[Span] = set()
    start, kind = None, None

    def close(end):
        nonlocal start, kind
        if start is not None:
            spans.add(Span(start, end, kind))
        start, kind = None, None

    for i, tag in enumerate(tags):
        if tag in (OUTSIDE, PAD_LABEL):
            close(i - 1)
            continue
        prefix, tag_kind = split_tag(tag)
        if prefix in ("B", "S"):
            close(i - 1)
            start, kind = i, tag_kind
        elif start is None:
            start, kind = i, tag_kind
        if prefix in ("E", "S"):
            close(i)
    close(len(tags) - 1)
    return spans


def prf1(gold: Iterable, pred: Iterable) -> tuple[float, float, float]:
    """Exact-match precision, recall and F1; empty denominators give 0."""
    gold, pred = set(gold), set(pred)
    tp = len(gold & pred)
    return _scores(tp, len(pred) - tp, len(gold) - tp)


def _scores(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return _scores(self.tp, self.fp, self.fn)[0]

    @property
    def recall(self) -> float:
        return _scores(self.tp, self.fp, self.fn)[1]

    @property
    def f1(self) -> float:
        return _scores(self.tp, self.fp, self.fn)[2]


@dataclass
class Report:
    overall: Counts
    per_type: dict[str, Counts] = field(default_factory=dict)

    def to_tsv(self) -> str:
        lines = ["type\tTP\tFP\tFN\tP\tR\tF"]
        rows = sorted(self.per_type.items()) + [("overall", self.overall)]
        for name, c in rows:
            lines.append(f"{name}\t{c.tp}\t{c.fp}\t{c.fn}\t{c.precision:.4f}\t{c.recall:.4f}\t{c.f1:.4f}")
        return "\n".join(lines) + "\n"


def evaluate(gold_tags: Sequence[Sequence[str]], pred_tags: Sequence[Sequence[str]]) -> Report:
    """Micro-averaged entity scores over a corpus, plus a per-type breakdown."""
    if len(gold_tags) != len(pred_tags):
        raise ValueError(f"{len(gold_tags)} gold sentences but {len(pred_tags)} predicted")
    gold_spans, pred_spans = set(), set()
    for k, (g, p) in enumerate(zip(gold_tags, pred_tags)):
        if len(g) != len(p):
            raise ValueError(f"sentence {k}: {len(g)} gold tags but {len(p)} predicted")
        gold_spans.update((k, *s) for s in extract_spans(g))
        pred_spans.update((k, *s) for s in extract_spans(p))
    tp = gold_spans & pred_spans
    per_type: dict[str, Counts] = {}
    for bucket, attr in ((tp, "tp"), (pred_spans - tp, "fp"), (gold_spans - tp, "fn")):
        for kind, count in Counter(s[3] for s in bucket).items():
            c = per_type.setdefault(kind, Counts())
            setattr(c, attr, getattr(c, attr) + count)
    overall = Counts(len(tp), len(pred_spans) - len(tp), len(gold_spans) - len(tp))
    return Report(overall, per_type)


def evaluate_model(model, sentences) -> Report:
    return evaluate([s.labels for s in sentences], model.predict(sentences))


# ---------------------------------------------------------------------------
# offset density


@dataclass
class DensityCurve:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    def to_csv(self) -> str:
        rows = ["offset,density"] + [f"{x:.10g},{y:.10g}" for x, y in zip(self.grid, self.density)]
        return "\n".join(rows) + "\n"


def silverman_bandwidth(samples: np.ndarray) -> float:
    return 1.06 * float(np.std(samples)) * len(samples) ** (-1 / 5)


def kde_at(samples: np.ndarray, points: np.ndarray, bandwidth: float) -> np.ndarray:
    """Gaussian kernel density of ``samples`` evaluated at ``points``."""
    samples = np.asarray(samples, dtype=np.float64)
    u = (np.asarray(points, dtype=np.float64)[..., None] - samples) / bandwidth
    return np.exp(-0.5 * u * u).sum(axis=-1) / (samples.size * bandwidth * np.sqrt(2 * np.pi))


def offset_kde(offsets: Iterable[float], bandwidth: float | None = None,
               grid_points: int = 512) -> DensityCurve:
    """Gaussian KDE on a uniform grid over ``[min - 3h, max + 3h]``.

    The automatic bandwidth is Silverman's rule; when every sample is
    identical it falls back to 0.1 so the curve is a narrow peak.
    """
    x = np.asarray(list(offsets), dtype=np.float64)
    if x.size < 2:
        raise ValueError("need at least 2 offset samples")
    if bandwidth is None:
        bandwidth = silverman_bandwidth(x) or 0.1
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    grid = np.linspace(x.min() - 3 * bandwidth, x.max() + 3 * bandwidth, grid_points)
    return DensityCurve(grid, kde_at(x, grid, bandwidth), float(bandwidth))
