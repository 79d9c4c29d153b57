"""CoNLL column corpora, tag-scheme conversion and vocabularies."""
from __future__ import annotations

import io
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

PAD = "<pad>"
UNK = "<unk>"
OUTSIDE = "O"
PAD_LABEL = "<pad>"
BIOES_PREFIXES = ("B", "I", "E", "S")


class ConllFormatError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass
class Sentence:
    """Tokens with their gold labels (labels may be empty for unlabeled input)."""

    tokens: list[str]
    labels: list[str] = field(default_factory=list)
    columns: list[list[str]] | None = None

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class EncodedSentence:
    words: np.ndarray
    chars: list[np.ndarray]
    gold: np.ndarray | None

    def __post_init__(self):
        n = len(self.words)
        if n < 1 or len(self.chars) != n or (self.gold is not None and len(self.gold) != n):
            raise ValueError("words, chars and gold must have equal non-zero length")

    def __len__(self) -> int:
        return len(self.words)


# ---------------------------------------------------------------------------
# reading and writing


def parse_conll(
    stream: TextIO | str | Iterable[str],
    token_column: int = 0,
    label_column: int | None = -1,
) -> list[Sentence]:
    """Read whitespace-separated columns; a blank line ends a sentence.

    ``label_column=None`` reads tokens only.  Lines starting with
    ``-DOCSTART-`` are skipped.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    sentences: list[Sentence] = []
    tokens: list[str] = []
    labels: list[str] = []
    rows: list[list[str]] = []

    def flush():
        if tokens:
            sentences.append(Sentence(list(tokens), list(labels), [list(r) for r in rows]))
        tokens.clear()
        labels.clear()
        rows.clear()

    for lineno, line in enumerate(stream, start=1):
        parts = line.split()
        if not parts:
            flush()
            continue
        if parts[0] == "-DOCSTART-":
            continue
        for col in (token_column, label_column):
            if col is not None and not -len(parts) <= col < len(parts):
                raise ConllFormatError(lineno, f"expected column {col}, found {len(parts)} column(s)")
        if label_column is not None and len(parts) < 2:
            raise ConllFormatError(lineno, "token line without a label column")
        tokens.append(parts[token_column])
        if label_column is not None:
            labels.append(parts[label_column])
        rows.append(parts)
    flush()
    return sentences


def read_conll(path: str | Path, token_column: int = 0, label_column: int | None = -1) -> list[Sentence]:
    with open(path, encoding="utf-8") as fh:
        return parse_conll(fh, token_column, label_column)


def serialize_conll(sentences: Sequence[Sentence], extra: Sequence[Sequence[str]] | None = None) -> str:
    """Inverse of :func:`parse_conll` with default columns.

    ``extra`` appends one more column per sentence (e.g. predicted tags).
    """
    out = io.StringIO()
    for k, sent in enumerate(sentences):
        for i, token in enumerate(sent.tokens):
            cols = [token]
            if sent.labels:
                cols.append(sent.labels[i])
            if extra is not None:
                cols.append(extra[k][i])
            out.write(" ".join(cols) + "\n")
        out.write("\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# normalization and tag schemes


def normalize_digits(token: str) -> str:
    return "".join("0" if unicodedata.category(ch) == "Nd" else ch for ch in token)


def split_tag(tag: str) -> tuple[str, str | None]:
    if tag == OUTSIDE or tag == PAD_LABEL:
        return tag, None
    prefix, sep, kind = tag.partition("-")
    if not sep or prefix not in ("B", "I", "E", "S") or not kind:
        raise ValueError(f"malformed tag {tag!r}")
    return prefix, kind


def to_bioes(labels: Sequence[str]) -> list[str]:
    """Convert BIO tags to BIOES.

    A dangling ``I-X`` (not continuing a ``B-X``/``I-X``) starts a new entity.
    """
    runs: list[tuple[int, int, str]] = []
    current = None
    for i, tag in enumerate(labels):
        prefix, kind = split_tag(tag)
        if prefix == "I" and current is not None and current[2] == kind:
            current[1] = i
        elif prefix in ("B", "I"):
            current = [i, i, kind]
            runs.append(current)
        elif prefix in ("E", "S"):
            raise ValueError(f"to_bioes expects BIO input, found {tag!r}")
        else:
            current = None
    out = [OUTSIDE] * len(labels)
    for start, end, kind in runs:
        if start == end:
            out[start] = f"S-{kind}"
        else:
            out[start] = f"B-{kind}"
            out[start + 1:end] = [f"I-{kind}"] * (end - start - 1)
            out[end] = f"E-{kind}"
    return out


def spans_to_tags(spans: Iterable[tuple[int, int, str]], n: int, scheme: str = "bioes") -> list[str]:
    """Encode non-overlapping inclusive spans as a tag sequence."""
    tags = [OUTSIDE] * n
    for start, end, kind in spans:
        if scheme == "bio":
            tags[start] = f"B-{kind}"
            for i in range(start + 1, end + 1):
                tags[i] = f"I-{kind}"
        elif start == end:
            tags[start] = f"S-{kind}"
        else:
            tags[start] = f"B-{kind}"
            for i in range(start + 1, end):
                tags[i] = f"I-{kind}"
            tags[end] = f"E-{kind}"
    return tags


@dataclass
class LabelScheme:
    """BIOES tag inventory: ``O``, four tags per entity type, then padding."""

    entity_types: list[str]

    def __post_init__(self):
        self.entity_types = sorted(set(self.entity_types))
        self.tags = [OUTSIDE]
        for kind in self.entity_types:
            self.tags.extend(f"{p}-{kind}" for p in BIOES_PREFIXES)
        self.tags.append(PAD_LABEL)
        self.index = {t: i for i, t in enumerate(self.tags)}

    @classmethod
    def from_labels(cls, label_seqs: Iterable[Sequence[str]]) -> "LabelScheme":
        kinds = set()
        for seq in label_seqs:
            for tag in seq:
                _, kind = split_tag(tag)
                if kind is not None:
                    kinds.add(kind)
        return cls(sorted(kinds))

    def __len__(self) -> int:
        return len(self.tags)

    @property
    def pad_index(self) -> int:
        return self.index[PAD_LABEL]

    def encode(self, tags: Sequence[str]) -> np.ndarray:
        try:
            return np.array([self.index[t] for t in tags], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"tag {exc.args[0]!r} not in label scheme") from None

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.tags[i] for i in ids]

    def allowed_transitions(self) -> np.ndarray:
        """Boolean [from, to] matrix of BIOES-valid transitions (padding excluded)."""
        T = len(self.tags)
        ok = np.zeros((T, T), dtype=bool)
        for a, ta in enumerate(self.tags):
            for b, tb in enumerate(self.tags):
                if PAD_LABEL in (ta, tb):
                    continue
                pa, ka = split_tag(ta)
                pb, kb = split_tag(tb)
                if pa in ("B", "I"):
                    ok[a, b] = pb in ("I", "E") and ka == kb
                else:
                    ok[a, b] = pb in ("B", "S", OUTSIDE)
        return ok

    def allowed_starts(self) -> np.ndarray:
        return np.array([split_tag(t)[0] in ("B", "S", OUTSIDE) for t in self.tags])


# ---------------------------------------------------------------------------
# vocabularies


class Vocab:
    """Word and character indices; ``<pad>`` is 0 and ``<unk>`` is 1 in both."""

    specials = (PAD, UNK)

    def __init__(self, tokens: Iterable[str], chars: Iterable[str]):
        self.tokens = list(self.specials) + sorted(set(tokens) - set(self.specials))
        self.chars = list(self.specials) + sorted(set(chars) - set(self.specials))
        self.token_index = {t: i for i, t in enumerate(self.tokens)}
        self.char_index = {c: i for i, c in enumerate(self.chars)}

    pad_index = 0
    unk_index = 1

    def __len__(self) -> int:
        return len(self.tokens)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.tokens == other.tokens and self.chars == other.chars

    def lookup(self, token: str) -> int:
        """Exact match, then lowercase, then unknown."""
        idx = self.token_index.get(token)
        if idx is None:
            idx = self.token_index.get(token.lower(), self.unk_index)
        return idx

    def char_ids(self, token: str) -> np.ndarray:
        return np.array([self.char_index.get(c, self.unk_index) for c in token], dtype=np.int64)

    def dumps(self) -> str:
        lines = ["\t".join(["#vocab", *self.specials, str(len(self.tokens)), str(len(self.chars))])]
        lines += self.tokens[len(self.specials):]
        lines += self.chars[len(self.specials):]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Vocab":
        lines = text.split("\n")
        header = lines[0].split("\t")
        if header[0] != "#vocab" or tuple(header[1:3]) != cls.specials:
            raise ValueError("not a vocabulary file")
        n_tok, n_chr = int(header[3]) - 2, int(header[4]) - 2
        body = lines[1:]
        return cls(body[:n_tok], body[n_tok:n_tok + n_chr])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def build_vocab(sentences: Iterable[Sentence], pretrained: Iterable[str] = (), digits: bool = True) -> Vocab:
    """Vocabulary over training tokens plus the requested pretrained tokens."""
    norm = normalize_digits if digits else (lambda t: t)
    tokens: set[str] = set(pretrained)
    chars: set[str] = set()
    for sent in sentences:
        for tok in sent.tokens:
            t = norm(tok)
            tokens.add(t)
            chars.update(t)
    return Vocab(tokens, chars)


def encode_sentence(sentence: Sentence, vocab: Vocab, scheme: LabelScheme | None = None, digits: bool = True) -> EncodedSentence:
    toks = [normalize_digits(t) for t in sentence.tokens] if digits else list(sentence.tokens)
    gold = scheme.encode(sentence.labels) if scheme is not None and sentence.labels else None
    return EncodedSentence(
        words=np.array([vocab.lookup(t) for t in toks], dtype=np.int64),
        chars=[vocab.char_ids(t) for t in toks],
        gold=gold,
    )


def prepare_labels(sentences: Iterable[Sentence]) -> list[Sentence]:
    """BIOES-labelled copies of the sentences; BIOES input passes through."""
    out = []
    for s in sentences:
        prefixes = {split_tag(t)[0] for t in s.labels}
        if prefixes & {"E", "S"}:
            out.append(s)
        else:
            out.append(Sentence(s.tokens, to_bioes(s.labels), s.columns))
    return out
