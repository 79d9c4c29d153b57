"""Pattern-grammar sentences with planted PER / LOC / ORG entities.

Licensed NER corpora cannot ship with the package; this generator produces a
small, deterministic stand-in that exercises multi-token entities, digits and
context-dependent types.
"""
from __future__ import annotations

import numpy as np

from .data import Sentence, to_bioes

PERSONS = [["John"], ["Mary", "Smith"], ["Ahmed"], ["Li", "Wei"], ["Anna", "Maria", "Keller"],
           ["Carlos"], ["Olga", "Petrova"], ["Kenji", "Sato"]]
LOCATIONS = [["Paris"], ["New", "York"], ["Berlin"], ["Lake", "Geneva"], ["Tokyo"],
             ["Rio", "de", "Janeiro"], ["Cairo"], ["South", "Africa"]]
ORGANIZATIONS = [["Acme"], ["United", "Nations"], ["Globex", "Corp"], ["Red", "Cross"],
                 ["Initech"], ["World", "Health", "Organization"], ["Umbrella", "Ltd"]]

LEXICON = {"PER": PERSONS, "LOC": LOCATIONS, "ORG": ORGANIZATIONS}

# slot names in braces; everything else is a literal token
TEMPLATES = [
    "{PER} visited {LOC} in {YEAR} .",
    "{PER} works for {ORG} .",
    "He bought {NUM} shares of {ORG} in {YEAR} .",
    "{ORG} opened an office in {LOC} .",
    "{PER} and {PER} met at {ORG} headquarters .",
    "The meeting in {LOC} was chaired by {PER} .",
    "Officials from {ORG} arrived in {LOC} on Monday .",
    "{PER} said {ORG} will expand to {LOC} .",
    "It rained in {LOC} .",
    "{NUM} people attended the talk .",
]


def generate_sentence(rng: np.random.Generator) -> Sentence:
    template = TEMPLATES[rng.integers(len(TEMPLATES))]
    tokens: list[str] = []
    labels: list[str] = []
    for piece in template.split():
        if piece in ("{PER}", "{LOC}", "{ORG}"):
            kind = piece[1:-1]
            options = LEXICON[kind]
            words = options[rng.integers(len(options))]
            tokens.extend(words)
            labels.extend([f"B-{kind}"] + [f"I-{kind}"] * (len(words) - 1))
        elif piece == "{YEAR}":
            tokens.append(str(rng.integers(1950, 2030)))
            labels.append("O")
        elif piece == "{NUM}":
            tokens.append(str(rng.integers(2, 500)))
            labels.append("O")
        else:
            tokens.append(piece)
            labels.append("O")
    return Sentence(tokens, labels)


def generate_corpus(n_sentences: int = 50, seed: int = 0, scheme: str = "bioes") -> list[Sentence]:
    """``n_sentences`` labelled sentences; ``scheme`` is ``"bioes"`` or ``"bio"``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_sentences):
        s = generate_sentence(rng)
        if scheme == "bioes":
            s = Sentence(s.tokens, to_bioes(s.labels))
        out.append(s)
    return out
