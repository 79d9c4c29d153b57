"""Command-line entry points: train, tag, eval, inspect-offsets.

Settings come from, in increasing precedence: built-in defaults, a
``key=value`` config file (``--config``), then command-line flags.  Config
keys are the field names of :class:`ModelConfig` and :class:`TrainConfig`
plus the path keys ``train``, ``dev``, ``test``, ``embeddings``, ``model``,
``out`` and ``pred``.  Set ``DEFORMNER_LOG`` (e.g. ``INFO``) for progress logs.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import archive
from .config import ModelConfig, TrainConfig, override
from .data import LabelScheme, build_vocab, encode_sentence, prepare_labels, read_conll
from .embedding import load_pretrained, read_embedding_tokens
from .evaluation import evaluate, offset_kde
from .model import Tagger
from .train import fit

logger = logging.getLogger("deformner")

PATH_KEYS = ("train", "dev", "test", "embeddings", "model", "out", "pred")


class CliError(Exception):
    pass


def read_config_file(path: str | Path) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise CliError(f"{path}:{lineno}: expected key=value")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _coerce(value: str, kind):
    kind = str(kind)
    if "bool" in kind:
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise CliError(f"not a boolean: {value!r}")
    if "int" in kind:
        return int(value)
    if "float" in kind:
        if value.lower() in ("none", "off", ""):
            return None
        return float(value)
    return value


def resolve_settings(args: argparse.Namespace) -> tuple[dict, ModelConfig, TrainConfig]:
    raw = read_config_file(args.config) if args.config else {}
    known = {f.name: f.type for cls in (ModelConfig, TrainConfig) for f in fields(cls)}
    unknown = set(raw) - set(known) - set(PATH_KEYS)
    if unknown:
        raise CliError(f"unknown config keys: {', '.join(sorted(unknown))}")
    settings = {k: (_coerce(v, known[k]) if k in known else v) for k, v in raw.items()}
    flags = {
        "structure": args.structure, "offsets": args.offsets, "window": args.window,
        "seed": args.seed, "epochs": args.epochs, "lr": args.lr, "batch_size": args.batch,
        "hidden": args.hidden, "layers": args.layers, "dropout": args.dropout,
        "word_dim": args.word_dim,
    }
    settings.update({k: v for k, v in flags.items() if v is not None})
    if args.no_char:
        settings["use_chars"] = False
    for key in PATH_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    paths = {k: settings.get(k) for k in PATH_KEYS}
    try:
        model_cfg = override(ModelConfig(), **settings)
        train_cfg = override(TrainConfig(), **settings)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    return paths, model_cfg, train_cfg


def _require(paths: dict, *keys: str) -> None:
    for key in keys:
        if not paths.get(key):
            raise CliError(f"--{key} is required")
    for key in keys:
        if key not in ("model", "out") and not Path(paths[key]).is_file():
            raise CliError(f"cannot read {key} file {paths[key]}")


def _read_labelled(path) -> list:
    return prepare_labels(read_conll(path))


# ---------------------------------------------------------------------------
# commands


def cmd_train(paths: dict, model_cfg: ModelConfig, train_cfg: TrainConfig) -> int:
    _require(paths, "train", "model")
    if paths.get("dev"):
        _require(paths, "dev")
    if paths.get("embeddings"):
        _require(paths, "embeddings")
    train = _read_labelled(paths["train"])
    if not train:
        raise CliError("training file contains no sentences")
    dev = _read_labelled(paths["dev"]) if paths.get("dev") else []

    pretrained: set[str] = set()
    if paths.get("embeddings"):
        wanted = {t for s in train + dev for t in s.tokens}
        wanted |= {t.lower() for t in wanted}
        pretrained = read_embedding_tokens(paths["embeddings"]) & wanted
    vocab = build_vocab(train, pretrained, digits=model_cfg.normalize_digits)
    scheme = LabelScheme.from_labels(s.labels for s in train + dev)
    word_table = None
    if paths.get("embeddings"):
        word_table, covered = load_pretrained(paths["embeddings"], vocab, model_cfg.word_dim, train_cfg.seed)
        logger.info("pretrained vectors for %d of %d vocabulary entries", covered, len(vocab))
    model = Tagger(model_cfg, vocab, scheme, seed=train_cfg.seed, word_table=word_table)

    encoded = [encode_sentence(s, vocab, scheme, model_cfg.normalize_digits) for s in train]
    log_path = Path(paths["out"]) if paths.get("out") else Path(str(paths["model"]) + ".log")
    lines = ["epoch\tloss\tseconds\tdev_f1"]

    def log(line):
        lines.append(line)
        log_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    fit(model, encoded, train_cfg, dev=dev or None, log=log)
    archive.save(model, paths["model"])
    return 0


def _load_model(path) -> Tagger:
    try:
        return archive.load(path)
    except (archive.ArchiveError, OSError) as exc:
        raise CliError(f"cannot load model {path}: {exc}") from exc


def cmd_tag(paths: dict, *_) -> int:
    _require(paths, "model", "test", "out")
    model = _load_model(paths["model"])
    sentences = read_conll(paths["test"], label_column=None)
    predictions = model.predict(sentences)
    with open(paths["out"], "w", encoding="utf-8") as fh:
        for sent, tags in zip(sentences, predictions):
            for cols, tag in zip(sent.columns, tags):
                fh.write(" ".join([*cols, tag]) + "\n")
            fh.write("\n")
    return 0


def cmd_eval(paths: dict, *_) -> int:
    _require(paths, "test")
    gold = read_conll(paths["test"])
    if paths.get("pred"):
        _require(paths, "pred")
        predicted = [s.labels for s in read_conll(paths["pred"])]
    elif paths.get("model"):
        predicted = _load_model(paths["model"]).predict(gold)
    else:
        raise CliError("eval needs --pred or --model")
    try:
        report = evaluate([s.labels for s in gold], predicted)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    text = report.to_tsv()
    if paths.get("out"):
        Path(paths["out"]).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_inspect_offsets(paths: dict, *_) -> int:
    _require(paths, "model", "test", "out")
    model = _load_model(paths["model"])
    if not model.predictors:
        raise CliError("model has no deformable connections")
    out = Path(paths["out"])
    out.mkdir(parents=True, exist_ok=True)
    sentences = read_conll(paths["test"], label_column=None)
    names = model.wiring.connection_names()
    per_slot: dict[tuple[int, int], list[float]] = {}
    rows = ["sentence_id,connection_id,position,slot,offset"]
    for sid, offsets in enumerate(model.record_offsets(sentences)):
        for cid, field_ in enumerate(offsets):
            for pos in range(field_.shape[0]):
                for slot in range(field_.shape[1]):
                    value = float(field_[pos, slot])
                    rows.append(f"{sid},{cid},{pos},{slot},{value!r}")
                    per_slot.setdefault((cid, slot), []).append(value)
    (out / "offsets.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    for (cid, slot), values in sorted(per_slot.items()):
        if len(values) < 2:
            logger.warning("connection %s slot %d: fewer than 2 offsets, no density", names[cid], slot)
            continue
        curve = offset_kde(np.array(values))
        (out / f"density_c{cid}_s{slot}.csv").write_text(curve.to_csv(), encoding="utf-8")
    return 0


COMMANDS = {
    "train": cmd_train,
    "tag": cmd_tag,
    "eval": cmd_eval,
    "inspect-offsets": cmd_inspect_offsets,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deformner", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config")
        for key in PATH_KEYS:
            p.add_argument(f"--{key}")
        p.add_argument("--structure", type=int, choices=(1, 2, 3))
        p.add_argument("--offsets", type=int, metavar="K")
        p.add_argument("--window", type=int, metavar="W")
        p.add_argument("--seed", type=int)
        p.add_argument("--epochs", type=int)
        p.add_argument("--lr", type=float)
        p.add_argument("--batch", type=int)
        p.add_argument("--hidden", type=int)
        p.add_argument("--layers", type=int)
        p.add_argument("--dropout", type=float)
        p.add_argument("--word-dim", type=int)
        p.add_argument("--no-char", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("DEFORMNER_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        paths, model_cfg, train_cfg = resolve_settings(args)
        return COMMANDS[args.command](paths, model_cfg, train_cfg)
    except (CliError, OSError, ValueError) as exc:
        print(f"deformner {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
