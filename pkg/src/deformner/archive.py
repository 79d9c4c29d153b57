"""Model archives: a versioned text manifest followed by raw little-endian tensors.

Layout::

    DEFORMNER-ARCHIVE <version>\\n
    <manifest byte length>\\n
    <manifest: JSON, sorted keys>
    <tensor payloads, float64 little-endian, in manifest order>
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .config import ModelConfig
from .data import LabelScheme, Vocab
from .model import Tagger

MAGIC = "DEFORMNER-ARCHIVE"
FORMAT_VERSION = 1
DTYPE = "<f8"


class ArchiveError(ValueError):
    pass


def dumps(model: Tagger) -> bytes:
    tensors, payload, offset = [], [], 0
    for name, p in model.parameters().items():
        raw = np.ascontiguousarray(p.data, dtype=DTYPE).tobytes()
        tensors.append({"name": name, "shape": list(p.shape), "dtype": DTYPE,
                        "offset": offset, "nbytes": len(raw)})
        payload.append(raw)
        offset += len(raw)
    manifest = {
        "format_version": FORMAT_VERSION,
        "model_config": asdict(model.config),
        "entity_types": model.scheme.entity_types,
        "vocab": model.vocab.dumps(),
        "tensors": tensors,
    }
    text = json.dumps(manifest, sort_keys=True, ensure_ascii=False).encode("utf-8")
    header = f"{MAGIC} {FORMAT_VERSION}\n{len(text)}\n".encode("ascii")
    return header + text + b"".join(payload)


def loads(blob: bytes) -> Tagger:
    try:
        first, rest = blob.split(b"\n", 1)
        magic, version = first.decode("ascii").split(" ")
        length_line, rest = rest.split(b"\n", 1)
        length = int(length_line)
    except ValueError as exc:
        raise ArchiveError("not a model archive") from exc
    if magic != MAGIC:
        raise ArchiveError("not a model archive")
    if int(version) != FORMAT_VERSION:
        raise ArchiveError(f"archive format version {version}, expected {FORMAT_VERSION}")
    manifest = json.loads(rest[:length].decode("utf-8"))
    payload = rest[length:]

    model = Tagger(ModelConfig(**manifest["model_config"]), Vocab.loads(manifest["vocab"]),
                   LabelScheme(manifest["entity_types"]))
    state = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        expected = int(np.prod(shape, dtype=np.int64)) * 8
        if entry["dtype"] != DTYPE or entry["nbytes"] != expected:
            raise ArchiveError(f"tensor {entry['name']}: {entry['nbytes']} bytes for shape {shape}")
        chunk = payload[entry["offset"]:entry["offset"] + entry["nbytes"]]
        if len(chunk) != expected:
            raise ArchiveError(f"tensor {entry['name']} truncated")
        state[entry["name"]] = np.frombuffer(chunk, dtype=DTYPE).reshape(shape).astype(np.float64)
    try:
        model.load_state_dict(state)
    except (KeyError, ValueError) as exc:
        raise ArchiveError(f"archive does not match its configuration: {exc}") from exc
    return model


def save(model: Tagger, path: str | Path) -> None:
    """Write atomically: a failed save never leaves a partial archive at ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(dumps(model))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load(path: str | Path) -> Tagger:
    return loads(Path(path).read_bytes())
