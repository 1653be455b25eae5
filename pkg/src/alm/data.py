"""Corpus streaming, JSONL dataset loading, and train/test splitting.

Corpora are plain-text files (one document per line) or JSONL files with a
"document" field; a directory means every regular file inside it, in name
order.  Streaming is line-by-line, so peak memory stays bounded no matter
how large the file is.  All loaders report malformed input with file and
line number.
"""

from __future__ import annotations

import json
import os
from typing import Iterator, Sequence, TypeVar

import numpy as np

from .errors import ConfigError, InputError

Record = TypeVar("Record")


def _corpus_files(path: str) -> list[str]:
    if os.path.isdir(path):
        names = sorted(os.listdir(path))
        files = [os.path.join(path, n) for n in names]
        files = [f for f in files if os.path.isfile(f)]
        if not files:
            raise InputError(f"corpus directory {path} contains no files")
        return files
    if not os.path.isfile(path):
        raise InputError(f"corpus path not found: {path}")
    return [path]


def _decode_line(raw: bytes, path: str, lineno: int) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as err:
        raise InputError(f"{path}:{lineno}: undecodable byte at offset {err.start}") from None


def stream_corpus(path: str) -> Iterator[str]:
    """Yield documents lazily; blank lines are skipped."""
    for fname in _corpus_files(path):
        jsonl = fname.endswith(".jsonl")
        with open(fname, "rb") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = _decode_line(raw, fname, lineno).strip()
                if not line:
                    continue
                if jsonl:
                    obj = _parse_json(line, fname, lineno)
                    doc = _require_str(obj, "document", fname, lineno)
                    if doc.strip():
                        yield doc
                else:
                    yield line


def _parse_json(line: str, path: str, lineno: int) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as err:
        raise InputError(f"{path}:{lineno}: malformed JSON ({err.msg})") from None
    if not isinstance(obj, dict):
        raise InputError(f"{path}:{lineno}: expected a JSON object")
    return obj


def _require_str(obj: dict, key: str, path: str, lineno: int) -> str:
    if key not in obj or not isinstance(obj[key], str):
        raise InputError(f"{path}:{lineno}: missing or non-string field {key!r}")
    return obj[key]


def iter_jsonl(path: str) -> Iterator[tuple[int, dict]]:
    """Yield (lineno, object) for each non-blank line of a JSONL file."""
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = _decode_line(raw, path, lineno).strip()
            if line:
                yield lineno, _parse_json(line, path, lineno)


def load_pairs(path: str) -> list[tuple[str, str]]:
    """Load {"prompt", "completion"} records for LM fine-tuning."""
    pairs = []
    for lineno, obj in iter_jsonl(path):
        pairs.append(
            (_require_str(obj, "prompt", path, lineno), _require_str(obj, "completion", path, lineno))
        )
    if not pairs:
        raise InputError(f"no records in {path}")
    return pairs


def load_labeled(path: str) -> list[tuple[str, int]]:
    """Load {"text", "label"} records with binary labels."""
    records = []
    for lineno, obj in iter_jsonl(path):
        text = _require_str(obj, "text", path, lineno)
        label = obj.get("label")
        if label not in (0, 1):
            raise InputError(f"{path}:{lineno}: label must be 0 or 1, got {label!r}")
        records.append((text, int(label)))
    if not records:
        raise InputError(f"no records in {path}")
    return records


def load_gen_pairs(path: str) -> list[tuple[str, str]]:
    """Load {"hypothesis", "reference"} records for generation metrics."""
    pairs = []
    for lineno, obj in iter_jsonl(path):
        pairs.append(
            (
                _require_str(obj, "hypothesis", path, lineno),
                _require_str(obj, "reference", path, lineno),
            )
        )
    if not pairs:
        raise InputError(f"no records in {path}")
    return pairs


def split(
    dataset: Sequence[Record], train_fraction: float, seed: int
) -> tuple[list[Record], list[Record]]:
    """Seeded shuffle then exact prefix split into (train, test)."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = len(dataset)
    perm = np.random.default_rng(seed).permutation(n)
    n_train = round(n * train_fraction)
    train = [dataset[int(i)] for i in perm[:n_train]]
    test = [dataset[int(i)] for i in perm[n_train:]]
    return train, test
