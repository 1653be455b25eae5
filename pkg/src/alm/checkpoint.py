"""Single-file checkpoint persistence for model parameters.

Layout: one JSON header line (format version, model config, tokenizer hash,
step, seed, metrics snapshot), then one JSON line per tensor giving name,
shape, and byte offset, then a blank line, then the concatenated raw
little-endian float64 payloads.  Loading validates the tensor inventory
against the model's canonical naming scheme and refuses a tokenizer-hash
mismatch, so a checkpoint can never silently pair with the wrong vocab.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np

from .errors import CheckpointError
from .model import ModelConfig, Parameters, parameter_shapes

FORMAT_VERSION = 1


def tokenizer_hash(path: str) -> str:
    """SHA-256 hex digest of a tokenizer file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def save_checkpoint(
    path: str,
    params: Parameters,
    model_config: ModelConfig,
    tok_hash: str = "",
    step: int = 0,
    seed: int = 0,
    n_classes: int | None = None,
    metrics: dict | None = None,
) -> None:
    """Write params atomically (temp file + rename) in the single-file layout."""
    header = {
        "format_version": FORMAT_VERSION,
        "model_config": model_config.to_json(),
        "n_classes": n_classes,
        "tokenizer_hash": tok_hash,
        "step": step,
        "seed": seed,
        "metrics": metrics or {},
    }
    entries = []
    offset = 0
    for name, t in params.items():
        entries.append({"name": name, "shape": list(t.shape), "offset": offset})
        offset += t.data.nbytes
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ckpt-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(json.dumps(header).encode("utf-8") + b"\n")
            for entry in entries:
                fh.write(json.dumps(entry).encode("utf-8") + b"\n")
            fh.write(b"\n")
            for _, t in params.items():
                fh.write(np.ascontiguousarray(t.data, dtype="<f8").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_header(path: str) -> tuple[dict, list[dict]]:
    """Read only the header and tensor directory (no payload)."""
    with open(path, "rb") as fh:
        header = _json_line(fh.readline(), path, "header")
        entries = []
        while True:
            raw = fh.readline()
            if raw in (b"\n", b""):
                break
            entries.append(_json_line(raw, path, "tensor entry"))
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: format_version {header.get('format_version')!r}, expected {FORMAT_VERSION}"
        )
    return header, entries


def _json_line(raw: bytes, path: str, what: str) -> dict:
    try:
        obj = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise CheckpointError(f"{path}: malformed {what} line") from None
    if not isinstance(obj, dict):
        raise CheckpointError(f"{path}: {what} is not a JSON object")
    return obj


def load_checkpoint(
    path: str, expected_tokenizer_hash: str | None = None
) -> tuple[Parameters, ModelConfig, dict]:
    """Load (params, config, header); bit-exact inverse of save_checkpoint."""
    header, entries = read_header(path)
    if expected_tokenizer_hash is not None and header["tokenizer_hash"] != expected_tokenizer_hash:
        raise CheckpointError(
            f"{path}: tokenizer hash mismatch (checkpoint {header['tokenizer_hash'][:12]}..., "
            f"given {expected_tokenizer_hash[:12]}...)"
        )
    try:
        config = ModelConfig.from_json(header["model_config"])
    except (KeyError, TypeError):
        raise CheckpointError(f"{path}: header carries no valid model_config") from None
    n_classes = header.get("n_classes")
    expected = {name: shape for name, shape, _ in parameter_shapes(config, n_classes)}
    seen = [e.get("name") for e in entries]
    if sorted(seen) != sorted(expected):
        missing = set(expected) - set(seen)
        extra = set(seen) - set(expected)
        raise CheckpointError(
            f"{path}: tensor inventory mismatch (missing {sorted(missing)}, extra {sorted(extra)})"
        )
    params = Parameters()
    with open(path, "rb") as fh:
        while fh.readline() not in (b"\n", b""):
            pass
        payload_start = fh.tell()
        for entry in entries:
            shape = tuple(int(s) for s in entry["shape"])
            if shape != expected[entry["name"]]:
                raise CheckpointError(
                    f"{path}: tensor {entry['name']!r} has shape {shape}, "
                    f"expected {expected[entry['name']]}"
                )
            count = int(np.prod(shape)) if shape else 1
            fh.seek(payload_start + int(entry["offset"]))
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise CheckpointError(f"{path}: truncated payload for tensor {entry['name']!r}")
            params.add(entry["name"], np.frombuffer(raw, dtype="<f8").reshape(shape).copy())
    return params, config, header
