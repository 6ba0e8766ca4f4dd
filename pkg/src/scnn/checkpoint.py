"""Binary checkpoint container.

Layout, all integers little-endian:

    bytes 0..7    magic b"SCNNCKPT"
    bytes 8..11   uint32 format version (currently 1)
    bytes 12..19  uint64 header length H
    bytes 20..20+H  UTF-8 JSON header
    remainder     concatenated raw float64 tensor payloads

The JSON header carries the model config, the sha256 of the vocabulary
export, and an index of tensor records (name, shape, byte offset into the
payload region, byte length). Floats are stored exactly as the in-memory
float64 values, so save followed by load is bit-identical.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from scnn.errors import FormatError, VocabularyMismatchError
from scnn.model import ModelConfig, ModelParams
from scnn.tensor import Tensor

MAGIC = b"SCNNCKPT"
VERSION = 1


def vocab_hash(export_text: str) -> str:
    """sha256 hex digest of a vocabulary export string."""
    return hashlib.sha256(export_text.encode("utf-8")).hexdigest()


def save(path, params: ModelParams, config: ModelConfig, vocab_sha256: str) -> None:
    """Write params to `path` in the container format above."""
    records = []
    payloads = []
    offset = 0
    for name, t in params.all_tensors():
        arr = np.ascontiguousarray(t.data, dtype=np.float64)
        if arr.dtype.byteorder == ">":  # big-endian hosts: normalize on disk
            arr = arr.astype("<f8")
        raw = arr.tobytes()
        records.append(
            {"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(raw)}
        )
        payloads.append(raw)
        offset += len(raw)
    header = {
        "config": config.to_dict(),
        "vocab_sha256": vocab_sha256,
        "tensors": records,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        for raw in payloads:
            fh.write(raw)


def load(path, expected_vocab_sha256: str | None = None):
    """Read a checkpoint. Returns (params, config, vocab_sha256).

    If `expected_vocab_sha256` is given and differs from the stored hash,
    raises VocabularyMismatchError: predictions from a model paired with
    the wrong vocabulary are meaningless.
    """
    blob = Path(path).read_bytes()
    if len(blob) < len(MAGIC) + 12:
        raise FormatError(f"{path}: file too short to be a checkpoint")
    if blob[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:len(MAGIC)]!r}, expected {MAGIC!r}")
    pos = len(MAGIC)
    (version,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    if version != VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    (header_len,) = struct.unpack_from("<Q", blob, pos)
    pos += 8
    if pos + header_len > len(blob):
        raise FormatError(f"{path}: truncated header (declares {header_len} bytes)")
    try:
        header = json.loads(blob[pos : pos + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: corrupt header: {exc}") from None
    pos += header_len
    payload = blob[pos:]

    for key in ("config", "vocab_sha256", "tensors"):
        if key not in header:
            raise FormatError(f"{path}: header missing {key!r}")
    stored_hash = header["vocab_sha256"]
    if expected_vocab_sha256 is not None and stored_hash != expected_vocab_sha256:
        raise VocabularyMismatchError(
            f"checkpoint was trained with vocabulary {stored_hash[:12]}... but the "
            f"current vocabulary hashes to {expected_vocab_sha256[:12]}..."
        )
    config = ModelConfig.from_dict(header["config"])

    tensors: dict[str, Tensor] = {}
    for rec in header["tensors"]:
        start, nbytes = rec["offset"], rec["nbytes"]
        if start + nbytes > len(payload):
            raise FormatError(f"{path}: tensor {rec['name']!r} extends past end of file")
        shape = tuple(rec["shape"])
        expected = int(np.prod(shape, dtype=np.int64)) * 8 if shape else 8
        if nbytes != expected:
            raise FormatError(
                f"{path}: tensor {rec['name']!r} declares shape {shape} "
                f"({expected} bytes) but stores {nbytes} bytes"
            )
        arr = np.frombuffer(payload[start : start + nbytes], dtype="<f8").reshape(shape)
        tensors[rec["name"]] = Tensor(arr.astype(np.float64, copy=True), requires_grad=True)

    params = ModelParams(embedding=_take(tensors, "embedding", path))
    params.embedding.requires_grad = config.trainable_embeddings
    for h in config.kernel_widths:
        params.kernels[h] = _take(tensors, f"conv{h}.weight", path)
        params.biases[h] = _take(tensors, f"conv{h}.bias", path)
    params.dense_w = _take(tensors, "dense.weight", path)
    params.dense_b = _take(tensors, "dense.bias", path)
    if tensors:
        raise FormatError(f"{path}: unexpected extra tensors {sorted(tensors)}")
    return params, config, stored_hash


def _take(tensors: dict[str, Tensor], name: str, path) -> Tensor:
    try:
        return tensors.pop(name)
    except KeyError:
        raise FormatError(f"{path}: checkpoint is missing tensor {name!r}") from None
