"""Dataset files, checkpoints, and attention export.

Datasets are one TSV per split (label <TAB> sentence A <TAB> sentence B) with
a label-map sidecar. Checkpoints are a single binary file: magic, version,
JSON header (config, vocab, label map, optimizer scalars, RNG state, blob
table), raw little-endian tensor blobs, and a trailing SHA-256 over all of
the preceding bytes so truncation or corruption is refused at load.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .knowledge import KnowledgeText, tokenize


class DataError(ValueError):
    """A dataset file failed to parse; message names the file and line."""


class CheckpointError(ValueError):
    """A checkpoint failed structural validation."""


class CheckpointVersionError(CheckpointError):
    """The checkpoint format version is not the one this code writes."""


class CheckpointIntegrityError(CheckpointError):
    """The checkpoint bytes do not match their recorded checksum/length."""


@dataclass
class ExamplePair:
    id: str
    premise_tokens: list[str]
    hypothesis_tokens: list[str]
    label: int
    ka: KnowledgeText | None = None
    kb: KnowledgeText | None = None


@dataclass
class DatasetSplit:
    name: str
    examples: list[ExamplePair] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)


def load_label_map(path: str) -> dict[str, int]:
    """Read label<TAB>index lines; indices must be exactly 0..K-1, unique."""
    mapping: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.rstrip("\n")
            if not stripped:
                continue
            parts = stripped.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{line_no}: expected label<TAB>index")
            name, idx = parts
            try:
                mapping[name] = int(idx)
            except ValueError as exc:
                raise DataError(f"{path}:{line_no}: index {idx!r} is not an integer") from exc
    indices = sorted(mapping.values())
    if not mapping or indices != list(range(len(mapping))):
        raise DataError(f"{path}: label indices must be exactly 0..K-1 with no gaps")
    return mapping


def load_pairs(path: str, label_map: dict[str, int], name: str = "split") -> DatasetSplit:
    """Load a TSV of labeled sentence pairs, preserving file order."""
    split = DatasetSplit(name=name)
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.rstrip("\n")
            if not stripped:
                continue
            parts = stripped.split("\t")
            if len(parts) != 3:
                raise DataError(
                    f"{path}:{line_no}: expected 3 tab-separated columns, got {len(parts)}"
                )
            label_name, sent_a, sent_b = parts
            if label_name not in label_map:
                raise DataError(f"{path}:{line_no}: unknown label {label_name!r}")
            tokens_a = tokenize(sent_a)
            tokens_b = tokenize(sent_b)
            if not tokens_a or not tokens_b:
                raise DataError(f"{path}:{line_no}: empty sentence")
            split.examples.append(
                ExamplePair(
                    id=str(line_no),
                    premise_tokens=tokens_a,
                    hypothesis_tokens=tokens_b,
                    label=label_map[label_name],
                )
            )
    return split


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = b"LXMK"
CHECKPOINT_VERSION = 1


def save_checkpoint(
    path: str,
    tensors: dict[str, np.ndarray],
    config: dict,
    vocab_tokens: list[str],
    label_map: dict[str, int],
    optimizer: dict,
    rng_state: dict | None,
    epoch: int = 0,
) -> None:
    """Write a versioned, checksummed bundle of named tensors and run state."""
    blobs = []
    table = []
    offset = 0
    for name, arr in tensors.items():
        raw = np.ascontiguousarray(arr).tobytes()
        table.append(
            {
                "name": name,
                "shape": list(arr.shape),
                "dtype": str(arr.dtype),
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        blobs.append(raw)
        offset += len(raw)
    header = {
        "config": config,
        "vocab": vocab_tokens,
        "label_map": label_map,
        "optimizer": optimizer,
        "rng_state": rng_state,
        "epoch": epoch,
        "tensors": table,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    body = (
        CHECKPOINT_MAGIC
        + struct.pack("<I", CHECKPOINT_VERSION)
        + struct.pack("<Q", len(header_bytes))
        + header_bytes
        + b"".join(blobs)
    )
    digest = hashlib.sha256(body).digest()
    with open(path, "wb") as fh:
        fh.write(body + digest)


@dataclass
class Checkpoint:
    config: dict
    vocab_tokens: list[str]
    label_map: dict[str, int]
    optimizer: dict
    rng_state: dict | None
    epoch: int
    tensors: dict[str, np.ndarray]


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4 + 4 + 8 + 32 or raw[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointIntegrityError(f"{path}: checksum mismatch (truncated or corrupt)")
    version = struct.unpack("<I", body[4:8])[0]
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"{path}: format version {version}, expected {CHECKPOINT_VERSION}"
        )
    header_len = struct.unpack("<Q", body[8:16])[0]
    header_end = 16 + header_len
    header = json.loads(body[16:header_end].decode("utf-8"))
    blob = body[header_end:]
    tensors: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        start, n = entry["offset"], entry["nbytes"]
        if start + n > len(blob):
            raise CheckpointIntegrityError(f"{path}: tensor {entry['name']!r} out of bounds")
        arr = np.frombuffer(blob[start : start + n], dtype=np.dtype(entry["dtype"]))
        tensors[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return Checkpoint(
        config=header["config"],
        vocab_tokens=header["vocab"],
        label_map=header["label_map"],
        optimizer=header["optimizer"],
        rng_state=header["rng_state"],
        epoch=header["epoch"],
        tensors=tensors,
    )


# ---------------------------------------------------------------------------
# Attention export
# ---------------------------------------------------------------------------


def export_attention(
    a: np.ndarray,
    premise_tokens: list[str],
    hypothesis_tokens: list[str],
    path: str,
) -> None:
    """Write an attention matrix as CSV: header = hypothesis tokens, first
    column = premise tokens, cells fixed to 6 decimal places."""
    a = np.asarray(a)
    if a.shape != (len(premise_tokens), len(hypothesis_tokens)):
        raise ValueError(
            f"attention shape {a.shape} does not match "
            f"{len(premise_tokens)} premise x {len(hypothesis_tokens)} hypothesis tokens"
        )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([""] + list(hypothesis_tokens))
        for i, tok in enumerate(premise_tokens):
            writer.writerow([tok] + [f"{v:.6f}" for v in a[i]])
