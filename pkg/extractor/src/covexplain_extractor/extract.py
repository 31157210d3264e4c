"""Frozen-transformer feature extraction to CVXE embedding files.

Runs a pretrained checkpoint over one text field of a JSONL corpus,
mean-pools each of the last `layers` hidden layers over non-padding tokens,
concatenates the pooled vectors (dim = layers x hidden size), and writes the
rows in corpus order. The CVXE container and the text sanitizer match the
covexplain toolkit's documented formats byte for byte, so the output drops
straight into its train/eval/ablate pipeline.
"""

from __future__ import annotations

import json
import logging
import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger("covexplain_extractor")

CVXE_MAGIC = b"CVXE"
CVXE_VERSION = 1

FIELD_KEYS = {"text": "text", "description": "description"}
POOLINGS = ("mean",)

# same masking rules as the downstream toolkit: URLs first, then hashtags
_URL_RE = re.compile(r"https?://\S*")
_HASHTAG_RE = re.compile(r"(?<!\S)#\S*")


class ExtractorError(Exception):
    """Any configuration, corpus, or checkpoint problem."""


def sanitize_text(text: str) -> str:
    """Mask URLs with <URL> and '#'-initial tokens with <HASHTAG>."""
    return _HASHTAG_RE.sub("<HASHTAG>", _URL_RE.sub("<URL>", text))


@dataclass(frozen=True)
class ExtractorConfig:
    checkpoint: str
    corpus: str
    field: str = "text"
    pooling: str = "mean"
    layers: int = 4
    out: str = "embeddings.cvxe"
    batch_size: int = 16
    max_seq_len: int = 128

    def __post_init__(self):
        if self.field not in FIELD_KEYS:
            raise ExtractorError(
                f"field must be one of {sorted(FIELD_KEYS)}, got {self.field!r}")
        if self.pooling not in POOLINGS:
            raise ExtractorError(
                f"pooling must be one of {POOLINGS}, got {self.pooling!r}")
        if self.layers < 1:
            raise ExtractorError(f"layers must be >= 1, got {self.layers}")
        if self.batch_size < 1:
            raise ExtractorError(
                f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_seq_len < 2:
            raise ExtractorError(
                f"max_seq_len must be >= 2, got {self.max_seq_len}")


def read_corpus_field(path: str | Path, field: str) -> tuple[list[str], list[str]]:
    """(ids, raw texts) for one field of a JSONL corpus, in file order."""
    key = FIELD_KEYS[field]
    ids: list[str] = []
    texts: list[str] = []
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as e:
        raise ExtractorError(f"cannot read corpus file {path}: {e}") from None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise ExtractorError(
                f"{path}:{lineno}: invalid JSON: {e}") from None
        if not isinstance(rec, dict):
            raise ExtractorError(f"{path}:{lineno}: record is not an object")
        for want in ("id", key):
            if want not in rec or not isinstance(rec[want], str):
                raise ExtractorError(
                    f"{path}:{lineno}: missing or non-string field {want!r}")
        ids.append(rec["id"])
        texts.append(rec[key])
    if not ids:
        raise ExtractorError(f"{path}: corpus has no records")
    if len(set(ids)) != len(ids):
        raise ExtractorError(f"{path}: duplicate record ids")
    return ids, texts


def write_cvxe(path: str | Path, ids: list[str], rows: np.ndarray) -> None:
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2 or rows.shape[0] != len(ids):
        raise ExtractorError("row count must match id count")
    buf = bytearray()
    buf += CVXE_MAGIC
    buf += struct.pack("<H", CVXE_VERSION)
    buf += struct.pack("<Q", len(ids))
    for rid in ids:
        raw = rid.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ExtractorError(f"id too long for container: {rid[:32]!r}")
        buf += struct.pack("<H", len(raw))
        buf += raw
    buf += struct.pack("<I", rows.shape[1])
    buf += rows.tobytes()
    Path(path).write_bytes(bytes(buf))


def _load_checkpoint(config: ExtractorConfig):
    """Tokenized model pair, validated against the config before any output."""
    import torch
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(config.checkpoint)
        model = AutoModel.from_pretrained(config.checkpoint)
    except Exception as e:
        raise ExtractorError(
            f"cannot load checkpoint {config.checkpoint!r}: {e}") from None
    n_layers = getattr(model.config, "num_hidden_layers", None)
    hidden = getattr(model.config, "hidden_size", None)
    if not isinstance(n_layers, int) or not isinstance(hidden, int):
        raise ExtractorError(
            f"checkpoint {config.checkpoint!r} does not expose hidden layers")
    if config.layers > n_layers:
        raise ExtractorError(
            f"layers={config.layers} exceeds the checkpoint's "
            f"{n_layers} hidden layers")
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return tokenizer, model, hidden


def _pool_batch(tokenizer, model, texts: list[str], layers: int,
                max_seq_len: int) -> np.ndarray:
    import torch

    enc = tokenizer(texts, padding=True, truncation=True,
                    max_length=max_seq_len, return_tensors="pt")
    with torch.no_grad():
        out = model(**enc, output_hidden_states=True)
    mask = enc["attention_mask"].unsqueeze(-1).to(torch.float32)
    denom = mask.sum(dim=1).clamp(min=1.0)
    pooled = [(h.to(torch.float32) * mask).sum(dim=1) / denom
              for h in out.hidden_states[-layers:]]
    return torch.cat(pooled, dim=1).numpy().astype(np.float32)


def extract_embeddings(config: ExtractorConfig) -> Path:
    """Run the frozen checkpoint over the corpus and write the CVXE file.

    Rows are written in corpus order with ids copied verbatim. Records whose
    field is empty after sanitization get a zero row (id logged), keeping id
    alignment with the corpus trivial. Identical texts are embedded once and
    share the resulting row, so equal inputs give bit-equal outputs no matter
    how batches fall.
    """
    ids, raw = read_corpus_field(config.corpus, config.field)
    tokenizer, model, hidden = _load_checkpoint(config)
    dim = config.layers * hidden

    texts = [sanitize_text(t) for t in raw]
    unique: list[str] = []
    index: dict[str, int] = {}
    for t in texts:
        if t.strip() and t not in index:
            index[t] = len(unique)
            unique.append(t)

    pooled = np.zeros((len(unique), dim), dtype=np.float32)
    for start in range(0, len(unique), config.batch_size):
        chunk = unique[start:start + config.batch_size]
        pooled[start:start + len(chunk)] = _pool_batch(
            tokenizer, model, chunk, config.layers, config.max_seq_len)

    rows = np.zeros((len(ids), dim), dtype=np.float32)
    empty = 0
    for i, t in enumerate(texts):
        if t.strip():
            rows[i] = pooled[index[t]]
        else:
            empty += 1
            log.warning("empty %s field for record %s: zero row written",
                        config.field, ids[i])
    log.info("embedded %d records (%d unique texts, %d empty) at dim %d",
             len(ids), len(unique), empty, dim)
    write_cvxe(config.out, ids, rows)
    return Path(config.out)
