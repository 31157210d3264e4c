"""Hashing text embedder, the CVXE embedding container, and feature fusion.

The embedder is a signed feature-hashing scheme over lowercase word unigrams
and bigrams: each n-gram maps through a seeded 64-bit hash to a bucket and a
sign, counts accumulate, and the vector is L2-normalized. It is a stand-in
with the same interface contract as any dense sentence encoder: fixed dim,
deterministic, zero vector for empty text.

CVXE layout (all little-endian):
    magic "CVXE" | version u16 | count u64
    count x (id_len u16, id bytes UTF-8)
    dim u32 | count*dim float32 row-major payload
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import (CategoricalSchema, Corpus, RawPost, encode_onehot,
                     sanitize_text)
from .errors import DataError, FormatError

CVXE_MAGIC = b"CVXE"
CVXE_VERSION = 1


@dataclass(frozen=True)
class EmbeddingMatrix:
    ids: tuple[str, ...]
    rows: np.ndarray            # (len(ids), dim) float32
    source_tag: str = ""

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float32)
        if rows.ndim != 2:
            raise DataError("embedding rows must be a 2-D array")
        object.__setattr__(self, "rows", rows)
        if len(self.ids) != rows.shape[0]:
            raise FormatError(
                f"count mismatch: {len(self.ids)} ids vs {rows.shape[0]} rows")
        if rows.shape[1] == 0:
            raise FormatError("embedding dim must be positive")
        if len(set(self.ids)) != len(self.ids):
            raise DataError("embedding ids must be unique")
        if not np.isfinite(rows).all():
            raise FormatError("non-finite values in embedding rows")

    @property
    def dim(self) -> int:
        return int(self.rows.shape[1])

    @cached_property
    def _index(self) -> dict[str, int]:
        return {rid: i for i, rid in enumerate(self.ids)}

    def row(self, rid: str) -> np.ndarray:
        try:
            return self.rows[self._index[rid]]
        except KeyError:
            raise DataError(f"no embedding row for record {rid!r}") from None

    def has(self, rid: str) -> bool:
        return rid in self._index


def _hash64(data: bytes, key: bytes) -> int:
    return int.from_bytes(
        hashlib.blake2b(data, digest_size=8, key=key).digest(), "little")


def hash_embed(text: str, dim: int, seed: int = 0) -> np.ndarray:
    """Signed hashing embedding of one (already sanitized) text.

    Empty/whitespace-only text gives the zero vector; anything else comes out
    with unit L2 norm.
    """
    if dim < 2:
        raise DataError(f"embedding dim must be >= 2, got {dim}")
    tokens = text.lower().split()
    vec = np.zeros(dim, dtype=np.float64)
    if not tokens:
        return vec.astype(np.float32)
    key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    grams = list(tokens)
    grams.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    for g in grams:
        h = _hash64(g.encode("utf-8"), key)
        sign = 1.0 if h & 1 == 0 else -1.0
        vec[(h >> 1) % dim] += sign
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec.astype(np.float32)


def embed_corpus(corpus: Corpus, field: str, dim: int, seed: int = 0) -> EmbeddingMatrix:
    """Sanitize and hash-embed one text field ("text" or "description")."""
    if field not in ("text", "description"):
        raise DataError(f"unknown text field {field!r}")
    rows = np.stack([
        hash_embed(sanitize_text(getattr(p, field)), dim, seed)
        for p in corpus.posts
    ]) if corpus.posts else np.zeros((0, dim), np.float32)
    ids = tuple(p.id for p in corpus.posts)
    return EmbeddingMatrix(ids, rows, source_tag=f"hashing:{field}:d{dim}:s{seed}")


def write_embeddings(matrix: EmbeddingMatrix, path: str | Path) -> None:
    buf = bytearray()
    buf += CVXE_MAGIC
    buf += struct.pack("<H", CVXE_VERSION)
    buf += struct.pack("<Q", len(matrix.ids))
    for rid in matrix.ids:
        raw = rid.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise FormatError(f"id too long for container: {rid[:32]!r}...")
        buf += struct.pack("<H", len(raw))
        buf += raw
    buf += struct.pack("<I", matrix.dim)
    buf += np.ascontiguousarray(matrix.rows, dtype="<f4").tobytes()
    Path(path).write_bytes(bytes(buf))


def read_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Parse and validate a CVXE file; raises FormatError naming the defect."""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise DataError(f"cannot read embeddings file {path}: {e}") from None
    pos = 0

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise FormatError(f"truncated {what}")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    if take(4, "header") != CVXE_MAGIC:
        raise FormatError("bad magic")
    (version,) = struct.unpack("<H", take(2, "header"))
    if version != CVXE_VERSION:
        raise FormatError(f"unsupported version {version}")
    (count,) = struct.unpack("<Q", take(8, "header"))
    ids = []
    for _ in range(count):
        (id_len,) = struct.unpack("<H", take(2, "id table"))
        ids.append(take(id_len, "id table").decode("utf-8"))
    (dim,) = struct.unpack("<I", take(4, "header"))
    if dim == 0:
        raise FormatError("dim=0 in header")
    expected = count * dim * 4
    remaining = len(data) - pos
    if remaining < expected:
        raise FormatError("truncated payload")
    if remaining > expected:
        raise FormatError(
            f"count mismatch: {remaining - expected} trailing bytes beyond "
            f"{count} rows x {dim} dims")
    rows = np.frombuffer(data, dtype="<f4", count=count * dim, offset=pos)
    rows = rows.reshape(count, dim).astype(np.float32)
    if not np.isfinite(rows).all():
        raise FormatError("non-finite values in payload")
    return EmbeddingMatrix(tuple(ids), rows, source_tag=str(path))


@dataclass(frozen=True)
class Segment:
    name: str
    offset: int
    length: int


@dataclass(frozen=True)
class FusedVector:
    values: np.ndarray
    layout: tuple[Segment, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float32)
        object.__setattr__(self, "values", values)
        pos = 0
        for seg in self.layout:
            if seg.offset != pos or seg.length <= 0:
                raise DataError("layout segments must be contiguous and nonempty")
            pos += seg.length
        if pos != values.shape[0]:
            raise DataError("layout does not cover the value vector exactly")

    def segment(self, name: str) -> np.ndarray:
        for seg in self.layout:
            if seg.name == name:
                return self.values[seg.offset:seg.offset + seg.length]
        raise DataError(f"no segment named {name!r}")


def _plan_layout(schema: CategoricalSchema,
                 selected_online: Sequence[str],
                 selected_offline: Sequence[str],
                 online_dims: Mapping[str, int]) -> tuple[Segment, ...]:
    # canonical segment order: tweet, description, then offline in schema order
    online = [n for n in ("tweet", "description") if n in selected_online]
    unknown = set(selected_online) - {"tweet", "description"}
    if unknown:
        raise DataError(f"unknown online features: {sorted(unknown)}")
    offline = [f.name for f in schema.features if f.name in set(selected_offline)]
    missing = set(selected_offline) - set(offline)
    if missing:
        raise DataError(f"offline features not in schema: {sorted(missing)}")
    if not online and not offline:
        raise DataError("no features selected")
    segments: list[Segment] = []
    pos = 0
    for name in online:
        d = online_dims[name]
        segments.append(Segment(name, pos, d))
        pos += d
    for name in offline:
        w = schema.feature(name).width
        segments.append(Segment(name, pos, w))
        pos += w
    return tuple(segments)


_ONLINE_TO_FIELD = {"tweet": "text", "description": "description"}


def assemble_features(post: RawPost,
                      embeddings: Mapping[str, EmbeddingMatrix],
                      schema: CategoricalSchema,
                      selected_online: Sequence[str],
                      selected_offline: Sequence[str]) -> FusedVector:
    """Fuse one post's embedding segments and one-hot blocks into a vector."""
    online = [n for n in ("tweet", "description") if n in selected_online]
    for name in online:
        if name not in embeddings:
            raise DataError(f"no embedding matrix provided for {name!r}")
    layout = _plan_layout(schema, selected_online, selected_offline,
                          {n: embeddings[n].dim for n in online})
    parts = []
    for name in online:
        parts.append(embeddings[name].row(post.id))
    offline_sel = [s.name for s in layout if s.name not in ("tweet", "description")]
    if offline_sel:
        parts.append(encode_onehot(post, schema, offline_sel))
    return FusedVector(np.concatenate(parts) if parts else np.zeros(0, np.float32),
                       layout)


def assemble_matrix(posts: Sequence[RawPost],
                    embeddings: Mapping[str, EmbeddingMatrix],
                    schema: CategoricalSchema,
                    selected_online: Sequence[str],
                    selected_offline: Sequence[str],
                    ) -> tuple[np.ndarray, tuple[Segment, ...]]:
    """Batch form of assemble_features: one row per post, shared layout."""
    online = [n for n in ("tweet", "description") if n in selected_online]
    for name in online:
        if name not in embeddings:
            raise DataError(f"no embedding matrix provided for {name!r}")
    layout = _plan_layout(schema, selected_online, selected_offline,
                          {n: embeddings[n].dim for n in online})
    width = sum(s.length for s in layout)
    x = np.zeros((len(posts), width), dtype=np.float32)
    for seg in layout:
        sl = slice(seg.offset, seg.offset + seg.length)
        if seg.name in ("tweet", "description"):
            mat = embeddings[seg.name]
            for i, p in enumerate(posts):
                x[i, sl] = mat.row(p.id)
        else:
            for i, p in enumerate(posts):
                x[i, sl] = encode_onehot(p, schema, [seg.name])
    return x, layout
