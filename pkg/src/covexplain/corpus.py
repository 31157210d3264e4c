"""Post records, categorical schemas, and corpus operations.

Covers JSONL ingestion, text sanitization (hashtag/URL masking), one-hot
encoding of demographic categoricals, chronological slicing, and class
balancing. Everything downstream (embedding, training, ablation) consumes
the types defined here.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError

# Categorical attributes every post carries, in canonical order.
OFFLINE_FEATURES = ("state", "race", "race_pic", "gender")
# Text attributes, in canonical order (tweet body, profile description).
ONLINE_FEATURES = ("tweet", "description")

_RECORD_KEYS = (
    "id", "timestamp", "text", "description",
    "state", "race", "race_pic", "gender", "label",
)


class StanceLabel(Enum):
    ANTI = 0
    PRO = 1


_LABEL_STRINGS = {"anti": StanceLabel.ANTI, "pro": StanceLabel.PRO}
_LABEL_NAMES = {StanceLabel.ANTI: "anti", StanceLabel.PRO: "pro"}


def parse_label(s: str) -> StanceLabel:
    try:
        return _LABEL_STRINGS[s]
    except (KeyError, TypeError):
        raise DataError(f"unknown label {s!r} (expected 'anti' or 'pro')") from None


def label_string(label: StanceLabel) -> str:
    return _LABEL_NAMES[label]


@dataclass(frozen=True)
class RawPost:
    id: str
    timestamp: int
    text: str
    description: str
    state: str
    race: str
    race_pic: str
    gender: str
    label: StanceLabel

    def __post_init__(self):
        if not self.id:
            raise DataError("post id must be a nonempty string")
        if self.timestamp < 0:
            raise DataError(f"post {self.id!r}: timestamp must be >= 0")

    def categorical(self, feature: str) -> str:
        if feature not in OFFLINE_FEATURES:
            raise DataError(f"unknown categorical feature {feature!r}")
        return getattr(self, feature)


class UnknownPolicy(Enum):
    EXTRA_SLOT = "extra_slot"
    REJECT = "reject"


@dataclass(frozen=True)
class SchemaFeature:
    name: str
    categories: tuple[str, ...]
    unknown_policy: UnknownPolicy = UnknownPolicy.EXTRA_SLOT

    def __post_init__(self):
        if not self.categories:
            raise DataError(f"feature {self.name!r}: category list is empty")
        if len(set(self.categories)) != len(self.categories):
            raise DataError(f"feature {self.name!r}: duplicate categories")

    @property
    def width(self) -> int:
        # reject keeps exactly m slots; extra_slot appends one for unknowns
        extra = 1 if self.unknown_policy is UnknownPolicy.EXTRA_SLOT else 0
        return len(self.categories) + extra


@dataclass(frozen=True)
class CategoricalSchema:
    features: tuple[SchemaFeature, ...]

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise DataError("schema features must have unique names")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def feature(self, name: str) -> SchemaFeature:
        for f in self.features:
            if f.name == name:
                return f
        raise DataError(f"schema has no feature named {name!r}")

    def width(self, selected: Iterable[str] | None = None) -> int:
        chosen = set(self.names if selected is None else selected)
        return sum(f.width for f in self.features if f.name in chosen)


@dataclass(frozen=True)
class Corpus:
    posts: tuple[RawPost, ...]
    schema: CategoricalSchema
    provenance: str = ""

    def __post_init__(self):
        seen: set[str] = set()
        for p in self.posts:
            if p.id in seen:
                raise DataError(f"duplicate post id {p.id!r}")
            seen.add(p.id)
        for f in self.schema.features:
            if f.unknown_policy is not UnknownPolicy.REJECT:
                continue
            cats = set(f.categories)
            for p in self.posts:
                v = p.categorical(f.name)
                if v not in cats:
                    raise DataError(
                        f"feature {f.name!r}: value {v!r} (post {p.id!r}) not in "
                        f"schema and policy is reject"
                    )

    def __len__(self) -> int:
        return len(self.posts)

    def counts(self) -> dict[StanceLabel, int]:
        out = {StanceLabel.ANTI: 0, StanceLabel.PRO: 0}
        for p in self.posts:
            out[p.label] += 1
        return out


def infer_schema(posts: Sequence[RawPost],
                 features: Sequence[str] = OFFLINE_FEATURES) -> CategoricalSchema:
    """Build a schema from observed values; categories sorted lexicographically."""
    feats = []
    for name in features:
        cats = sorted({p.categorical(name) for p in posts})
        if not cats:
            cats = ["<none>"]
        feats.append(SchemaFeature(name, tuple(cats)))
    return CategoricalSchema(tuple(feats))


def ingest_records(path: str | Path,
                   schema: CategoricalSchema | None = None) -> Corpus:
    """Read a JSONL corpus file into a validated Corpus.

    One object per line with keys id, timestamp, text, description, state,
    race, race_pic, gender, label ("anti"|"pro"). Blank lines are skipped.
    Errors carry the 1-based line number, the duplicate id, or the unknown
    label.
    """
    path = Path(path)
    posts: list[RawPost] = []
    seen: set[str] = set()
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read corpus file {path}: {e}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"line {lineno}: malformed JSON ({e.msg})") from None
            if not isinstance(obj, dict):
                raise DataError(f"line {lineno}: record must be a JSON object")
            for key in _RECORD_KEYS:
                if key not in obj:
                    raise DataError(f"line {lineno}: missing key {key!r}")
            ts = obj["timestamp"]
            if isinstance(ts, bool) or not isinstance(ts, int):
                raise DataError(f"line {lineno}: timestamp must be an integer")
            try:
                label = parse_label(obj["label"])
            except DataError as e:
                raise DataError(f"line {lineno}: {e}") from None
            rid = obj["id"]
            if not isinstance(rid, str) or not rid:
                raise DataError(f"line {lineno}: id must be a nonempty string")
            if rid in seen:
                raise DataError(f"line {lineno}: duplicate id {rid!r}")
            seen.add(rid)
            try:
                post = RawPost(
                    id=rid, timestamp=ts,
                    text=str(obj["text"]), description=str(obj["description"]),
                    state=str(obj["state"]), race=str(obj["race"]),
                    race_pic=str(obj["race_pic"]), gender=str(obj["gender"]),
                    label=label,
                )
            except DataError as e:
                raise DataError(f"line {lineno}: {e}") from None
            posts.append(post)
    if schema is None:
        schema = infer_schema(posts)
    return Corpus(tuple(posts), schema, provenance=str(path))


def write_records(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back to the JSONL interchange format (UTF-8, LF)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in corpus.posts:
            obj = {
                "id": p.id, "timestamp": p.timestamp, "text": p.text,
                "description": p.description, "state": p.state, "race": p.race,
                "race_pic": p.race_pic, "gender": p.gender,
                "label": label_string(p.label),
            }
            fh.write(json.dumps(obj, ensure_ascii=False))
            fh.write("\n")


def save_schema(schema: CategoricalSchema, path: str | Path) -> None:
    obj = {"features": [
        {"name": f.name, "categories": list(f.categories),
         "unknown_policy": f.unknown_policy.value}
        for f in schema.features
    ]}
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def load_schema(path: str | Path) -> CategoricalSchema:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        feats = tuple(
            SchemaFeature(f["name"], tuple(f["categories"]),
                          UnknownPolicy(f.get("unknown_policy", "extra_slot")))
            for f in obj["features"]
        )
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise DataError(f"bad schema file {path}: {e}") from None
    return CategoricalSchema(feats)


# URL masking first (a URL may contain '#'), then whitespace-delimited tokens
# whose first character is '#'. Both replacements shrink the '#' count and
# leave no scheme substring, so the pass is idempotent.
_URL_RE = re.compile(r"https?://\S*")
_HASHTAG_RE = re.compile(r"(?<!\S)#\S*")


def sanitize_text(text: str) -> str:
    """Mask URLs with <URL> and '#'-initial tokens with <HASHTAG>."""
    return _HASHTAG_RE.sub("<HASHTAG>", _URL_RE.sub("<URL>", text))


def encode_onehot(post: RawPost, schema: CategoricalSchema,
                  selected: Iterable[str] | None = None) -> np.ndarray:
    """Concatenated one-hot blocks for the selected features, in schema order.

    A known value c with categories C lights the standard basis vector of its
    index. Unknown values go to the trailing extra slot, or raise when the
    feature's policy is reject.
    """
    chosen = set(schema.names if selected is None else selected)
    for name in chosen:
        schema.feature(name)  # raises on unknown selected name
    blocks: list[np.ndarray] = []
    for f in schema.features:
        if f.name not in chosen:
            continue
        block = np.zeros(f.width, dtype=np.float32)
        value = post.categorical(f.name)
        try:
            block[f.categories.index(value)] = 1.0
        except ValueError:
            if f.unknown_policy is UnknownPolicy.REJECT:
                raise DataError(
                    f"feature {f.name!r}: value {value!r} not in schema and "
                    f"policy is reject"
                ) from None
            block[-1] = 1.0
        blocks.append(block)
    if not blocks:
        return np.zeros(0, dtype=np.float32)
    return np.concatenate(blocks)


@dataclass(frozen=True)
class TimeSlices:
    k: int
    boundaries: tuple[int, ...]          # k+1 non-decreasing timestamps
    assignment: Mapping[str, int]        # post id -> slice index in [0, k)

    def __post_init__(self):
        if len(self.boundaries) != self.k + 1:
            raise DataError("boundaries must have k+1 entries")
        if any(b > a for b, a in zip(self.boundaries, self.boundaries[1:])):
            raise DataError("boundaries must be non-decreasing")


def chronological_split(corpus: Corpus, k: int) -> TimeSlices:
    """Split into k contiguous time slices of near-equal size.

    Posts are ordered by (timestamp, id); sizes are floor(N/k) with the first
    N mod k slices taking one extra (remainder to the front). The last slice
    is the evaluation slice by convention.
    """
    n = len(corpus.posts)
    if k <= 0:
        raise DataError(f"k must be positive, got {k}")
    if k > n:
        raise DataError(f"k={k} exceeds corpus size {n}")
    ordered = sorted(corpus.posts, key=lambda p: (p.timestamp, p.id))
    base, rem = divmod(n, k)
    assignment: dict[str, int] = {}
    boundaries: list[int] = []
    pos = 0
    for i in range(k):
        size = base + (1 if i < rem else 0)
        boundaries.append(ordered[pos].timestamp)
        for p in ordered[pos:pos + size]:
            assignment[p.id] = i
        pos += size
    boundaries.append(ordered[-1].timestamp)
    return TimeSlices(k=k, boundaries=tuple(boundaries), assignment=assignment)


def posts_in_slice(corpus: Corpus, slices: TimeSlices, index: int) -> list[RawPost]:
    if not 0 <= index < slices.k:
        raise DataError(f"slice index {index} out of range [0, {slices.k})")
    return [p for p in corpus.posts if slices.assignment[p.id] == index]


def split_train_test(corpus: Corpus,
                     slices: TimeSlices) -> tuple[list[RawPost], list[RawPost]]:
    """Slices 0..k-2 are training, slice k-1 is the held-out evaluation set."""
    train = [p for p in corpus.posts if slices.assignment[p.id] < slices.k - 1]
    test = [p for p in corpus.posts if slices.assignment[p.id] == slices.k - 1]
    return train, test


def write_split_manifest(slices: TimeSlices, path: str | Path) -> None:
    """CSV manifest with columns id,slice; rows in chronological order."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id,slice\n")
        for rid, s in slices.assignment.items():
            fh.write(f"{rid},{s}\n")


def subcorpus(corpus: Corpus, posts: Sequence[RawPost],
              provenance: str = "") -> Corpus:
    return Corpus(tuple(posts), corpus.schema,
                  provenance or corpus.provenance)


def balance_sample(corpus: Corpus, seed: int) -> Corpus:
    """Downsample the majority class to the minority count.

    Keeps every minority post, draws a uniform majority subset without
    replacement, and shuffles the combined order — all driven by the seed, so
    the returned post-id multiset is reproducible.
    """
    anti = [p for p in corpus.posts if p.label is StanceLabel.ANTI]
    pro = [p for p in corpus.posts if p.label is StanceLabel.PRO]
    if not anti or not pro:
        missing = "anti" if not anti else "pro"
        raise DataError(f"cannot balance: class {missing!r} is absent")
    minority, majority = (anti, pro) if len(anti) <= len(pro) else (pro, anti)
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(majority), size=len(minority), replace=False)
    kept = minority + [majority[i] for i in np.sort(idx)]
    order = rng.permutation(len(kept))
    balanced = tuple(kept[i] for i in order)
    return Corpus(balanced, corpus.schema, provenance=corpus.provenance)


def labels_array(posts: Sequence[RawPost]) -> np.ndarray:
    return np.array([p.label.value for p in posts], dtype=np.int64)
