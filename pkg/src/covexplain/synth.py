"""Synthetic corpus generation with controllable per-modality signal.

Class-keyed tokens carry the text signal (jabalpha for anti, jabbeta for
pro; descalpha/descbeta in profile descriptions); categorical features carry
signal through class-conditional category distributions. Two carrier modes:

  independent  each record may get a text token (text_signal_strength), a
               description token (desc_signal_strength), and offline values
               are always drawn from the class-conditional distributions.

  disjoint     each record belongs to exactly one carrier group: text
               (text_signal_strength of records), offline
               (offline_signal_fraction), or pure noise. Signal categories
               and tokens appear only inside their group, so per-modality
               Bayes accuracies are exact mixture arithmetic.

Everything is driven by one seeded generator; equal specs produce equal
corpora.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .corpus import (CategoricalSchema, Corpus, RawPost, SchemaFeature,
                     StanceLabel)
from .errors import DataError

ANTI_TEXT_TOKEN = "jabalpha"
PRO_TEXT_TOKEN = "jabbeta"
ANTI_DESC_TOKEN = "descalpha"
PRO_DESC_TOKEN = "descbeta"

# wide mundane vocabulary keeps any single filler word rare, so trained
# models cannot pick up meaningful per-word label tilts from noise text
_FILLER_VOCAB = (
    "morning coffee weather traffic lunch meeting weekend photo music game "
    "movie book garden recipe flight hotel market stadium puppy length "
    "river mountain lamp window chair ticket budget printer laptop street "
    "bridge harbor bakery museum library kitchen jacket umbrella bicycle "
    "train subway airport station corner avenue plaza fountain bench tree "
    "cloud sunrise sunset evening afternoon breakfast dinner snack salad "
    "sandwich noodle pepper tomato carrot apple orange banana grape lemon "
    "melon cherry walnut honey butter cheese yogurt cereal muffin bagel "
    "pencil notebook eraser stapler folder drawer shelf cabinet mirror "
    "pillow blanket curtain carpet ceiling hallway staircase balcony porch "
    "garage driveway mailbox fence gate lawn hedge shovel bucket ladder "
    "hammer wrench tape rope wire candle basket bottle kettle mug plate "
    "spoon fork napkin tray oven stove fridge freezer toaster blender "
    "radio speaker camera tripod battery charger cable remote screen "
    "keyboard mouse monitor desk couch sofa stool vase clock calendar "
    "stamp envelope postcard parcel luggage suitcase backpack wallet "
    "glove scarf sweater boots sandals raincoat helmet whistle compass "
    "tent lantern firewood marshmallow canoe paddle fishing anchor sail "
    "harvest orchard meadow valley canyon desert glacier island lagoon "
    "pier lighthouse ferry tunnel viaduct roundabout crosswalk sidewalk"
).split()


@dataclass(frozen=True)
class OfflineSignal:
    """Class-conditional (and neutral) distributions over one feature."""
    categories: tuple[str, ...]
    anti_probs: tuple[float, ...]
    pro_probs: tuple[float, ...]
    neutral_probs: tuple[float, ...]

    def __post_init__(self):
        m = len(self.categories)
        for name in ("anti_probs", "pro_probs", "neutral_probs"):
            p = getattr(self, name)
            if len(p) != m:
                raise DataError(f"{name} must have {m} entries")
            if abs(sum(p) - 1.0) > 1e-9 or min(p) < 0:
                raise DataError(f"{name} must be a probability distribution")

    @staticmethod
    def uniform(categories: tuple[str, ...]) -> "OfflineSignal":
        p = tuple(1.0 / len(categories) for _ in categories)
        return OfflineSignal(categories, p, p, p)


def _default_offline() -> dict[str, OfflineSignal]:
    return {
        "state": OfflineSignal.uniform(
            ("brookfield", "crestwood", "lakeshore", "pinehill")),
        "race": OfflineSignal.uniform(("r1", "r2", "r3", "r4")),
        "race_pic": OfflineSignal.uniform(("p1", "p2", "p3", "p4")),
        "gender": OfflineSignal.uniform(("g1", "g2", "g3")),
    }


@dataclass(frozen=True)
class SignalSpec:
    n_records: int = 1000
    text_signal_strength: float = 0.5
    desc_signal_strength: float = 0.0
    offline_signal: Mapping[str, OfflineSignal] = field(
        default_factory=_default_offline)
    class_balance: float = 0.5           # P(label = pro)
    time_range: tuple[int, int] = (1_600_000_000, 1_640_000_000)
    seed: int = 0
    carriers: str = "independent"        # or "disjoint"
    offline_signal_fraction: float = 0.0  # disjoint mode only

    def __post_init__(self):
        if self.n_records < 1:
            raise DataError("n_records must be >= 1")
        for name in ("text_signal_strength", "desc_signal_strength",
                     "class_balance", "offline_signal_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DataError(f"{name} must be in [0, 1]")
        if self.time_range[0] >= self.time_range[1]:
            raise DataError("time_range must be a nonempty interval")
        if self.carriers not in ("independent", "disjoint"):
            raise DataError(f"unknown carriers mode {self.carriers!r}")
        if (self.carriers == "disjoint"
                and self.text_signal_strength + self.offline_signal_fraction > 1.0):
            raise DataError("disjoint carrier fractions exceed 1")


def planted_fusion_spec(n_records: int = 4000, seed: int = 38) -> SignalSpec:
    """Spec where text and offline signals live on disjoint record groups.

    60% of records carry a perfect text token, a disjoint 25% carry a
    perfectly informative state category, 15% are pure noise. Per-modality
    Bayes accuracies: offline-only 0.25 + 0.75/2 = 0.625, online-only
    0.60 + 0.40/2 = 0.80, hybrid 0.85 + 0.15/2 = 0.925.
    """
    # default seed picked so the last k=10 slice reproduces the nominal
    # 60/25/15 carrier mixture and train-majority rules cannot luck past
    # the per-modality ceilings on that slice; both assumptions back the
    # accuracy-bound checks
    neutral_states = ("brookfield", "crestwood", "lakeshore", "pinehill")
    cats = neutral_states + ("antivale", "provale")
    zeros = (0.0,) * len(neutral_states)
    state = OfflineSignal(
        categories=cats,
        anti_probs=zeros + (1.0, 0.0),
        pro_probs=zeros + (0.0, 1.0),
        neutral_probs=tuple(1.0 / 4 for _ in neutral_states) + (0.0, 0.0),
    )
    offline = _default_offline()
    offline["state"] = state
    return SignalSpec(
        n_records=n_records,
        text_signal_strength=0.60,
        desc_signal_strength=0.0,
        offline_signal=offline,
        class_balance=0.5,
        seed=seed,
        carriers="disjoint",
        offline_signal_fraction=0.25,
    )


def _filler_text(rng: np.random.Generator, lo: int = 6, hi: int = 12) -> list[str]:
    n = int(rng.integers(lo, hi + 1))
    return [str(w) for w in rng.choice(_FILLER_VOCAB, size=n, replace=True)]


def _insert(tokens: list[str], token: str, rng: np.random.Generator) -> list[str]:
    pos = int(rng.integers(0, len(tokens) + 1))
    return tokens[:pos] + [token] + tokens[pos:]


def generate(spec: SignalSpec) -> Corpus:
    """Materialize a corpus from a SignalSpec. Deterministic per spec."""
    rng = np.random.default_rng(spec.seed)
    width = len(str(spec.n_records - 1))
    feats = tuple(
        SchemaFeature(name, sig.categories)
        for name, sig in spec.offline_signal.items()
    )
    schema = CategoricalSchema(feats)
    posts: list[RawPost] = []
    for i in range(spec.n_records):
        label = StanceLabel.PRO if rng.random() < spec.class_balance \
            else StanceLabel.ANTI
        anti = label is StanceLabel.ANTI
        if spec.carriers == "disjoint":
            u = rng.random()
            text_carrier = u < spec.text_signal_strength
            offline_carrier = (not text_carrier and
                               u < spec.text_signal_strength
                               + spec.offline_signal_fraction)
        else:
            text_carrier = rng.random() < spec.text_signal_strength
            offline_carrier = True      # class-conditional draws everywhere
        text_tokens = _filler_text(rng)
        if text_carrier:
            token = ANTI_TEXT_TOKEN if anti else PRO_TEXT_TOKEN
            text_tokens = _insert(text_tokens, token, rng)
        desc_tokens = _filler_text(rng, 3, 7)
        if rng.random() < spec.desc_signal_strength:
            token = ANTI_DESC_TOKEN if anti else PRO_DESC_TOKEN
            desc_tokens = _insert(desc_tokens, token, rng)
        values: dict[str, str] = {}
        for name, sig in spec.offline_signal.items():
            if offline_carrier:
                probs = sig.anti_probs if anti else sig.pro_probs
            else:
                probs = sig.neutral_probs
            values[name] = sig.categories[int(rng.choice(len(sig.categories),
                                                         p=probs))]
        ts = int(rng.integers(spec.time_range[0], spec.time_range[1]))
        posts.append(RawPost(
            id=f"r{i:0{width}d}", timestamp=ts,
            text=" ".join(text_tokens), description=" ".join(desc_tokens),
            state=values["state"], race=values["race"],
            race_pic=values["race_pic"], gender=values["gender"],
            label=label,
        ))
    return Corpus(tuple(posts), schema, provenance=f"synth:seed={spec.seed}")
