import numpy as np
import pytest

from covexplain import (CategoricalSchema, Corpus, RawPost, SchemaFeature,
                        StanceLabel)


def make_post(i, label=StanceLabel.ANTI, ts=None, text="hello world",
              desc="a bio", state="brookfield", race="r1", race_pic="p1",
              gender="g1"):
    return RawPost(id=f"p{i:03d}", timestamp=1_600_000_000 + (ts if ts is not None else i),
                   text=text, description=desc, state=state, race=race,
                   race_pic=race_pic, gender=gender, label=label)


@pytest.fixture
def tiny_schema():
    return CategoricalSchema(features=(
        SchemaFeature("state", ("brookfield", "crestwood")),
        SchemaFeature("race", ("r1", "r2")),
        SchemaFeature("race_pic", ("p1", "p2")),
        SchemaFeature("gender", ("g1", "g2")),
    ))


@pytest.fixture
def tiny_corpus(tiny_schema):
    posts = []
    for i in range(12):
        label = StanceLabel.PRO if i % 2 else StanceLabel.ANTI
        posts.append(make_post(
            i, label=label, text=f"tweet number {i}",
            state="crestwood" if i % 3 == 0 else "brookfield",
            race="r2" if i % 2 else "r1",
            race_pic="p2" if i >= 6 else "p1",
            gender="g2" if i % 4 == 0 else "g1"))
    return Corpus(posts=tuple(posts), schema=tiny_schema)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def gradcheck_net(n_in, hidden, seed, dropout_p):
    """A net whose activations sit far from the LeakyReLU kink.

    Central differences are only a valid oracle at a point of
    differentiability: shifting every batch-norm output by +-3 (both
    activation branches stay exercised) keeps each perturbed forward pass on
    one smooth piece, so the finite-difference error is pure h^2 truncation.
    """
    from covexplain import init_params

    p = init_params(n_in, hidden, seed=seed, dropout_p=dropout_p)
    for layer in p.layers:
        if layer.has_bn:
            k = layer.beta.shape[0]
            layer.beta[:] = np.where(np.arange(k) % 2 == 0, 3.0,
                                     -3.0).astype(np.float32)
            layer.gamma[:] = 0.5
    return p
