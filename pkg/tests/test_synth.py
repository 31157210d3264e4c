"""Synthetic corpus generator: determinism, signal placement, carrier
disjointness, and the per-modality accuracy ceilings of the planted spec."""

import numpy as np
import pytest

from covexplain import (ANTI_DESC_TOKEN, ANTI_TEXT_TOKEN, DataError,
                        OfflineSignal, PRO_DESC_TOKEN, PRO_TEXT_TOKEN,
                        SignalSpec, StanceLabel, generate,
                        planted_fusion_spec)

SIGNAL_STATES = {"antivale", "provale"}


def _has_text_token(post):
    return ANTI_TEXT_TOKEN in post.text.split() or \
        PRO_TEXT_TOKEN in post.text.split()


def _has_desc_token(post):
    return ANTI_DESC_TOKEN in post.description.split() or \
        PRO_DESC_TOKEN in post.description.split()


# ---------------------------------------------------------------- spec checks

def test_spec_validation_rejects_bad_values():
    with pytest.raises(DataError):
        SignalSpec(n_records=0)
    with pytest.raises(DataError):
        SignalSpec(text_signal_strength=1.5)
    with pytest.raises(DataError):
        SignalSpec(desc_signal_strength=-0.1)
    with pytest.raises(DataError):
        SignalSpec(class_balance=2.0)
    with pytest.raises(DataError):
        SignalSpec(time_range=(5, 5))
    with pytest.raises(DataError):
        SignalSpec(carriers="mixed")


def test_disjoint_fractions_must_fit():
    with pytest.raises(DataError):
        SignalSpec(carriers="disjoint", text_signal_strength=0.7,
                   offline_signal_fraction=0.4)
    # exactly 1.0 is allowed
    SignalSpec(carriers="disjoint", text_signal_strength=0.6,
               offline_signal_fraction=0.4)


def test_offline_signal_validation():
    cats = ("a", "b")
    with pytest.raises(DataError):
        OfflineSignal(cats, (1.0,), (0.5, 0.5), (0.5, 0.5))
    with pytest.raises(DataError):
        OfflineSignal(cats, (0.7, 0.7), (0.5, 0.5), (0.5, 0.5))
    with pytest.raises(DataError):
        OfflineSignal(cats, (-0.5, 1.5), (0.5, 0.5), (0.5, 0.5))
    u = OfflineSignal.uniform(cats)
    assert u.anti_probs == (0.5, 0.5)


# ------------------------------------------------------------- basic outputs

def test_generate_shape_ids_and_schema():
    corpus = generate(SignalSpec(n_records=120, seed=3))
    assert len(corpus) == 120
    ids = [p.id for p in corpus.posts]
    assert ids[0] == "r000" and ids[-1] == "r119"
    assert len(set(ids)) == 120
    assert corpus.schema.names == ("state", "race", "race_pic", "gender")
    assert corpus.schema.feature("gender").categories == ("g1", "g2", "g3")
    assert corpus.provenance == "synth:seed=3"


def test_generate_is_deterministic_per_spec():
    a = generate(SignalSpec(n_records=60, seed=11, text_signal_strength=0.4))
    b = generate(SignalSpec(n_records=60, seed=11, text_signal_strength=0.4))
    assert a.posts == b.posts
    c = generate(SignalSpec(n_records=60, seed=12, text_signal_strength=0.4))
    assert a.posts != c.posts


def test_timestamps_inside_range():
    lo, hi = 1_700_000_000, 1_700_000_100
    corpus = generate(SignalSpec(n_records=50, seed=0, time_range=(lo, hi)))
    for p in corpus.posts:
        assert lo <= p.timestamp < hi


def test_class_balance_extremes_and_middle():
    all_pro = generate(SignalSpec(n_records=40, seed=1, class_balance=1.0))
    assert all(p.label is StanceLabel.PRO for p in all_pro.posts)
    all_anti = generate(SignalSpec(n_records=40, seed=1, class_balance=0.0))
    assert all(p.label is StanceLabel.ANTI for p in all_anti.posts)
    mid = generate(SignalSpec(n_records=4000, seed=2))
    frac = mid.counts()[StanceLabel.PRO] / 4000
    assert abs(frac - 0.5) < 0.03


# ----------------------------------------------------------- token placement

def test_full_text_signal_plants_class_keyed_token():
    corpus = generate(SignalSpec(n_records=200, seed=5,
                                 text_signal_strength=1.0))
    for p in corpus.posts:
        tokens = p.text.split()
        want = ANTI_TEXT_TOKEN if p.label is StanceLabel.ANTI \
            else PRO_TEXT_TOKEN
        other = PRO_TEXT_TOKEN if p.label is StanceLabel.ANTI \
            else ANTI_TEXT_TOKEN
        assert tokens.count(want) == 1
        assert other not in tokens


def test_zero_text_signal_plants_nothing():
    corpus = generate(SignalSpec(n_records=200, seed=5,
                                 text_signal_strength=0.0))
    assert not any(_has_text_token(p) for p in corpus.posts)


def test_desc_signal_is_independent_of_text_signal():
    corpus = generate(SignalSpec(n_records=200, seed=6,
                                 text_signal_strength=0.0,
                                 desc_signal_strength=1.0))
    for p in corpus.posts:
        want = ANTI_DESC_TOKEN if p.label is StanceLabel.ANTI \
            else PRO_DESC_TOKEN
        assert want in p.description.split()
    assert not any(_has_text_token(p) for p in corpus.posts)


def test_partial_signal_fraction_tracks_strength():
    corpus = generate(SignalSpec(n_records=4000, seed=7,
                                 text_signal_strength=0.3))
    frac = sum(_has_text_token(p) for p in corpus.posts) / 4000
    assert abs(frac - 0.3) < 0.03


# ------------------------------------------------------------ planted fusion

def test_planted_spec_mixture_arithmetic():
    # ideal per-modality accuracy = carrier mass + half the rest
    assert 0.25 + 0.75 / 2 == 0.625
    assert 0.60 + 0.40 / 2 == 0.80
    assert (0.60 + 0.25) + 0.15 / 2 == pytest.approx(0.925, abs=1e-12)


def test_planted_spec_fields():
    spec = planted_fusion_spec(n_records=4000, seed=7)
    assert spec.carriers == "disjoint"
    assert spec.text_signal_strength == 0.60
    assert spec.offline_signal_fraction == 0.25
    state = spec.offline_signal["state"]
    assert set(state.categories) >= SIGNAL_STATES
    # signal categories carry zero mass under the noise distribution
    for cat, p in zip(state.categories, state.neutral_probs):
        assert (p == 0.0) == (cat in SIGNAL_STATES)


def test_planted_carriers_are_disjoint_and_class_keyed():
    corpus = generate(planted_fusion_spec(n_records=3000, seed=9))
    n_text = n_off = 0
    for p in corpus.posts:
        has_text = _has_text_token(p)
        has_off = p.state in SIGNAL_STATES
        assert not (has_text and has_off)
        if has_text:
            n_text += 1
            want = ANTI_TEXT_TOKEN if p.label is StanceLabel.ANTI \
                else PRO_TEXT_TOKEN
            assert want in p.text.split()
        if has_off:
            n_off += 1
            want = "antivale" if p.label is StanceLabel.ANTI else "provale"
            assert p.state == want
    assert abs(n_text / 3000 - 0.60) < 0.03
    assert abs(n_off / 3000 - 0.25) < 0.03


def test_planted_ideal_rules_hit_mixture_ceilings():
    """Empirical accuracy of the per-modality ideal rules matches the
    mixture arithmetic to within sampling noise (3-sigma at n=4000)."""
    corpus = generate(planted_fusion_spec(n_records=4000, seed=7))
    labels = np.array([p.label.value for p in corpus.posts])
    rng = np.random.default_rng(0)
    coin = rng.integers(0, 2, size=len(labels))

    def rule_acc(pred):
        return float(np.mean(pred == labels))

    text_pred = np.array([
        1 if PRO_TEXT_TOKEN in p.text.split()
        else 0 if ANTI_TEXT_TOKEN in p.text.split() else -1
        for p in corpus.posts])
    off_pred = np.array([
        1 if p.state == "provale" else 0 if p.state == "antivale" else -1
        for p in corpus.posts])
    fused_pred = np.where(text_pred >= 0, text_pred, off_pred)

    for pred, ceiling in ((off_pred, 0.625), (text_pred, 0.80),
                          (fused_pred, 0.925)):
        acc = rule_acc(np.where(pred >= 0, pred, coin))
        sigma = (ceiling * (1 - ceiling) / 4000) ** 0.5
        assert abs(acc - ceiling) < 4 * sigma, (acc, ceiling)


def test_planted_ordering_of_modalities():
    # text carries more mass than offline, fusion dominates both
    corpus = generate(planted_fusion_spec(n_records=4000, seed=13))
    n_text = sum(_has_text_token(p) for p in corpus.posts)
    n_off = sum(p.state in SIGNAL_STATES for p in corpus.posts)
    assert n_off < n_text < n_off + n_text < 4000
