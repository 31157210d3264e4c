"""Shapley attribution: exact and sampled estimators against a hand-solved
game, the four axioms on random table games, and the two concrete wirings."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covexplain import (Attribution, AttributionEntry, CoalitionGame,
                        DataError, FusedVector, Segment, attribution_csv,
                        attribution_html, explain_feature_groups,
                        explain_tokens, forward, hash_embed, init_params,
                        shapley_exact, shapley_sampled, softmax)
from conftest import make_post

# hand-solved 3-player game: marginal-average over all 6 permutations
ORACLE_TABLE = {
    frozenset(): 0.0, frozenset({0}): 1.0, frozenset({1}): 0.0,
    frozenset({2}): 0.0, frozenset({0, 1}): 2.0, frozenset({0, 2}): 2.0,
    frozenset({1, 2}): 0.0, frozenset({0, 1, 2}): 3.0,
}
ORACLE_PHI = [2.0, 0.5, 0.5]


def oracle_game():
    return CoalitionGame(n_players=3, value=lambda s: ORACLE_TABLE[s],
                         player_names=("a", "b", "c"))


def table_game(n, seed, offset=0.0):
    """Random game as a dense subset table; value(empty) pinned to offset."""
    rng = np.random.default_rng(seed)
    table = rng.uniform(-5, 5, size=1 << n)
    table[0] = offset

    def value(members):
        mask = 0
        for i in members:
            mask |= 1 << i
        return float(table[mask])

    return CoalitionGame(n_players=n, value=value,
                         player_names=tuple(f"p{i}" for i in range(n)))


# ------------------------------------------------------------------- oracle

def test_exact_matches_hand_solved_game():
    attr = shapley_exact(oracle_game())
    assert attr.phi() == pytest.approx(ORACLE_PHI, abs=1e-12)
    assert attr.baseline_value == 0.0
    assert attr.full_value == 3.0
    assert [e.name for e in attr.entries] == ["a", "b", "c"]


def test_sampled_converges_to_oracle():
    attr = shapley_sampled(oracle_game(), permutations=2000, seed=0)
    assert attr.phi() == pytest.approx(ORACLE_PHI, abs=0.15)


# -------------------------------------------------------------------- axioms

@pytest.mark.parametrize("n,seed", [(1, 0), (2, 1), (4, 2), (6, 3), (8, 4)])
def test_efficiency_exact(n, seed):
    game = table_game(n, seed, offset=1.25)
    attr = shapley_exact(game)
    assert float(attr.phi().sum()) == pytest.approx(
        attr.full_value - attr.baseline_value, abs=1e-9)


@pytest.mark.parametrize("perms", [1, 3, 50])
def test_efficiency_sampled_telescopes(perms):
    # each permutation's marginals sum to v(N) - v(empty) identically
    game = table_game(6, seed=9, offset=-2.0)
    attr = shapley_sampled(game, permutations=perms, seed=5)
    assert float(attr.phi().sum()) == pytest.approx(
        attr.full_value - attr.baseline_value, abs=1e-9)


def test_null_player_gets_zero():
    inner = table_game(4, seed=6)

    def value(members):
        return inner.value(frozenset(m for m in members if m != 4))

    game = CoalitionGame(n_players=5, value=value,
                         player_names=("p0", "p1", "p2", "p3", "dead"))
    attr = shapley_exact(game)
    assert abs(attr.phi()[4]) < 1e-12


def test_symmetric_players_get_equal_shares():
    # v depends only on |S|, so all players are interchangeable
    gains = {0: 0.0, 1: 1.0, 2: 1.5, 3: 4.0, 4: 4.5}

    def value(members):
        return gains[len(members)]

    game = CoalitionGame(n_players=4, value=value,
                         player_names=("w", "x", "y", "z"))
    phi = shapley_exact(game).phi()
    assert phi == pytest.approx([phi[0]] * 4, abs=1e-12)
    assert float(phi.sum()) == pytest.approx(4.5, abs=1e-12)


def test_additivity_of_games():
    g1 = table_game(5, seed=10)
    g2 = table_game(5, seed=11)

    def combined(members):
        return g1.value(members) + g2.value(members)

    game = CoalitionGame(n_players=5, value=combined,
                         player_names=g1.player_names)
    lhs = shapley_exact(game).phi()
    rhs = shapley_exact(g1).phi() + shapley_exact(g2).phi()
    assert lhs == pytest.approx(rhs, abs=1e-9)


@given(n=st.integers(1, 6), seed=st.integers(0, 50))
@settings(max_examples=30, deadline=None)
def test_efficiency_property(n, seed):
    attr = shapley_exact(table_game(n, seed))
    assert float(attr.phi().sum()) == pytest.approx(
        attr.full_value - attr.baseline_value, abs=1e-9)


# --------------------------------------------------------------- guard rails

def test_exact_enumeration_cap():
    game = CoalitionGame(n_players=21, value=lambda s: 0.0,
                         player_names=tuple(f"p{i}" for i in range(21)))
    with pytest.raises(DataError, match="exceeds the exact-enumeration cap"):
        shapley_exact(game)


def test_game_validation():
    with pytest.raises(DataError):
        CoalitionGame(n_players=0, value=lambda s: 0.0, player_names=())
    with pytest.raises(DataError):
        CoalitionGame(n_players=2, value=lambda s: 0.0, player_names=("a",))


def test_sampled_needs_permutations():
    with pytest.raises(DataError):
        shapley_sampled(oracle_game(), permutations=0)


def test_sampled_is_seed_deterministic():
    a = shapley_sampled(oracle_game(), permutations=40, seed=3)
    b = shapley_sampled(oracle_game(), permutations=40, seed=3)
    c = shapley_sampled(oracle_game(), permutations=40, seed=4)
    assert np.array_equal(a.phi(), b.phi())
    assert not np.array_equal(a.phi(), c.phi())


# ------------------------------------------------------- feature-group game

@pytest.fixture
def group_setup():
    layout = (Segment("tweet", 0, 4), Segment("description", 4, 2),
              Segment("state", 6, 3))
    rng = np.random.default_rng(0)
    fused = FusedVector(rng.normal(size=9).astype(np.float32), layout)
    baseline = rng.normal(size=9).astype(np.float32)
    params = init_params(9, 6, seed=1)
    return params, fused, baseline


def test_group_attribution_efficiency(group_setup):
    params, fused, baseline = group_setup
    attr = explain_feature_groups(params, fused, target_class=1,
                                  baseline=baseline, record_id="p007")
    assert attr.unit == "feature_group"
    assert attr.target == "p007"
    assert [e.name for e in attr.entries] == ["tweet", "description", "state"]
    full = float(softmax(forward(params, fused.values[None, :], "eval"))[0, 1])
    base = float(softmax(forward(params, baseline[None, :], "eval"))[0, 1])
    assert attr.full_value == pytest.approx(full, abs=1e-7)
    assert attr.baseline_value == pytest.approx(base, abs=1e-7)
    assert float(attr.phi().sum()) == pytest.approx(full - base, abs=1e-6)


def test_group_attribution_zero_at_baseline(group_setup):
    params, fused, _ = group_setup
    attr = explain_feature_groups(params, fused, target_class=0,
                                  baseline=fused.values.copy())
    assert attr.phi() == pytest.approx([0.0, 0.0, 0.0], abs=1e-12)


def test_group_attribution_classes_mirror(group_setup):
    # two-class softmax: attributions toward class 1 negate toward class 0
    params, fused, baseline = group_setup
    pro = explain_feature_groups(params, fused, 1, baseline)
    anti = explain_feature_groups(params, fused, 0, baseline)
    assert pro.phi() == pytest.approx(-anti.phi(), abs=1e-6)


def test_group_attribution_guards(group_setup):
    params, fused, baseline = group_setup
    with pytest.raises(DataError, match="baseline shape"):
        explain_feature_groups(params, fused, 1, baseline[:5])
    with pytest.raises(DataError, match="target_class"):
        explain_feature_groups(params, fused, 2, baseline)


# --------------------------------------------------------------- token game

@pytest.fixture
def token_setup():
    dim = 8
    params = init_params(dim, 6, seed=2)
    embed_fn = lambda text: hash_embed(text, dim, seed=0)
    post = make_post(1, text="Get the jab now please")
    return params, post, embed_fn


def test_token_attribution_structure(token_setup):
    params, post, embed_fn = token_setup
    attr = explain_tokens(params, post, embed_fn, target_class=1,
                          permutations=60, seed=0)
    assert attr.unit == "token"
    assert attr.target == post.id
    assert sorted(e.name for e in attr.entries) == \
        sorted(post.text.lower().split()) or \
        sorted(e.name for e in attr.entries) == sorted(post.text.split())
    mags = [abs(e.phi) for e in attr.entries]
    assert mags == sorted(mags, reverse=True)
    assert float(attr.phi().sum()) == pytest.approx(
        attr.full_value - attr.baseline_value, abs=1e-9)


def test_token_attribution_deterministic(token_setup):
    params, post, embed_fn = token_setup
    a = explain_tokens(params, post, embed_fn, 1, permutations=30, seed=7)
    b = explain_tokens(params, post, embed_fn, 1, permutations=30, seed=7)
    assert np.array_equal(a.phi(), b.phi())


def test_token_attribution_guards(token_setup):
    params, post, embed_fn = token_setup
    with pytest.raises(DataError, match="target_class"):
        explain_tokens(params, post, embed_fn, target_class=3)
    empty = make_post(2, text="")
    with pytest.raises(DataError, match="no tokens"):
        explain_tokens(params, empty, embed_fn, target_class=1)


# ----------------------------------------------------------------- renders

def _attr(entries, target="p001", unit="token", base=0.1, full=0.9):
    return Attribution(target=target, unit=unit, entries=tuple(entries),
                       baseline_value=base, full_value=full)


def test_csv_format_and_ranking():
    attr = _attr([
        AttributionEntry("alpha", 0.5, 0),
        AttributionEntry("beta", -1.25, 1),
        AttributionEntry("comma,name", 0.25, 2),
    ])
    got = attribution_csv(attr)
    assert got == ('rank,name,phi\n'
                   '1,beta,-1.25\n'
                   '2,alpha,0.5\n'
                   '3,"comma,name",0.25\n')


def test_csv_quotes_embedded_quotes():
    attr = _attr([AttributionEntry('say "hi"', 1.0, 0)])
    assert '1,"say ""hi""",1' in attribution_csv(attr)


def test_csv_uses_10_significant_digits():
    attr = _attr([AttributionEntry("x", 0.12345678901234, 0)])
    assert ",0.123456789\n" in attribution_csv(attr)


def test_html_colors_track_push_direction():
    attr = _attr([AttributionEntry("good", 0.4, 0),
                  AttributionEntry("bad", -0.2, 1)])
    html_pro = attribution_html(attr, target_class=1)
    # phi > 0 pushes toward the target; target is pro, so blue
    assert 'rgba(38,139,210,1.000)">good</span>' in html_pro
    assert 'rgba(220,50,47,0.500)">bad</span>' in html_pro
    html_anti = attribution_html(attr, target_class=0)
    assert 'rgba(220,50,47,1.000)">good</span>' in html_anti
    assert 'rgba(38,139,210,0.500)">bad</span>' in html_anti


def test_html_restores_text_order_and_escapes():
    attr = _attr([AttributionEntry("<b>", 0.1, 1),
                  AttributionEntry("first", 0.9, 0)])
    got = attribution_html(attr, target_class=1)
    assert got.index(">first<") < got.index("&lt;b&gt;")
    assert "<b>" not in got.replace('<span class="tok"', "")
    assert 'data-target="p001"' in got


def test_html_zero_attribution_zero_alpha():
    # hue is moot at zero weight, only full transparency matters
    attr = _attr([AttributionEntry("flat", 0.0, 0)], base=0.5, full=0.5)
    assert ",0.000)" in attribution_html(attr, 1)
