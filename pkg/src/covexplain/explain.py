"""Shapley-value attributions over feature groups and tokens.

A coalition game is (n, v) with v defined on player subsets. Exact values
enumerate all 2^n subsets with the factorial weights |S|!(n-|S|-1)!/n!;
the sampled estimator averages marginal contributions over seeded uniform
permutations, which preserves the efficiency identity exactly (each
permutation's marginals telescope to v(N) - v(empty)).

Two concrete games are wired up:
  - feature groups: players are fused-vector segments; absent segments are
    replaced by a baseline vector (typically training-set feature means);
  - tokens: players are whitespace tokens of the sanitized text; absent
    tokens are dropped before re-embedding.
"""

from __future__ import annotations

import html as _html
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .corpus import RawPost, StanceLabel, sanitize_text
from .embed import FusedVector
from .errors import DataError
from .model import ModelParams, forward, softmax

EXACT_PLAYER_CAP = 20


@dataclass(frozen=True)
class CoalitionGame:
    n_players: int
    value: Callable[[frozenset], float]
    player_names: tuple[str, ...]

    def __post_init__(self):
        if self.n_players < 1:
            raise DataError("a game needs at least one player")
        if len(self.player_names) != self.n_players:
            raise DataError("player_names length must equal n_players")


@dataclass(frozen=True)
class AttributionEntry:
    name: str
    phi: float
    player: int          # original player index (HTML restores text order)


@dataclass(frozen=True)
class Attribution:
    target: str                              # record id ("" for bare games)
    unit: str                                # "feature_group" | "token" | "player"
    entries: tuple[AttributionEntry, ...]
    baseline_value: float                    # v(empty set)
    full_value: float                        # v(all players)

    def phi(self) -> np.ndarray:
        ordered = sorted(self.entries, key=lambda e: e.player)
        return np.array([e.phi for e in ordered])


def shapley_exact(game: CoalitionGame, target: str = "",
                  unit: str = "player") -> Attribution:
    """Exact Shapley values by subset enumeration (n <= 20)."""
    n = game.n_players
    if n > EXACT_PLAYER_CAP:
        raise DataError(
            f"{n} players exceeds the exact-enumeration cap "
            f"({EXACT_PLAYER_CAP}); use shapley_sampled")
    # one value call per subset, memoized by bitmask
    values = np.empty(1 << n)
    for mask in range(1 << n):
        members = frozenset(i for i in range(n) if mask >> i & 1)
        values[mask] = game.value(members)
    fact = [math.factorial(i) for i in range(n + 1)]
    weight = [fact[s] * fact[n - s - 1] / fact[n] for s in range(n)]
    phi = np.zeros(n)
    for mask in range(1 << n):
        s = bin(mask).count("1")
        for i in range(n):
            if mask >> i & 1:
                continue
            phi[i] += weight[s] * (values[mask | (1 << i)] - values[mask])
    entries = tuple(
        AttributionEntry(game.player_names[i], float(phi[i]), i)
        for i in range(n)
    )
    return Attribution(target=target, unit=unit, entries=entries,
                       baseline_value=float(values[0]),
                       full_value=float(values[(1 << n) - 1]))


def shapley_sampled(game: CoalitionGame, permutations: int, seed: int = 0,
                    target: str = "", unit: str = "player") -> Attribution:
    """Monte-Carlo Shapley over seeded uniform permutations."""
    if permutations < 1:
        raise DataError("permutations must be >= 1")
    n = game.n_players
    rng = np.random.default_rng(seed)
    cache: dict[frozenset, float] = {}

    def v(members: frozenset) -> float:
        got = cache.get(members)
        if got is None:
            got = float(game.value(members))
            cache[members] = got
        return got

    phi = np.zeros(n)
    empty = frozenset()
    for _ in range(permutations):
        order = rng.permutation(n)
        prev = v(empty)
        members = empty
        for i in order:
            members = members | {int(i)}
            cur = v(members)
            phi[i] += cur - prev
            prev = cur
    phi /= permutations
    entries = tuple(
        AttributionEntry(game.player_names[i], float(phi[i]), i)
        for i in range(n)
    )
    return Attribution(target=target, unit=unit, entries=entries,
                       baseline_value=v(empty),
                       full_value=v(frozenset(range(n))))


def explain_feature_groups(params: ModelParams, fused: FusedVector,
                           target_class: int,
                           baseline: np.ndarray,
                           record_id: str = "") -> Attribution:
    """Exact segment attributions for one fused input.

    v(S) is the model's probability of target_class when segments outside S
    are replaced by the corresponding baseline slice (training-set feature
    means).
    """
    base = np.asarray(baseline, dtype=np.float32)
    if base.shape != fused.values.shape:
        raise DataError(
            f"baseline shape {base.shape} does not match input "
            f"{fused.values.shape}")
    if target_class not in (0, 1):
        raise DataError("target_class must be 0 or 1")
    segments = fused.layout

    def value(members: frozenset) -> float:
        x = base.copy()
        for i in members:
            seg = segments[i]
            sl = slice(seg.offset, seg.offset + seg.length)
            x[sl] = fused.values[sl]
        probs = softmax(forward(params, x[None, :], "eval"))
        return float(probs[0, target_class])

    game = CoalitionGame(
        n_players=len(segments),
        value=value,
        player_names=tuple(s.name for s in segments),
    )
    return shapley_exact(game, target=record_id, unit="feature_group")


def explain_tokens(params: ModelParams, post: RawPost,
                   embed_fn: Callable[[str], np.ndarray],
                   target_class: int, permutations: int = 2000,
                   seed: int = 0) -> Attribution:
    """Sampled token attributions for one post's sanitized text.

    embed_fn maps a (possibly token-dropped) text to the model's full input
    vector; tokens outside the coalition are removed before re-embedding.
    Entries come back ordered by |phi| descending.
    """
    if target_class not in (0, 1):
        raise DataError("target_class must be 0 or 1")
    tokens = sanitize_text(post.text).split()
    if not tokens:
        raise DataError(f"post {post.id!r} has no tokens after sanitization")

    def value(members: frozenset) -> float:
        text = " ".join(tokens[i] for i in range(len(tokens)) if i in members)
        x = np.asarray(embed_fn(text), dtype=np.float32)
        probs = softmax(forward(params, x[None, :], "eval"))
        return float(probs[0, target_class])

    game = CoalitionGame(n_players=len(tokens), value=value,
                         player_names=tuple(tokens))
    attr = shapley_sampled(game, permutations, seed=seed, target=post.id,
                           unit="token")
    ranked = tuple(sorted(attr.entries, key=lambda e: (-abs(e.phi), e.player)))
    return Attribution(target=attr.target, unit=attr.unit, entries=ranked,
                       baseline_value=attr.baseline_value,
                       full_value=attr.full_value)


def attribution_csv(attr: Attribution) -> str:
    """CSV rendering with columns rank,name,phi (rank by |phi| descending)."""
    ranked = sorted(attr.entries, key=lambda e: (-abs(e.phi), e.player))
    lines = ["rank,name,phi"]
    for rank, e in enumerate(ranked, start=1):
        name = e.name.replace('"', '""')
        if "," in name or '"' in e.name:
            name = f'"{name}"'
        lines.append(f"{rank},{name},{e.phi:.10g}")
    return "\n".join(lines) + "\n"


_ANTI_RGB = "220,50,47"   # red: pushes toward anti
_PRO_RGB = "38,139,210"   # blue: pushes toward pro


def attribution_html(attr: Attribution, target_class: int) -> str:
    """Inline HTML fragment: tokens in original order, opacity ~ |phi|,
    red hue for anti-pushing tokens and blue for pro-pushing ones."""
    if target_class not in (0, 1):
        raise DataError("target_class must be 0 or 1")
    ordered = sorted(attr.entries, key=lambda e: e.player)
    max_abs = max((abs(e.phi) for e in ordered), default=0.0)
    spans = []
    for e in ordered:
        alpha = 0.0 if max_abs == 0 else abs(e.phi) / max_abs
        pushes_target = e.phi > 0
        pushes_anti = pushes_target == (target_class == StanceLabel.ANTI.value)
        rgb = _ANTI_RGB if pushes_anti else _PRO_RGB
        spans.append(
            f'<span class="tok" title="phi={e.phi:.4g}" '
            f'style="background-color: rgba({rgb},{alpha:.3f})">'
            f"{_html.escape(e.name)}</span>"
        )
    body = " ".join(spans)
    return (f'<div class="attribution" data-target="{_html.escape(attr.target)}">'
            f"{body}</div>\n")
