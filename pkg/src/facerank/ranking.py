"""Elo aggregation of pairwise outcomes into a full ranking, plus rank correlation.

Crowd pairwise judgments are frequently intransitive, so a full order
cannot be read off the comparisons directly. Each outcome is replayed as
an Elo game:

    expected_a = 1 / (1 + 10 ** ((r_b - r_a) / scale))
    r_a += K * (score_a - expected_a);  r_b gets the mirrored update

with score_a the pair's converted importance score (1, 0.75, 0.5, 0.25
or 0; ties are 0.5). The outcome list is replayed for a number of epochs,
reshuffled each epoch by a seeded generator, which washes out the order
sensitivity of single-pass Elo. Updates are exactly zero-sum, so the
total rating mass stays at n * initial_rating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ItemSetMismatch, UnknownItem

CANONICAL_SCORES = (1.0, 0.75, 0.5, 0.25, 0.0)


@dataclass(frozen=True)
class EloConfig:
    initial_rating: float = 1000.0
    k_factor: float = 32.0
    epochs: int = 100
    seed: int = 42
    scale: float = 400.0

    def __post_init__(self):
        if self.k_factor <= 0 or self.scale <= 0 or self.epochs < 1:
            raise ValueError("k_factor and scale must be positive, epochs >= 1")


@dataclass(frozen=True)
class RankEntry:
    item_id: str
    rating: float
    rank: int


@dataclass(frozen=True)
class RankingTable:
    entries: tuple[RankEntry, ...]

    def rating(self, item_id: str) -> float:
        return self._lookup[item_id].rating

    def rank(self, item_id: str) -> int:
        return self._lookup[item_id].rank

    @property
    def _lookup(self) -> dict[str, RankEntry]:
        return {e.item_id: e for e in self.entries}

    @property
    def item_ids(self) -> tuple[str, ...]:
        return tuple(e.item_id for e in self.entries)

    def has_rating_ties(self) -> bool:
        ratings = [e.rating for e in self.entries]
        return len(set(ratings)) < len(ratings)


def table_from_scores(scores: dict[str, float]) -> RankingTable:
    """Rank items by score, non-increasing, ties broken by item_id."""
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    entries = tuple(
        RankEntry(item_id=i, rating=float(s), rank=k + 1) for k, (i, s) in enumerate(ordered)
    )
    return RankingTable(entries=entries)


def elo_rank(items, outcomes, cfg: EloConfig | None = None) -> RankingTable:
    """Rate items from (a, b, score_a) outcomes and rank them.

    score_a is the first item's share of the game in [0, 1]; the converted
    judgment scores land on 1 / 0.75 / 0.5 / 0.25 / 0.
    """
    cfg = cfg or EloConfig()
    items = list(items)
    index = {item: k for k, item in enumerate(items)}
    if len(index) != len(items):
        raise UnknownItem("duplicate item ids in Elo item list")
    games = []
    for a, b, score_a in outcomes:
        if a not in index:
            raise UnknownItem(f"outcome references unknown item {a!r}")
        if b not in index:
            raise UnknownItem(f"outcome references unknown item {b!r}")
        if not 0.0 <= score_a <= 1.0:
            raise ValueError(f"score_a must lie in [0, 1], got {score_a}")
        games.append((index[a], index[b], float(score_a)))

    ratings = np.full(len(items), cfg.initial_rating, dtype=np.float64)
    if games:
        rng = np.random.default_rng(cfg.seed)
        order = np.arange(len(games))
        for _ in range(cfg.epochs):
            rng.shuffle(order)
            for gi in order:
                ia, ib, score_a = games[gi]
                expected_a = 1.0 / (1.0 + 10.0 ** ((ratings[ib] - ratings[ia]) / cfg.scale))
                change = cfg.k_factor * (score_a - expected_a)
                ratings[ia] += change
                ratings[ib] -= change

    return table_from_scores({item: float(r) for item, r in zip(items, ratings)})


def kendall_tau(r1: RankingTable, r2: RankingTable) -> float:
    """Tau-b correlation of two rankings over the same items.

    Computed on the rating vectors, so rating ties get the tie correction;
    without ties this is the plain (concordant - discordant) / (n choose 2).
    """
    ids1 = sorted(r1.item_ids)
    ids2 = sorted(r2.item_ids)
    if ids1 != ids2:
        raise ItemSetMismatch(f"rankings cover different items: {ids1} vs {ids2}")
    x = np.array([r1.rating(i) for i in ids1])
    y = np.array([r2.rating(i) for i in ids1])
    return kendall_tau_scores(x, y)


def kendall_tau_scores(x, y) -> float:
    """Tau-b on two aligned score vectors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ItemSetMismatch(f"score vectors must align, got {x.shape} and {y.shape}")
    n = len(x)
    if n < 2:
        raise ItemSetMismatch("need at least 2 items for rank correlation")
    dx = np.sign(x[:, None] - x[None, :])
    dy = np.sign(y[:, None] - y[None, :])
    upper = np.triu_indices(n, k=1)
    prod = dx[upper] * dy[upper]
    concordant = int((prod > 0).sum())
    discordant = int((prod < 0).sum())
    n0 = n * (n - 1) / 2.0
    tx = n0 - int((dx[upper] != 0).sum())
    ty = n0 - int((dy[upper] != 0).sum())
    denom = np.sqrt((n0 - tx) * (n0 - ty))
    if denom == 0.0:
        return 0.0
    return float((concordant - discordant) / denom)
