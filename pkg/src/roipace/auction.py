"""Simultaneous second-price auctions with reserves over divisible goods.

Ties are never broken implicitly. A good whose top effective bid is tied
strictly above the reserve must receive explicit shares summing to one;
a top bid sitting exactly at the reserve may be allocated any share up to
one and is left unsold when no shares are given.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .market import INF, Allocation, MarketInstance, as_fraction, bundle_value, cost


class TieBreakError(ValueError):
    pass


@dataclass(frozen=True)
class BidProfile:
    """Uniform scaling factors, optionally overridden by raw per-good bids."""

    alphas: tuple[Fraction, ...]
    raw_bids: tuple[tuple[Fraction, ...], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(as_fraction(a) for a in self.alphas))
        if self.raw_bids is not None:
            raw = tuple(tuple(as_fraction(b) for b in row) for row in self.raw_bids)
            object.__setattr__(self, "raw_bids", raw)

    @classmethod
    def uniform(cls, alphas: Sequence) -> "BidProfile":
        return cls(tuple(alphas))

    def effective(self, instance: MarketInstance) -> list[list[Fraction]]:
        if self.raw_bids is not None:
            return [list(row) for row in self.raw_bids]
        return [[a * v for v in row] for a, row in zip(self.alphas, instance.values)]


@dataclass(frozen=True)
class TieBreak:
    """``shares[j][i]``: fraction of tied good ``j`` assigned to buyer ``i``."""

    shares: Mapping[int, Mapping[int, Fraction]] = field(default_factory=dict)

    def __post_init__(self):
        clean = {
            int(j): {int(i): as_fraction(s) for i, s in row.items()}
            for j, row in self.shares.items()
        }
        object.__setattr__(self, "shares", clean)

    def to_json(self) -> dict:
        return {str(j): {str(i): str(s) for i, s in row.items()} for j, row in self.shares.items()}


@dataclass(frozen=True)
class GoodClearing:
    """How one good clears: price, strict winner or tied bidders."""

    price: Fraction
    sold: bool
    strict_winner: int | None
    tied: tuple[int, ...]
    must_clear: bool  # tied strictly above the reserve

    @property
    def is_tie(self) -> bool:
        return bool(self.tied)


def clear_good(column: Sequence[Fraction], reserve: Fraction) -> GoodClearing:
    top = max(column)
    if top < reserve:
        return GoodClearing(reserve, False, None, (), False)
    winners = tuple(i for i, b in enumerate(column) if b == top)
    if len(winners) >= 2:
        second = top
    else:
        rest = [b for i, b in enumerate(column) if i != winners[0]]
        second = max(rest) if rest else Fraction(0)
    price = max(reserve, second)
    if len(winners) == 1 and top > price:
        return GoodClearing(price, True, winners[0], (), False)
    return GoodClearing(price, True, None, winners, top > reserve)


def clearing(instance: MarketInstance, bids: BidProfile) -> list[GoodClearing]:
    b = bids.effective(instance)
    return [
        clear_good([b[i][j] for i in range(instance.n)], instance.reserves[j])
        for j in range(instance.m)
    ]


@dataclass(frozen=True)
class Outcome:
    allocation: Allocation
    item_prices: tuple[Fraction, ...]
    payments: tuple[Fraction, ...]

    @property
    def revenue(self) -> Fraction:
        return sum(self.payments, Fraction(0))

    def to_json(self) -> dict:
        return {
            "allocation": [[str(v) for v in row] for row in self.allocation.x],
            "item_prices": [str(p) for p in self.item_prices],
            "payments": [str(p) for p in self.payments],
        }

    def price_rows(self) -> list[dict]:
        sold = [sum(row[j] for row in self.allocation.x) for j in range(len(self.item_prices))]
        return [
            {"good": j, "price": str(p), "sold": str(q)}
            for j, (p, q) in enumerate(zip(self.item_prices, sold))
        ]


def competing_prices(instance: MarketInstance, bids: BidProfile, i: int) -> list[Fraction]:
    """Per-unit price buyer ``i`` faces on each good: reserve or best rival bid."""
    b = bids.effective(instance)
    out = []
    for j in range(instance.m):
        rivals = [b[k][j] for k in range(instance.n) if k != i]
        out.append(max([instance.reserves[j]] + rivals))
    return out


def check_tiebreak(structure: Sequence[GoodClearing], tiebreak: TieBreak | None) -> None:
    shares = tiebreak.shares if tiebreak is not None else {}
    for j, row in shares.items():
        if j < 0 or j >= len(structure):
            raise TieBreakError(f"tie-break references unknown good {j}")
        g = structure[j]
        if not g.is_tie:
            if any(s != 0 for s in row.values()):
                raise TieBreakError(f"good {j} is not tied under these bids")
            continue
        for i, s in row.items():
            if i not in g.tied and s != 0:
                raise TieBreakError(f"buyer {i} is not tied for good {j} (tied: {list(g.tied)})")
            if s < 0:
                raise TieBreakError(f"negative share {s} for buyer {i} on good {j}")
        total = sum(row.values(), Fraction(0))
        if total > 1:
            raise TieBreakError(f"shares on good {j} sum to {total} > 1")
        if g.must_clear and total != 1:
            raise TieBreakError(f"good {j} is tied above its reserve; shares must sum to 1, got {total}")
    for j, g in enumerate(structure):
        if g.must_clear and j not in shares:
            raise TieBreakError(f"good {j} is tied among buyers {list(g.tied)} and needs explicit shares")


def run_auction(instance: MarketInstance, bids: BidProfile, tiebreak: TieBreak | None = None) -> Outcome:
    structure = clearing(instance, bids)
    check_tiebreak(structure, tiebreak)
    shares = tiebreak.shares if tiebreak is not None else {}
    n, m = instance.n, instance.m
    x = [[Fraction(0)] * m for _ in range(n)]
    prices = []
    for j, g in enumerate(structure):
        prices.append(g.price)
        if not g.sold:
            continue
        if g.strict_winner is not None:
            x[g.strict_winner][j] = Fraction(1)
        else:
            for i, s in shares.get(j, {}).items():
                x[i][j] = s
    payments = tuple(sum((x[i][j] * prices[j] for j in range(m)), Fraction(0)) for i in range(n))
    return Outcome(Allocation(tuple(map(tuple, x))), tuple(prices), payments)


def utility(instance: MarketInstance, i: int, outcome: Outcome) -> Fraction | float:
    """Value minus cost of payment; ``-INF`` if the payment breaks a hard budget."""
    c = cost(instance.cost_curves[i], outcome.payments[i])
    if c == INF:
        return -INF
    return bundle_value(instance, i, outcome.allocation.x[i]) - c
