"""Welfare and revenue benchmarks for equilibrium outcomes."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .market import INF, Allocation, MarketInstance, as_fraction, bundle_value, inverse_cost
from .simplex import linprog_exact


def transferable_welfare(instance: MarketInstance, allocation: Allocation) -> Fraction:
    """Sum over buyers of the willingness to pay for their bundle."""
    return sum(
        (inverse_cost(instance.cost_curves[i], bundle_value(instance, i, allocation.x[i])) for i in range(instance.n)),
        Fraction(0),
    )


def optimal_transferable_welfare(instance: MarketInstance) -> tuple[Fraction, Allocation]:
    """Maximum transferable welfare and an allocation attaining it.

    Each concave willingness-to-pay function is split into per-segment
    value variables ``u_ik`` worth ``1/s_k`` each, with capacity equal to
    the value that segment can absorb. The resulting LP is solved exactly.
    """
    n, m = instance.n, instance.m
    segs = [c.segments for c in instance.cost_curves]
    u_index = [(i, k) for i in range(n) for k in range(len(segs[i]))]
    nx = n * m
    nv = nx + len(u_index)
    c = [Fraction(0)] * nx + [1 / segs[i][k][1] for i, k in u_index]
    A, b = [], []
    for j in range(m):
        row = [Fraction(0)] * nv
        for i in range(n):
            row[i * m + j] = Fraction(1)
        A.append(row)
        b.append(Fraction(1))
    for col, (i, k) in enumerate(u_index, start=nx):
        curve = instance.cost_curves[i]
        start, slope = segs[i][k]
        end = segs[i][k + 1][0] if k + 1 < len(segs[i]) else curve.budget
        if end == INF:
            continue
        row = [Fraction(0)] * nv
        row[col] = Fraction(1)
        A.append(row)
        b.append(slope * (end - start))
    for i in range(n):
        row = [Fraction(0)] * nv
        for j in range(m):
            row[i * m + j] = -instance.values[i][j]
        for col, (k_i, _) in enumerate(u_index, start=nx):
            if k_i == i:
                row[col] = Fraction(1)
        A.append(row)
        b.append(Fraction(0))
    res = linprog_exact(c, A, b)
    if res.status != "optimal":
        raise AssertionError(f"welfare LP returned {res.status}")
    x = Allocation(tuple(tuple(res.x[i * m + j] for j in range(m)) for i in range(n)))
    return transferable_welfare(instance, x), x


def _spend_cap(curve, ratio: Fraction, buy_when_indifferent: bool = True):
    """Largest spend at which every dollar so far cost at most ``ratio``.

    With ``buy_when_indifferent=False`` dollars costing exactly ``ratio``
    are not spent.
    """
    for start, slope in curve.segments:
        if slope > ratio or (slope == ratio and not buy_when_indifferent):
            return start
    return curve.budget


INDIFFERENCE = ("buy", "skip")


def posted_price_purchase(
    instance: MarketInstance,
    i: int,
    prices: Sequence,
    remaining: Sequence | None = None,
    indifference: str = "buy",
) -> tuple[tuple[Fraction, ...], Fraction]:
    """Utility-maximising purchase at posted prices from the remaining supply.

    Free goods are taken first, then goods in decreasing value-per-price
    order while that ratio is at least the marginal cost of money. A
    purchase at zero marginal utility is made when ``indifference`` is
    ``"buy"`` (the default) and skipped when it is ``"skip"``; both are
    utility-maximising.
    """
    if indifference not in INDIFFERENCE:
        raise ValueError(f"indifference must be one of {INDIFFERENCE}, got {indifference!r}")
    prices = [as_fraction(r) for r in prices]
    remaining = [as_fraction(q) for q in remaining] if remaining is not None else [Fraction(1)] * instance.m
    curve = instance.cost_curves[i]
    values = instance.values[i]
    row = [Fraction(0)] * instance.m
    spend = Fraction(0)
    for j in range(instance.m):
        if prices[j] == 0 and values[j] > 0:
            row[j] = remaining[j]
    order = sorted(
        (j for j in range(instance.m) if prices[j] > 0 and values[j] > 0 and remaining[j] > 0),
        key=lambda j: -values[j] / prices[j],
    )
    for j in order:
        cap = _spend_cap(curve, values[j] / prices[j], indifference == "buy")
        target = min(spend + remaining[j] * prices[j], cap)
        if target <= spend:
            break
        row[j] = (target - spend) / prices[j]
        spend = target
    return tuple(row), spend


@dataclass
class PostedRow:
    order: tuple[int, ...]
    allocation: Allocation
    spends: tuple[Fraction, ...]
    revenue: Fraction

    def to_json(self) -> dict:
        return {
            "order": list(self.order),
            "allocation": [[str(v) for v in r] for r in self.allocation.x],
            "spends": [str(s) for s in self.spends],
            "revenue": str(self.revenue),
        }


def sequential_posted_revenue(
    instance: MarketInstance, prices: Sequence, order: Sequence[int], indifference: str = "buy"
) -> PostedRow:
    if sorted(order) != list(range(instance.n)):
        raise ValueError(f"order {list(order)} is not a permutation of the buyers")
    prices = [as_fraction(r) for r in prices]
    remaining = [Fraction(1)] * instance.m
    rows = [(Fraction(0),) * instance.m] * instance.n
    spends = [Fraction(0)] * instance.n
    for i in order:
        row, spend = posted_price_purchase(instance, i, prices, remaining, indifference)
        rows[i] = row
        spends[i] = spend
        remaining = [q - y for q, y in zip(remaining, row)]
    revenue = sum((rows[i][j] * prices[j] for i in range(instance.n) for j in range(instance.m)), Fraction(0))
    return PostedRow(tuple(order), Allocation(tuple(rows)), tuple(spends), revenue)


@dataclass
class WelfareReport:
    welfare: Fraction
    optimum: Fraction
    witness: Allocation
    ratio: Fraction
    asserted: bool  # the half-optimum bound applies only without reserves
    ok: bool

    def to_json(self) -> dict:
        return {
            "welfare": str(self.welfare),
            "optimum": str(self.optimum),
            "witness": [[str(v) for v in r] for r in self.witness.x],
            "ratio": str(self.ratio),
            "asserted": self.asserted,
            "ok": self.ok,
        }


@dataclass
class RevenueReport:
    revenue: Fraction
    rows: list[PostedRow]
    best: PostedRow
    ratio: Fraction | None  # against the best order; None when it earns nothing
    ok: bool

    def to_json(self) -> dict:
        return {
            "revenue": str(self.revenue),
            "best_order": list(self.best.order),
            "best_posted_revenue": str(self.best.revenue),
            "ratio": None if self.ratio is None else str(self.ratio),
            "ok": self.ok,
            "orders": [r.to_json() for r in self.rows],
        }

    def csv_rows(self) -> list[dict]:
        return [
            {
                "order": " ".join(map(str, r.order)),
                "posted_revenue": str(r.revenue),
                "equilibrium_revenue": str(self.revenue),
                "ratio": "" if r.revenue == 0 else str(self.revenue / r.revenue),
            }
            for r in self.rows
        ]


def arrival_orders(n: int, max_full: int = 6, samples: int = 720, seed: int = 0) -> list[tuple[int, ...]]:
    """Every permutation for small ``n``, otherwise a seeded sample."""
    if n <= max_full:
        return list(itertools.permutations(range(n)))
    rng = random.Random(seed)
    out = set()
    while len(out) < samples:
        perm = list(range(n))
        rng.shuffle(perm)
        out.add(tuple(perm))
    return sorted(out)


def check_bounds(instance: MarketInstance, certificate, indifference: str = "buy") -> tuple[WelfareReport, RevenueReport]:
    """Compare a certified equilibrium against both benchmarks."""
    if certificate.status != "roi_optimal_ne":
        raise ValueError(f"bounds apply to ROI-optimal equilibria, got status {certificate.status}")
    x = certificate.outcome.allocation
    w = transferable_welfare(instance, x)
    opt, witness = optimal_transferable_welfare(instance)
    w_ratio = Fraction(1) if opt == 0 else w / opt
    asserted = all(r == 0 for r in instance.reserves)
    welfare = WelfareReport(w, opt, witness, w_ratio, asserted, (not asserted) or 2 * w >= opt)

    rev = certificate.outcome.revenue
    rows = [sequential_posted_revenue(instance, instance.reserves, o, indifference) for o in arrival_orders(instance.n)]
    best = max(rows, key=lambda r: r.revenue)
    ratio = None if best.revenue == 0 else rev / best.revenue
    revenue = RevenueReport(rev, rows, best, ratio, all(2 * rev >= r.revenue for r in rows))
    return welfare, revenue
