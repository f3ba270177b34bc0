"""Payment-to-value frontiers and ROI-optimal uniform-scaling best responses."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .auction import Outcome
from .market import (
    INF,
    CostCurve,
    MarketInstance,
    as_fraction,
    cost,
    roi_payment_range,
    subderivative_range,
)


@dataclass(frozen=True)
class FrontierSegment:
    ratio: Fraction  # value per unit of spend
    goods: tuple[int, ...]
    start: Fraction
    end: Fraction


@dataclass(frozen=True)
class Frontier:
    """Concave, piecewise-linear best achievable value for each spend level."""

    points: tuple[tuple[Fraction, Fraction], ...]
    segments: tuple[FrontierSegment, ...]
    free_goods: tuple[int, ...]
    prices: tuple[Fraction, ...]

    @property
    def max_payment(self) -> Fraction:
        return self.points[-1][0]

    def value_at(self, p) -> Fraction:
        p = as_fraction(p)
        if p >= self.max_payment:
            return self.points[-1][1]
        for (p0, v0), seg in zip(self.points, self.segments):
            if p <= seg.end:
                return v0 + seg.ratio * (p - p0)
        raise AssertionError("unreachable")

    def left_slope(self, p):
        """``Q-(p)``; infinite at zero spend."""
        if p == 0:
            return INF
        for seg in self.segments:
            if seg.start < p <= seg.end:
                return seg.ratio
        return Fraction(0)

    def right_slope(self, p) -> Fraction:
        for seg in self.segments:
            if seg.start <= p < seg.end:
                return seg.ratio
        return Fraction(0)

    def spend_above(self, r) -> Fraction:
        """Spend on goods strictly better than ``r`` value per unit of money."""
        return sum((s.end - s.start for s in self.segments if s.ratio > r), Fraction(0))

    def segment_with_ratio(self, r) -> FrontierSegment | None:
        return next((s for s in self.segments if s.ratio == r), None)

    def csv_rows(self, curve: CostCurve) -> list[dict]:
        rows = []
        for p, v in self.points:
            c = cost(curve, p)
            rows.append({"payment": str(p), "value": str(v), "cost": "inf" if c == INF else str(c)})
        return rows


def build_frontier(instance: MarketInstance, i: int, prices: Sequence) -> Frontier:
    prices = tuple(as_fraction(c) for c in prices)
    values = instance.values[i]
    free = tuple(j for j in range(instance.m) if values[j] > 0 and prices[j] == 0)
    groups: dict[Fraction, list[int]] = {}
    for j in range(instance.m):
        if values[j] > 0 and prices[j] > 0:
            groups.setdefault(values[j] / prices[j], []).append(j)
    p = Fraction(0)
    v = sum((values[j] for j in free), Fraction(0))
    points = [(p, v)]
    segments = []
    for ratio in sorted(groups, reverse=True):
        goods = tuple(groups[ratio])
        spend = sum(prices[j] for j in goods)
        segments.append(FrontierSegment(ratio, goods, p, p + spend))
        p += spend
        v += sum(values[j] for j in goods)
        points.append((p, v))
    return Frontier(tuple(points), tuple(segments), free, prices)


@dataclass(frozen=True)
class BestResponse:
    payment: Fraction  # smallest utility-maximising spend
    payment_hi: Fraction  # largest utility-maximising spend
    value: Fraction
    utility: Fraction
    alpha_lo: Fraction
    alpha_hi: Fraction
    alpha: Fraction
    tied_goods: tuple[int, ...]
    # spend window realisable at ``alpha`` that keeps it ROI-optimal
    payment_window: tuple[Fraction, Fraction]

    def contains(self, alpha) -> bool:
        return self.alpha_lo <= alpha <= self.alpha_hi

    def share_needed(self, frontier: Frontier) -> tuple[Fraction, Fraction]:
        """Range of the tied group's share needed to land in the payment window."""
        if not self.tied_goods:
            return Fraction(0), Fraction(0)
        r = 1 / self.alpha
        seg = frontier.segment_with_ratio(r)
        width = seg.end - seg.start
        lo, hi = self.payment_window
        return (lo - seg.start) / width, (hi - seg.start) / width


def _inv(r) -> Fraction:
    return Fraction(0) if r == INF else 1 / r


def max_frontier_utility(frontier: Frontier, curve: CostCurve) -> tuple[Fraction, Fraction, Fraction]:
    """``(utility, smallest maximiser, largest maximiser)`` of value minus cost."""
    upper = min(frontier.max_payment, curve.budget)
    cands = {p for p, _ in frontier.points if p <= upper}
    cands |= {p for p in curve.starts if p <= upper}
    cands.add(Fraction(upper))
    scored = sorted((p, frontier.value_at(p) - cost(curve, p)) for p in cands)
    best = max(u for _, u in scored)
    opt = [p for p, u in scored if u == best]
    return best, opt[0], opt[-1]


def roi_best_response(
    instance: MarketInstance,
    i: int,
    prices: Sequence,
    current_alpha=None,
    lazy: bool = False,
    frontier: Frontier | None = None,
) -> BestResponse:
    """Utility-maximising spend and the interval of ROI-optimal multipliers.

    With ``lazy=True`` the caller's ``current_alpha`` is kept whenever it
    already lies in the interval; otherwise the interval midpoint is used.
    """
    curve = instance.cost_curves[i]
    fr = frontier if frontier is not None else build_frontier(instance, i, prices)
    best, p_lo, p_hi = max_frontier_utility(fr, curve)

    r_lo, r_hi = None, None
    for p in {p_lo, p_hi}:
        R_minus, R_plus = subderivative_range(curve, p)
        lo = max(R_minus, fr.right_slope(p))
        hi = min(R_plus, fr.left_slope(p))
        if lo <= hi:
            r_lo = lo if r_lo is None else min(r_lo, lo)
            r_hi = hi if r_hi is None else max(r_hi, hi)
    if r_lo is None:
        r_lo = r_hi = curve.slopes[0]
    alpha_lo, alpha_hi = _inv(r_hi), _inv(r_lo)
    alpha_hi = min(alpha_hi, Fraction(1))

    if lazy and current_alpha is not None and alpha_lo <= as_fraction(current_alpha) <= alpha_hi:
        alpha = as_fraction(current_alpha)
    else:
        alpha = (alpha_lo + alpha_hi) / 2

    r = INF if alpha == 0 else 1 / alpha
    seg = fr.segment_with_ratio(r) if r != INF else None
    base = fr.spend_above(r) if r != INF else fr.max_payment
    top = seg.end if seg is not None else base
    window = roi_payment_range(curve, r)
    if window is None:
        win = (p_lo, p_lo)
    else:
        win = (max(base, window[0]), min(top, window[1]))
        if win[0] > win[1]:
            win = (p_lo, p_lo)
    return BestResponse(
        payment=p_lo,
        payment_hi=p_hi,
        value=fr.value_at(p_lo),
        utility=best,
        alpha_lo=alpha_lo,
        alpha_hi=alpha_hi,
        alpha=alpha,
        tied_goods=seg.goods if seg is not None else (),
        payment_window=win,
    )


def is_roi_optimal(instance: MarketInstance, i: int, alpha, outcome: Outcome) -> bool:
    """Whether ``1/alpha`` is a subderivative of the cost curve at the payment."""
    curve = instance.cost_curves[i]
    pay = outcome.payments[i]
    if pay > curve.budget:
        return False
    R_minus, R_plus = subderivative_range(curve, pay)
    alpha = as_fraction(alpha)
    if alpha == 0:
        return R_plus == INF
    return R_minus <= 1 / alpha <= R_plus
