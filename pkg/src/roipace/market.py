"""Economic primitives: cost-of-money curves, market instances, allocations.

All quantities are exact :class:`fractions.Fraction` values. Infinite
budgets and infinite right-derivatives are represented by ``math.inf``,
which compares correctly against fractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

Rational = Union[int, Fraction, str]

INF = math.inf


class InstanceError(ValueError):
    """Raised when an instance violates a structural invariant.

    ``problems`` lists every offending field, not just the first one.
    """

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def as_fraction(x) -> Fraction:
    """Convert ints, fractions, ``"num/den"`` strings and decimal strings.

    Floats are converted through their shortest decimal representation so
    that ``0.1`` becomes ``1/10`` rather than the binary expansion.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot interpret {x!r} as a rational")


def as_budget(x) -> Fraction | float:
    if x is None:
        return INF
    if isinstance(x, float) and math.isinf(x):
        return INF
    if isinstance(x, str) and x.strip().lower() in ("inf", "infinity", "+inf"):
        return INF
    return as_fraction(x)


@dataclass(frozen=True)
class CostCurve:
    """Piecewise-linear convex disutility for payments.

    ``segments`` is a sequence of ``(start, slope)`` pairs; the first start
    is 0 and slope ``s_k`` applies on ``[start_k, start_{k+1})``. The last
    slope extends to the budget (or forever when the budget is infinite).
    """

    segments: tuple[tuple[Fraction, Fraction], ...]
    budget: Fraction | float = INF

    def __post_init__(self):
        segs = tuple((as_fraction(p), as_fraction(s)) for p, s in self.segments)
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "budget", as_budget(self.budget))

    @classmethod
    def quasi_linear(cls, slope: Rational = 1) -> "CostCurve":
        return cls(((0, slope),))

    @classmethod
    def hard_budget(cls, budget: Rational, slope: Rational = 1) -> "CostCurve":
        return cls(((0, slope),), budget)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[Rational]], budget=INF) -> "CostCurve":
        return cls(tuple((p, s) for p, s in pairs), budget)

    @property
    def starts(self) -> list[Fraction]:
        return [p for p, _ in self.segments]

    @property
    def slopes(self) -> list[Fraction]:
        return [s for _, s in self.segments]

    @property
    def has_budget(self) -> bool:
        return self.budget != INF

    def problems(self) -> list[str]:
        """Invariant violations, empty when the curve is valid."""
        out = []
        if not self.segments:
            return ["cost curve has no segments"]
        starts, slopes = self.starts, self.slopes
        if starts[0] != 0:
            out.append(f"first breakpoint must be 0, got {starts[0]}")
        for k in range(1, len(starts)):
            if starts[k] <= starts[k - 1]:
                out.append(f"breakpoints not strictly increasing at segment {k}")
        for k, s in enumerate(slopes):
            if s <= 0:
                out.append(f"slope {k} is not positive ({s})")
        for k in range(1, len(slopes)):
            if slopes[k] < slopes[k - 1]:
                out.append(f"slopes decreasing at segment {k} ({slopes[k - 1]} > {slopes[k]}): not convex")
        if slopes[0] < 1:
            out.append(f"initial slope {slopes[0]} < 1 (marginal cost of money must be at least 1)")
        if self.has_budget:
            if self.budget <= 0:
                out.append(f"budget must be positive, got {self.budget}")
            elif starts[-1] > self.budget:
                out.append(f"last breakpoint {starts[-1]} exceeds budget {self.budget}")
        return out

    def _segment_index(self, p: Fraction) -> int:
        """Index of the segment whose half-open interval contains ``p``."""
        k = 0
        for idx, start in enumerate(self.starts):
            if start <= p:
                k = idx
        return k

    def to_json(self) -> dict:
        return {
            "segments": [[str(p), str(s)] for p, s in self.segments],
            "budget": "inf" if not self.has_budget else str(self.budget),
        }


def cost(curve: CostCurve, p: Rational) -> Fraction | float:
    """Disutility of paying ``p``; ``INF`` beyond a finite budget."""
    p = as_fraction(p)
    if p < 0:
        raise ValueError(f"payment must be nonnegative, got {p}")
    if p > curve.budget:
        return INF
    total = Fraction(0)
    segs = curve.segments
    for k, (start, slope) in enumerate(segs):
        end = segs[k + 1][0] if k + 1 < len(segs) else None
        if end is not None and p >= end:
            total += slope * (end - start)
        else:
            total += slope * (p - start)
            break
    return total


def inverse_cost(curve: CostCurve, v: Rational) -> Fraction:
    """Willingness to pay for value ``v``; saturates at the budget."""
    v = as_fraction(v)
    if v < 0:
        raise ValueError(f"value must be nonnegative, got {v}")
    if curve.has_budget and v >= cost(curve, curve.budget):
        return curve.budget
    segs = curve.segments
    acc = Fraction(0)
    for k, (start, slope) in enumerate(segs):
        end = segs[k + 1][0] if k + 1 < len(segs) else None
        if end is not None:
            seg_cost = slope * (end - start)
            if acc + seg_cost >= v:
                return start + (v - acc) / slope
            acc += seg_cost
        else:
            return start + (v - acc) / slope
    raise AssertionError("unreachable")


def subderivative_range(curve: CostCurve, p: Rational) -> tuple[Fraction, Fraction | float]:
    """Left and right derivatives ``(R-(p), R+(p))``.

    ``R-(0)`` is the first slope and ``R+(budget)`` is ``INF``.
    """
    p = as_fraction(p)
    if p < 0:
        raise ValueError(f"payment must be nonnegative, got {p}")
    if p > curve.budget:
        raise ValueError(f"payment {p} exceeds budget {curve.budget}")
    k = curve._segment_index(p)
    right = curve.segments[k][1]
    if p == curve.segments[k][0] and k > 0:
        left = curve.segments[k - 1][1]
    else:
        left = right
    if curve.has_budget and p == curve.budget:
        right = INF
    return left, right


def roi_payment_range(curve: CostCurve, r) -> tuple[Fraction, Fraction] | None:
    """Payments ``P`` in ``[0, budget]`` with ``R-(P) <= r <= R+(P)``.

    ``r`` may be ``INF`` (a zero multiplier), in which case only the budget
    point qualifies. Returns ``None`` when no payment qualifies.
    """
    if r == INF:
        if curve.has_budget:
            return curve.budget, curve.budget
        return None
    r = as_fraction(r)
    starts, slopes = curve.starts, curve.slopes
    if r < slopes[0]:
        return None
    upper = curve.budget
    lo = hi = None
    for k, s in enumerate(slopes):
        end = starts[k + 1] if k + 1 < len(starts) else upper
        if s == r:
            lo = starts[k] if lo is None else lo
            hi = end
        elif s > r:
            if lo is None:
                lo = hi = starts[k]
            break
    else:
        if lo is None:
            # r exceeds every slope: only the budget point has R+ = INF
            if curve.has_budget:
                return curve.budget, curve.budget
            return None
    return lo, hi


@dataclass(frozen=True)
class MarketInstance:
    """Additive buyers over unit-supply divisible goods."""

    values: tuple[tuple[Fraction, ...], ...]
    cost_curves: tuple[CostCurve, ...]
    reserves: tuple[Fraction, ...] = field(default=())

    def __post_init__(self):
        vals = tuple(tuple(as_fraction(v) for v in row) for row in self.values)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "cost_curves", tuple(self.cost_curves))
        m = len(vals[0]) if vals else 0
        res = tuple(as_fraction(r) for r in self.reserves) if self.reserves else (Fraction(0),) * m
        object.__setattr__(self, "reserves", res)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def m(self) -> int:
        return len(self.values[0]) if self.values else 0

    def with_reserves(self, reserves: Iterable[Rational]) -> "MarketInstance":
        return MarketInstance(self.values, self.cost_curves, tuple(reserves))

    def to_json(self) -> dict:
        return {
            "buyers": [
                {"values": [str(v) for v in row], "cost_curve": c.to_json()}
                for row, c in zip(self.values, self.cost_curves)
            ],
            "reserves": [str(r) for r in self.reserves],
        }


@dataclass(frozen=True)
class Allocation:
    """``x[i][j]``: fraction of good ``j`` held by buyer ``i``."""

    x: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(tuple(as_fraction(v) for v in row) for row in self.x))

    @classmethod
    def empty(cls, n: int, m: int) -> "Allocation":
        return cls(tuple((Fraction(0),) * m for _ in range(n)))

    def problems(self) -> list[str]:
        out = []
        for i, row in enumerate(self.x):
            for j, v in enumerate(row):
                if v < 0 or v > 1:
                    out.append(f"x[{i}][{j}] = {v} outside [0, 1]")
        if self.x:
            for j in range(len(self.x[0])):
                tot = sum(row[j] for row in self.x)
                if tot > 1:
                    out.append(f"good {j} over-allocated ({tot})")
        return out


def bundle_value(instance: MarketInstance, i: int, row: Sequence[Fraction]) -> Fraction:
    return sum((v * x for v, x in zip(instance.values[i], row)), Fraction(0))


@dataclass
class ValidationReport:
    valid: bool
    notices: list[str]


def validate_instance(instance: MarketInstance) -> ValidationReport:
    """Check every structural invariant.

    Raises :class:`InstanceError` listing all problems. Bundles worth more
    than 1 are reported as notices only, since normalising values is
    optional.
    """
    problems = []
    if instance.n == 0:
        raise InstanceError(["no buyers"])
    if instance.m == 0:
        problems.append("no goods")
    for i, row in enumerate(instance.values):
        if len(row) != instance.m:
            problems.append(f"buyer {i} has {len(row)} values, expected {instance.m}")
        for j, v in enumerate(row):
            if v < 0:
                problems.append(f"values[{i}][{j}] = {v} is negative")
    if len(instance.cost_curves) != instance.n:
        problems.append(f"{len(instance.cost_curves)} cost curves for {instance.n} buyers")
    for i, curve in enumerate(instance.cost_curves):
        problems.extend(f"cost_curves[{i}]: {msg}" for msg in curve.problems())
    if len(instance.reserves) != instance.m:
        problems.append(f"{len(instance.reserves)} reserves for {instance.m} goods")
    for j, r in enumerate(instance.reserves):
        if r < 0:
            problems.append(f"reserves[{j}] = {r} is negative")
    if problems:
        raise InstanceError(problems)
    notices = []
    for i, row in enumerate(instance.values):
        total = sum(row)
        if total > 1:
            notices.append(f"buyer {i} values the full bundle at {total} > 1 (not normalised)")
    return ValidationReport(True, notices)
