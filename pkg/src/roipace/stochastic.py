"""Expected outcomes under random bid modifiers.

Two engines live here:

* Monte-Carlo over per-(buyer, good) modifiers, with counter-based streams
  so results are bit-identical for any worker count.
* Gauss-Legendre quadrature for the smoothed game used by the equilibrium
  solver, where each buyer's modifier is uniform on ``[1 - delta, 1]``.
  Every integrand there is piecewise polynomial between known breakpoints,
  so the quadrature is exact up to rounding.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .auction import BidProfile, TieBreak, clearing, run_auction
from .market import INF, CostCurve, MarketInstance, as_fraction, cost, subderivative_range

BLOCK = 4096
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


@dataclass(frozen=True)
class GammaDist:
    low: float
    high: float

    @property
    def is_point(self) -> bool:
        return self.low == self.high


@dataclass(frozen=True)
class GammaModel:
    """Independent modifier distribution per (buyer, good)."""

    dists: tuple[tuple[GammaDist, ...], ...]

    def __post_init__(self):
        for row in self.dists:
            for d in row:
                if not (0 <= d.low <= d.high <= 1):
                    raise ValueError(f"modifier support [{d.low}, {d.high}] not inside [0, 1]")

    @classmethod
    def point(cls, n: int, m: int, value: float = 1.0) -> "GammaModel":
        return cls(tuple(tuple(GammaDist(value, value) for _ in range(m)) for _ in range(n)))

    @classmethod
    def uniform(cls, n: int, m: int, low: float, high: float = 1.0) -> "GammaModel":
        return cls(tuple(tuple(GammaDist(low, high) for _ in range(m)) for _ in range(n)))

    @property
    def deterministic(self) -> bool:
        return all(d.is_point for row in self.dists for d in row)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        low = np.array([[d.low for d in row] for row in self.dists], dtype=float)
        high = np.array([[d.high for d in row] for row in self.dists], dtype=float)
        return low, high


@dataclass
class ExpectedOutcome:
    allocation: np.ndarray  # (n, m)
    payments: np.ndarray  # (n,)
    values: np.ndarray  # (n,)
    allocation_se: np.ndarray
    payments_se: np.ndarray
    values_se: np.ndarray
    samples: int
    seed: int

    def to_json(self) -> dict:
        return {
            "allocation": self.allocation.tolist(),
            "payments": self.payments.tolist(),
            "values": self.values.tolist(),
            "allocation_se": self.allocation_se.tolist(),
            "payments_se": self.payments_se.tolist(),
            "values_se": self.values_se.tolist(),
            "samples": self.samples,
            "seed": self.seed,
        }


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _block_sums(values, reserves, bids, low, high, seed, block, size):
    """Sums and sums of squares of per-sample allocation, payment and value."""
    n, m = bids.shape
    u = _block_rng(seed, block).random((size, n, m))
    gamma = low + (high - low) * u
    eff = bids[None, :, :] * gamma
    x = np.zeros((size, n, m))
    pay = np.zeros((size, n))
    for j in range(m):
        col = eff[:, :, j]
        winner = np.argmax(col, axis=1)
        top = col[np.arange(size), winner]
        if n > 1:
            second = np.sort(col, axis=1)[:, -2]
        else:
            second = np.zeros(size)
        price = np.maximum(reserves[j], second)
        sold = top > reserves[j]
        rows = np.nonzero(sold)[0]
        x[rows, winner[rows], j] = 1.0
        np.add.at(pay, (rows, winner[rows]), price[rows])
    val = np.einsum("sij,ij,sij->si", x, values, gamma)
    return (x.sum(0), (x * x).sum(0), pay.sum(0), (pay * pay).sum(0), val.sum(0), (val * val).sum(0))


def _lowest_index_tiebreak(instance: MarketInstance, bids: BidProfile) -> TieBreak:
    shares = {}
    for j, g in enumerate(clearing(instance, bids)):
        if g.must_clear:
            shares[j] = {min(g.tied): Fraction(1)}
    return TieBreak(shares)


def expected_outcome(
    instance: MarketInstance,
    gamma: GammaModel,
    bids: BidProfile,
    samples: int = 100_000,
    seed: int = 0,
    workers: int = 1,
) -> ExpectedOutcome:
    """Expected allocation, payments and realised value under ``gamma``.

    Reserves apply to modified bids. Exact ties among top bidders go to the
    lowest buyer index; a top bid equal to the reserve leaves the good
    unsold. Point-mass models are evaluated once, exactly.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    n, m = instance.n, instance.m
    raw = bids.effective(instance)
    if gamma.deterministic:
        low, _ = gamma.arrays()
        eff = [[as_fraction(float(low[i, j])) * raw[i][j] for j in range(m)] for i in range(n)]
        prof = BidProfile(bids.alphas, tuple(map(tuple, eff)))
        out = run_auction(instance, prof, _lowest_index_tiebreak(instance, prof))
        x = np.array([[float(v) for v in row] for row in out.allocation.x])
        vals = np.array([
            float(sum(instance.values[i][j] * as_fraction(float(low[i, j])) * out.allocation.x[i][j] for j in range(m)))
            for i in range(n)
        ])
        zeros_nm, zeros_n = np.zeros((n, m)), np.zeros(n)
        return ExpectedOutcome(x, np.array([float(p) for p in out.payments]), vals,
                               zeros_nm, zeros_n, zeros_n.copy(), samples, seed)

    values = np.array([[float(v) for v in row] for row in instance.values])
    reserves = np.array([float(r) for r in instance.reserves])
    bid_arr = np.array([[float(b) for b in row] for row in raw])
    low, high = gamma.arrays()
    nblocks = -(-samples // BLOCK)
    sizes = [min(BLOCK, samples - k * BLOCK) for k in range(nblocks)]

    def work(k):
        return _block_sums(values, reserves, bid_arr, low, high, seed, k, sizes[k])

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, range(nblocks)))
    else:
        parts = [work(k) for k in range(nblocks)]
    totals = [np.zeros_like(a) for a in parts[0]]
    for part in parts:  # fixed merge order
        for t, a in zip(totals, part):
            t += a

    def mean_se(s, ss):
        mean = s / samples
        var = np.maximum(ss / samples - mean * mean, 0.0)
        return mean, np.sqrt(var / max(samples - 1, 1))

    x, x_se = mean_se(totals[0], totals[1])
    pay, pay_se = mean_se(totals[2], totals[3])
    val, val_se = mean_se(totals[4], totals[5])
    return ExpectedOutcome(x, pay, val, x_se, pay_se, val_se, samples, seed)


def two_bidder_uniform_payment(b1: float, b2: float, low: float, high: float = 1.0) -> tuple[float, float]:
    """Closed-form expected payments for one good, zero reserve.

    Bidder ``k`` submits ``b_k * g_k`` with ``g_k`` uniform on ``[low, high]``.
    Returns ``(E[pay_1], E[pay_2])`` where the winner pays the other bid.
    """

    def pay(bw, bl):
        # E[Y 1{Y < X}], X ~ U[aw, cw] (winner), Y ~ U[al, cl] (other)
        aw, cw, al, cl = bw * low, bw * high, bl * low, bl * high
        if cl == al:
            y = al
            if cw == aw:
                return y if aw > y else 0.0
            return y * min(max((cw - y) / (cw - aw), 0.0), 1.0)
        total = 0.0
        cuts = sorted({al, cl, min(max(aw, al), cl), min(max(cw, al), cl)})
        for lo, hi in zip(cuts, cuts[1:]):
            if hi <= lo:
                continue
            mid = 0.5 * (lo + hi)
            if cw == aw:
                # P(X > t) is a step at aw
                total += (hi * hi - lo * lo) / 2 if mid < aw else 0.0
            elif mid < aw:
                total += (hi * hi - lo * lo) / 2
            elif mid < cw:
                # integrand t * (cw - t) / (cw - aw)
                f = lambda t: (cw * t * t / 2 - t ** 3 / 3) / (cw - aw)
                total += f(hi) - f(lo)
        return total / (cl - al)

    return pay(b1, b2), pay(b2, b1)


# ---------------------------------------------------------------------------
# Smoothed game: buyer-level modifiers uniform on [1 - delta, 1], a private
# extra good of value delta sold against a uniform [0, 2 delta] reserve, and
# hard budgets relaxed to a 1/delta slope.


def softened_curve(curve: CostCurve, delta) -> CostCurve:
    """Cost curve with the hard budget replaced by a ``1/delta`` slope."""
    if not curve.has_budget:
        return curve
    delta = as_fraction(delta)
    segs = list(curve.segments)
    steep = 1 / delta
    if steep < segs[-1][1]:
        raise ValueError(f"delta {delta} too large: 1/delta must be at least {segs[-1][1]}")
    if segs[-1][0] == curve.budget:
        segs[-1] = (segs[-1][0], steep)
    else:
        segs.append((curve.budget, steep))
    return CostCurve(tuple(segs))


def max_delta(instance: MarketInstance) -> Fraction | float:
    """Largest delta keeping every softened curve convex."""
    out = INF
    for c in instance.cost_curves:
        if c.has_budget:
            out = min(out, 1 / c.slopes[-1])
    return out


class _FloatCurve:
    def __init__(self, curve: CostCurve):
        self.starts = [float(p) for p in curve.starts]
        self.slopes = [float(s) for s in curve.slopes]

    def cost(self, p: float) -> float:
        total = 0.0
        for k, (st, s) in enumerate(zip(self.starts, self.slopes)):
            end = self.starts[k + 1] if k + 1 < len(self.starts) else math.inf
            if p >= end:
                total += s * (end - st)
            else:
                return total + s * (p - st)
        return total

    def derivs(self, p: float) -> tuple[float, float]:
        k = max(idx for idx, st in enumerate(self.starts) if st <= p) if p >= 0 else 0
        right = self.slopes[k]
        left = self.slopes[k - 1] if (p == self.starts[k] and k > 0) else right
        return left, right


def _gl(lo: float, hi: float):
    half = 0.5 * (hi - lo)
    return lo + half * (_GL_X + 1), half * _GL_W


class _RivalMax:
    """Distribution of ``max(reserve, rival bids)`` for one good."""

    def __init__(self, tops: Sequence[float], delta: float, reserve: float):
        self.reserve = reserve
        self.lows = np.array([(1 - delta) * t for t in tops if t > 0])
        self.highs = np.array([t for t in tops if t > 0])
        bps = {0.0, reserve, *self.lows.tolist(), *self.highs.tolist()}
        self.bps = np.array(sorted(bps))
        # antiderivative of the CDF at each breakpoint
        acc = [0.0]
        for lo, hi in zip(self.bps, self.bps[1:]):
            t, w = _gl(lo, hi)
            acc.append(acc[-1] + float(w @ self.cdf(t)))
        self.acc = np.array(acc)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = (t >= self.reserve).astype(float)
        for lo, hi in zip(self.lows, self.highs):
            out = out * np.clip((t - lo) / (hi - lo), 0.0, 1.0)
        return out

    def cdf_integral(self, z):
        """``int_0^z F(t) dt`` for an array of ``z``."""
        z = np.asarray(z, dtype=float)
        k = np.searchsorted(self.bps, z, side="right") - 1
        base = self.bps[k]
        half = 0.5 * (z - base)
        t = base[:, None] + half[:, None] * (_GL_X[None, :] + 1)
        return self.acc[k] + (self.cdf(t) * _GL_W[None, :]).sum(1) * half


def _good_expectations(own_top: float, rival_tops, delta: float, reserve: float):
    """``(P(win), E[payment], E[g * win])`` for one good, own modifier ``g``."""
    if own_top <= 0:
        return 0.0, 0.0, 0.0
    dist = _RivalMax(rival_tops, delta, reserve)
    cuts = {1 - delta, 1.0}
    for b in dist.bps:
        g = b / own_top
        if 1 - delta < g < 1:
            cuts.add(g)
    cuts = sorted(cuts)
    win = pay = gwin = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        g, w = _gl(lo, hi)
        z = g * own_top
        F = dist.cdf(z)
        win += float(w @ F)
        pay += float(w @ (z * F - dist.cdf_integral(z)))
        gwin += float(w @ (g * F))
    return win / delta, pay / delta, gwin / delta


@dataclass
class PerturbedStats:
    allocation: np.ndarray  # expected shares of the real goods
    payment: float  # real goods only
    value: float  # real goods only
    extra_payment: float
    extra_value: float

    @property
    def total_payment(self) -> float:
        return self.payment + self.extra_payment

    @property
    def total_value(self) -> float:
        return self.value + self.extra_value


def perturbed_stats(instance: MarketInstance, delta, i: int, alphas: Sequence[float]) -> PerturbedStats:
    d = float(delta)
    a = [float(x) for x in alphas]
    m = instance.m
    alloc = np.zeros(m)
    pay = val = 0.0
    for j in range(m):
        tops = [a[k] * float(instance.values[k][j]) for k in range(instance.n) if k != i]
        w, p, gw = _good_expectations(a[i] * float(instance.values[i][j]), tops, d, float(instance.reserves[j]))
        alloc[j] = w
        pay += p
        val += float(instance.values[i][j]) * gw
    _, extra_pay, extra_val = extra_good(a[i], d)
    return PerturbedStats(alloc, pay, val, extra_pay, extra_val)


def extra_good(alpha, delta, low=None) -> tuple[float, float, float]:
    """Win probability, expected payment and expected value of the extra good.

    The buyer bids ``g * alpha * delta`` for a good of value ``delta``
    against a reserve uniform on ``[0, 2 delta]``, with ``g`` uniform on
    ``[low, 1]`` (default ``low = 1 - delta``; ``low = 1`` is a point mass).
    """
    a, d = float(alpha), float(delta)
    lo = 1 - d if low is None else float(low)
    if lo >= 1:
        g1 = g2 = 1.0
    else:
        g1 = (1 + lo) / 2
        g2 = (1 - lo ** 3) / (3 * (1 - lo))
    return a * g1 / 2, a * a * d * g2 / 4, a * d * g2 / 2


def perturbed_expected_payment(instance: MarketInstance, delta, i: int, alphas: Sequence) -> float:
    """Expected total payment of buyer ``i`` in the smoothed game, extra good included."""
    return perturbed_stats(instance, delta, i, alphas).total_payment


def perturbed_best_response(instance: MarketInstance, delta, i: int, alphas: Sequence[float], tol: float = 1e-14) -> float:
    """Unique ROI-optimal multiplier of buyer ``i`` in the smoothed game.

    Payment is strictly increasing in the multiplier, so the crossing of
    ``1/alpha`` with the subdifferential is found by bisection.
    """
    curve = _FloatCurve(softened_curve(instance.cost_curves[i], delta))
    a = [float(x) for x in alphas]

    def side(alpha):
        a[i] = alpha
        P = perturbed_stats(instance, delta, i, a).total_payment
        left, right = curve.derivs(P)
        inv = math.inf if alpha == 0 else 1 / alpha
        if inv > right:
            return 1
        if inv < left:
            return -1
        return 0

    if side(1.0) >= 0:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        s = side(mid)
        if s == 0:
            return mid
        if s > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def perturbed_utility(instance: MarketInstance, delta, i: int, alphas: Sequence[float]) -> float:
    curve = _FloatCurve(softened_curve(instance.cost_curves[i], delta))
    st = perturbed_stats(instance, delta, i, alphas)
    return st.total_value - curve.cost(st.total_payment)


def continuity_probe(
    instance: MarketInstance,
    gamma: GammaModel,
    i: int,
    alphas: Sequence,
    step: float,
    samples: int = 20_000,
    seed: int = 0,
) -> dict:
    """Largest finite-difference jump of buyer ``i``'s expected value and payment.

    Sweeps ``alpha_i`` over ``[0, 1]`` in increments of ``step`` using common
    random numbers, so jumps reflect the mechanism and not sampling noise.
    """
    grid = np.arange(0.0, 1.0 + 1e-12, step)
    vals, pays = [], []
    for g in grid:
        a = [as_fraction(float(x)) for x in alphas]
        a[i] = as_fraction(float(g))
        eo = expected_outcome(instance, gamma, BidProfile(tuple(a)), samples, seed)
        vals.append(eo.values[i])
        pays.append(eo.payments[i])
    dv = np.abs(np.diff(vals))
    dp = np.abs(np.diff(pays))
    return {
        "step": step,
        "max_value_jump": float(dv.max()) if dv.size else 0.0,
        "max_payment_jump": float(dp.max()) if dp.size else 0.0,
    }


@dataclass
class ExpectedVerdict:
    status: str
    roi_ok: list[bool]
    nash_ok: list[bool]
    utilities: list[float]
    best_deviation: list[float]
    payments: list[float]


def verify_expected_profile(
    instance: MarketInstance,
    gamma: GammaModel,
    alphas: Sequence,
    samples: int = 20_000,
    seed: int = 0,
    grid: int = 40,
) -> ExpectedVerdict:
    """Classify a multiplier profile of the modifier game.

    ROI-optimality uses the expected payment; the Nash check compares
    against a uniform deviation grid under common random numbers, with a
    three-standard-error allowance.
    """
    alphas = [as_fraction(a) for a in alphas]
    base = expected_outcome(instance, gamma, BidProfile(tuple(alphas)), samples, seed)
    roi_ok, nash_ok, utils, best_dev = [], [], [], []
    for i in range(instance.n):
        curve = instance.cost_curves[i]
        P = as_fraction(float(base.payments[i]))
        if P > curve.budget:
            roi_ok.append(False)
        else:
            lo, hi = subderivative_range(curve, P)
            a = alphas[i]
            roi_ok.append(hi == INF if a == 0 else lo <= 1 / a <= hi)
        c = cost(curve, P)
        u = -math.inf if c == INF else float(base.values[i]) - float(c)
        utils.append(u)
        best = -math.inf
        for k in range(grid + 1):
            dev = list(alphas)
            dev[i] = Fraction(k, grid)
            eo = expected_outcome(instance, gamma, BidProfile(tuple(dev)), samples, seed)
            cd = cost(curve, as_fraction(float(eo.payments[i])))
            ud = -math.inf if cd == INF else float(eo.values[i]) - float(cd)
            best = max(best, ud)
        best_dev.append(best)
        slack = 3 * float(base.values_se[i] + base.payments_se[i] * curve.slopes[-1])
        nash_ok.append(best <= u + slack + 1e-12)
    if all(nash_ok) and all(roi_ok):
        status = "roi_optimal_ne"
    elif all(nash_ok):
        status = "ne_not_roi_optimal"
    else:
        status = "not_ne"
    return ExpectedVerdict(status, roi_ok, nash_ok, utils, best_dev, [float(p) for p in base.payments])
