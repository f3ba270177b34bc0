"""Certifying and finding ROI-optimal uniform-scaling equilibria.

A certificate is always checked with exact arithmetic, whichever search
produced the candidate: the smoothed-game limit, best-response dynamics or
a brute-force grid.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import optimize

from .auction import (
    BidProfile,
    Outcome,
    TieBreak,
    TieBreakError,
    clearing,
    competing_prices,
    run_auction,
    utility,
)
from .best_response import build_frontier, is_roi_optimal, max_frontier_utility, roi_best_response
from .market import INF, MarketInstance, as_fraction, roi_payment_range
from .simplex import linprog_exact
from .stochastic import max_delta, perturbed_stats, softened_curve

STATUSES = ("roi_optimal_ne", "ne_not_roi_optimal", "not_ne")


class ConvergenceError(RuntimeError):
    pass


@dataclass
class EquilibriumCertificate:
    alphas: tuple[Fraction, ...]
    tiebreak: TieBreak
    outcome: Outcome
    roi_intervals: list[tuple[Fraction, Fraction]]
    roi_ok: list[bool]
    nash_ok: list[bool]
    utilities: list[Fraction]
    best_utilities: list[Fraction]
    status: str
    method: str = "verify"
    trace: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.status == "roi_optimal_ne"

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "method": self.method,
            "alphas": [str(a) for a in self.alphas],
            "tiebreak": self.tiebreak.to_json(),
            "outcome": self.outcome.to_json(),
            "roi_intervals": [[str(lo), str(hi)] for lo, hi in self.roi_intervals],
            "roi_ok": self.roi_ok,
            "nash_ok": self.nash_ok,
            "utilities": [str(u) for u in self.utilities],
            "best_utilities": [str(u) for u in self.best_utilities],
            "trace": self.trace,
        }


def verify_equilibrium(instance: MarketInstance, alphas: Sequence, tiebreak: TieBreak | None = None) -> EquilibriumCertificate:
    """Run the auction and check ROI-optimality and the Nash property exactly.

    Nash is checked against the buyer's full best-response frontier, which
    covers every uniform and non-uniform deviation.
    """
    alphas = tuple(as_fraction(a) for a in alphas)
    bids = BidProfile(alphas)
    tiebreak = tiebreak or TieBreak({})
    outcome = run_auction(instance, bids, tiebreak)
    intervals, roi_ok, nash_ok, utils, bests = [], [], [], [], []
    for i in range(instance.n):
        prices = competing_prices(instance, bids, i)
        fr = build_frontier(instance, i, prices)
        best, _, _ = max_frontier_utility(fr, instance.cost_curves[i])
        br = roi_best_response(instance, i, prices, frontier=fr)
        u = utility(instance, i, outcome)
        intervals.append((br.alpha_lo, br.alpha_hi))
        roi_ok.append(is_roi_optimal(instance, i, alphas[i], outcome))
        nash_ok.append(u == best)
        utils.append(u)
        bests.append(best)
    if all(nash_ok):
        status = "roi_optimal_ne" if all(roi_ok) else "ne_not_roi_optimal"
    else:
        status = "not_ne"
    return EquilibriumCertificate(alphas, tiebreak, outcome, intervals, roi_ok, nash_ok, utils, bests, status)


def reconcile_ties(instance: MarketInstance, alphas: Sequence, prefer_value: bool = True) -> TieBreak | None:
    """Find tie shares making every buyer's payment ROI-consistent.

    Solves an exact LP over the shares of tied (buyer, good) pairs. Returns
    ``None`` when no shares work. With ``prefer_value`` the LP hands out
    zero-price tied goods, which keeps buyers at their best response.
    """
    alphas = tuple(as_fraction(a) for a in alphas)
    structure = clearing(instance, BidProfile(alphas))
    pairs = [(i, j) for j, g in enumerate(structure) for i in g.tied]
    idx = {p: k for k, p in enumerate(pairs)}
    nv = len(pairs)
    fixed = [Fraction(0)] * instance.n
    for j, g in enumerate(structure):
        if g.strict_winner is not None:
            fixed[g.strict_winner] += g.price
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for j, g in enumerate(structure):
        if not g.tied:
            continue
        row = [Fraction(0)] * nv
        for i in g.tied:
            row[idx[(i, j)]] = Fraction(1)
        (A_eq if g.must_clear else A_ub).append(row)
        (b_eq if g.must_clear else b_ub).append(Fraction(1))
    for i in range(instance.n):
        r = INF if alphas[i] == 0 else 1 / alphas[i]
        window = roi_payment_range(instance.cost_curves[i], r)
        if window is None:
            return None
        lo, hi = window
        row = [Fraction(0)] * nv
        for (k, j), col in idx.items():
            if k == i:
                row[col] = structure[j].price
        if not any(row):
            if not (lo <= fixed[i] <= hi):
                return None
            continue
        A_ub.append([-v for v in row])
        b_ub.append(fixed[i] - lo)
        if hi != INF:
            A_ub.append(row)
            b_ub.append(hi - fixed[i])
    if nv == 0:
        return TieBreak({})
    c = [Fraction(0)] * nv
    if prefer_value:
        for (i, j), col in idx.items():
            if structure[j].price == 0:
                c[col] = instance.values[i][j]
    res = linprog_exact(c, A_ub, b_ub, A_eq, b_eq)
    if res.status != "optimal":
        return None
    shares: dict[int, dict[int, Fraction]] = {}
    for (i, j), col in idx.items():
        shares.setdefault(j, {})[i] = res.x[col]
    return TieBreak(shares)


def _certify(instance, alphas, method, trace=None) -> EquilibriumCertificate | None:
    tb = reconcile_ties(instance, alphas)
    if tb is None:
        return None
    cert = verify_equilibrium(instance, alphas, tb)
    cert.method = method
    cert.trace = trace or {}
    return cert if cert.certified else None


@dataclass
class DynamicsResult:
    certificate: EquilibriumCertificate | None
    history: list[tuple[Fraction, ...]]
    converged: bool
    cycle: list[tuple[Fraction, ...]] | None = None

    @property
    def iterations(self) -> int:
        return len(self.history) - 1


def _respond(instance, alphas, schedule, lazy):
    if schedule == "simultaneous":
        bids = BidProfile(alphas)
        return tuple(
            roi_best_response(instance, i, competing_prices(instance, bids, i), alphas[i], lazy).alpha
            for i in range(instance.n)
        )
    cur = list(alphas)
    for i in range(instance.n):
        prices = competing_prices(instance, BidProfile(tuple(cur)), i)
        cur[i] = roi_best_response(instance, i, prices, cur[i], lazy).alpha
    return tuple(cur)


def best_response_dynamics(
    instance: MarketInstance,
    start: Sequence | None = None,
    max_iters: int = 200,
    schedule: str = "simultaneous",
    lazy: bool = True,
) -> DynamicsResult:
    """Iterate ROI-optimal best responses until a certified profile appears.

    ``schedule`` is ``"simultaneous"`` (all buyers respond to the same
    profile) or ``"round_robin"``. Lazy updates keep a multiplier that is
    already ROI-optimal. A revisited profile is reported as a cycle.
    """
    if schedule not in ("simultaneous", "round_robin"):
        raise ValueError(f"unknown schedule {schedule!r}")
    alphas = tuple(as_fraction(a) for a in (start if start is not None else [1] * instance.n))
    history = [alphas]
    seen = {alphas: 0}
    for step in range(max_iters):
        cert = _certify(instance, alphas, "dynamics", {"iterations": step, "schedule": schedule})
        if cert is not None:
            return DynamicsResult(cert, history, True)
        prev = alphas
        alphas = _respond(instance, alphas, schedule, lazy)
        if lazy and alphas == prev:
            # stuck on a profile whose ties cannot be reconciled; move to the
            # canonical responses instead
            alphas = _respond(instance, alphas, schedule, False)
        if alphas in seen:
            if alphas == history[-1]:
                # a fixed point whose ties cannot be reconciled
                return DynamicsResult(None, history + [alphas], False, [alphas])
            return DynamicsResult(None, history + [alphas], False, history[seen[alphas]:])
        seen[alphas] = len(history)
        history.append(alphas)
    cert = _certify(instance, alphas, "dynamics", {"iterations": max_iters, "schedule": schedule})
    return DynamicsResult(cert, history, cert is not None)


def _share_grid(tied: Sequence[int], total_one: bool, T: int):
    """Share vectors on a ``1/T`` grid for the tied buyers of one good."""
    k = len(tied)
    for combo in itertools.product(range(T + 1), repeat=k):
        s = sum(combo)
        if s > T or (total_one and s != T):
            continue
        yield {i: Fraction(c, T) for i, c in zip(tied, combo)}


def enumerate_equilibria_grid(instance: MarketInstance, K: int = 20, T: int = 4, limit: int | None = None) -> list[EquilibriumCertificate]:
    """All certified profiles on the grid ``alpha in {0, 1/K, ..., 1}^n``.

    Tie shares are drawn from multiples of ``1/T``, and additionally from
    the LP reconciliation. Results are de-duplicated by outcome.
    """
    if instance.n * instance.m > 9:
        raise ValueError(f"grid enumeration limited to n*m <= 9 (got {instance.n * instance.m})")
    if K > 200:
        raise ValueError(f"grid resolution K={K} too large (max 200)")
    found: dict[tuple, EquilibriumCertificate] = {}
    grid = [Fraction(k, K) for k in range(K + 1)]
    for alphas in itertools.product(grid, repeat=instance.n):
        structure = clearing(instance, BidProfile(alphas))
        tied = [(j, g) for j, g in enumerate(structure) if g.tied]
        options = [list(_share_grid(g.tied, g.must_clear, T)) for _, g in tied]
        candidates = []
        lp = reconcile_ties(instance, alphas)
        if lp is not None:
            candidates.append(lp)
        for combo in itertools.product(*options):
            candidates.append(TieBreak({j: s for (j, _), s in zip(tied, combo)}))
        for tb in candidates:
            try:
                out = run_auction(instance, BidProfile(alphas), tb)
            except TieBreakError:
                continue
            if not all(is_roi_optimal(instance, i, alphas[i], out) for i in range(instance.n)):
                continue
            key = (out.allocation.x, out.payments)
            if key in found:
                continue
            cert = verify_equilibrium(instance, alphas, tb)
            if cert.certified:
                cert.method = "grid"
                found[key] = cert
                if limit is not None and len(found) >= limit:
                    return list(found.values())
    return list(found.values())


# ---------------------------------------------------------------------------
# smoothed-game limit


def default_deltas(instance: MarketInstance, count: int = 11) -> list[Fraction]:
    cap = max_delta(instance)
    return [Fraction(1, 10) / 2 ** k for k in range(count) if Fraction(1, 10) / 2 ** k <= cap]


class _Staircase:
    """Graph of the subdifferential of a cost curve, as ``(alpha, payment)`` pairs.

    The graph is a monotone staircase: horizontal runs where the multiplier
    is ``1/slope`` and the payment varies, vertical runs at kinks where the
    payment is fixed and the multiplier varies. A single parameter ``t``
    walks along it, so ROI-optimality becomes the smooth-by-pieces equation
    ``payment(alpha(t)) = target(t)``.
    """

    def __init__(self, curve):
        starts = [float(p) for p in curve.starts]
        slopes = [float(s) for s in curve.slopes]
        self.pieces = []  # (kind, fixed, begin, end)
        if slopes[0] > 1:
            self.pieces.append(("v", 0.0, 1.0, 1 / slopes[0]))
        for k, s in enumerate(slopes):
            nxt = starts[k + 1] if k + 1 < len(starts) else math.inf
            self.pieces.append(("h", 1 / s, starts[k], nxt))
            if k + 1 < len(slopes):
                self.pieces.append(("v", nxt, 1 / s, 1 / slopes[k + 1]))

    def point(self, t: float) -> tuple[float, float]:
        if t < 0:
            return 1.0, t
        for kind, fixed, a, b in self.pieces:
            length = abs(b - a)
            if t <= length:
                if kind == "h":
                    return fixed, a + t
                return a - t, fixed
            t -= length
        raise AssertionError("staircase ends in an unbounded run")

    def locate(self, alpha: float, payment: float) -> float:
        """Parameter of the staircase point closest to ``(alpha, payment)``."""
        best, t0 = None, 0.0
        for kind, fixed, a, b in self.pieces:
            length = abs(b - a)
            if kind == "h":
                u = min(max(payment - a, 0.0), length)
                d = abs(alpha - fixed) + abs(payment - (a + u))
            else:
                u = min(max(a - alpha, 0.0), length)
                d = abs(payment - fixed) + abs(alpha - (a - u))
            if best is None or d < best[0]:
                best = (d, t0 + u)
            t0 += length
        return best[1]


def _own_root(f, guess: float) -> float:
    """Root of a nonincreasing scalar function, bracketed outward from ``guess``."""
    lo, hi, step = guess, guess, 1e-3
    while f(lo) < 0:
        lo -= step
        step *= 2
    step = 1e-3
    while f(hi) > 0:
        hi += step
        step *= 2
    while hi - lo > 1e-15 * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def perturbed_equilibrium(
    instance: MarketInstance, delta, start: Sequence[float] | None = None, tol: float = 1e-13, rounds: int = 20
) -> np.ndarray:
    """Equilibrium multipliers of the smoothed game at ``delta``.

    Every buyer's ROI condition is written along the staircase of its
    softened cost curve and the joint system is solved by a quasi-Newton
    root finder, with restarts from a few fixed profiles.
    """
    n = instance.n
    stairs = [_Staircase(softened_curve(c, delta)) for c in instance.cost_curves]

    def alphas_of(t):
        return [stairs[i].point(t[i])[0] for i in range(n)]

    def resid(t):
        a = alphas_of(t)
        return np.array([
            perturbed_stats(instance, delta, i, a).total_payment - stairs[i].point(t[i])[1]
            for i in range(n)
        ])

    def t_of(alphas):
        return np.array([
            stairs[i].locate(alphas[i], perturbed_stats(instance, delta, i, alphas).total_payment)
            for i in range(n)
        ])

    starts = []
    if start is not None:
        starts.append(list(start))
    starts += [[1.0] * n, [0.5] * n]
    best = None
    for s in starts:
        sol = optimize.root(resid, t_of(s), method="hybr", options={"xtol": tol})
        err = float(np.max(np.abs(resid(sol.x))))
        if best is None or err < best[0]:
            best = (err, sol.x)
        if err < 1e-11:
            break
    err, best_t = best
    t = best_t
    if err > 1e-11:
        # Short Gauss-Seidel bursts move the point into the root finder's
        # basin. Each buyer's residual is decreasing in its own parameter,
        # so its root is found by bisection.
        t = t_of(start if start is not None else [1.0] * n)
        for _ in range(rounds):
            for _ in range(3):
                for i in range(n):
                    t[i] = _own_root(lambda x: resid(np.concatenate([t[:i], [x], t[i + 1:]]))[i], t[i])
            sol = optimize.root(resid, t, method="hybr", options={"xtol": tol})
            cand = [(float(np.max(np.abs(resid(t)))), t.copy()), (float(np.max(np.abs(resid(sol.x)))), sol.x)]
            e, x = min(cand, key=lambda z: z[0])
            if e < err:
                err, best_t = e, x
            if err < 1e-11:
                break
        t = best_t
    if err > 1e-8:
        raise ConvergenceError(f"smoothed game at delta={delta} not solved (residual {err:.3g})")
    return np.array(alphas_of(t))


@dataclass
class PerturbedTrace:
    deltas: list[Fraction]
    alphas: list[list[float]]
    allocations: list[list[list[float]]]
    payments: list[list[float]]

    def to_json(self) -> dict:
        return {
            "deltas": [str(d) for d in self.deltas],
            "alphas": self.alphas,
            "allocations": self.allocations,
            "payments": self.payments,
        }


def perturbed_trace(instance: MarketInstance, deltas: Sequence | None = None) -> PerturbedTrace:
    deltas = list(deltas) if deltas is not None else default_deltas(instance)
    if not deltas:
        raise ValueError("no admissible delta (every 1/delta must dominate the final cost slopes)")
    out = PerturbedTrace([], [], [], [])
    prev = []
    for d in deltas:
        if len(prev) >= 2:
            # the path is close to linear in delta; step along it
            (d1, a1), (d2, a2) = prev[-2], prev[-1]
            slope = (a2 - a1) / float(d2 - d1)
            start = np.clip(a2 + slope * float(as_fraction(d) - d2), 0.0, 1.0)
        else:
            start = prev[-1][1] if prev else None
        a = perturbed_equilibrium(instance, d, start)
        prev.append((as_fraction(d), a))
        stats = [perturbed_stats(instance, d, i, a) for i in range(instance.n)]
        out.deltas.append(as_fraction(d))
        out.alphas.append(a.tolist())
        out.allocations.append([s.allocation.tolist() for s in stats])
        out.payments.append([s.payment for s in stats])
    return out


def _rationalise(x: float, tol: float = 1e-4) -> Fraction | None:
    f = Fraction(x).limit_denominator(10 ** 4)
    return f if abs(float(f) - x) <= tol else None


def _extrapolate(seq: list[list[float]]) -> np.ndarray:
    last = np.array(seq[-1])
    if len(seq) < 2:
        return last
    prev = np.array(seq[-2])
    return 2 * last - prev  # deltas halve, error linear in delta


def _tiebreak_from_limit(instance: MarketInstance, alphas, alloc: np.ndarray) -> TieBreak:
    structure = clearing(instance, BidProfile(alphas))
    shares = {}
    for j, g in enumerate(structure):
        if not g.tied:
            continue
        raw = {i: max(float(alloc[i][j]), 0.0) for i in g.tied}
        if g.must_clear:
            tot = sum(raw.values()) or 1.0
            fr = {i: Fraction(v / tot).limit_denominator(10 ** 4) for i, v in raw.items()}
            last = g.tied[-1]
            fr[last] = 1 - sum(v for i, v in fr.items() if i != last)
        else:
            fr = {i: min(Fraction(v).limit_denominator(10 ** 4), Fraction(1)) for i, v in raw.items()}
        shares[j] = fr
    return TieBreak(shares)


def solve_perturbed(instance: MarketInstance, deltas: Sequence | None = None) -> tuple[EquilibriumCertificate | None, PerturbedTrace]:
    """Follow smoothed-game equilibria as ``delta`` shrinks and certify the limit."""
    trace = perturbed_trace(instance, deltas)
    a_lim = _extrapolate(trace.alphas)
    x_lim = _extrapolate(trace.allocations)
    info = {"perturbed": trace.to_json(), "alpha_limit_float": a_lim.tolist()}
    alphas = [_rationalise(float(np.clip(a, 0, 1))) for a in a_lim]
    if any(a is None for a in alphas):
        return None, trace
    alphas = tuple(alphas)
    tries = []
    try:
        tries.append(_tiebreak_from_limit(instance, alphas, x_lim))
    except (ZeroDivisionError, ValueError):
        pass
    lp = reconcile_ties(instance, alphas)
    if lp is not None:
        tries.append(lp)
    for tb in tries:
        try:
            cert = verify_equilibrium(instance, alphas, tb)
        except TieBreakError:
            continue
        if cert.certified:
            cert.method = "perturbed"
            cert.trace = info
            return cert, trace
    return None, trace


@dataclass
class SolveResult:
    certificate: EquilibriumCertificate | None
    alternatives: list[EquilibriumCertificate]
    attempts: list[str]
    trace: PerturbedTrace | None = None

    @property
    def found(self) -> bool:
        return self.certificate is not None

    def to_json(self) -> dict:
        return {
            "found": self.found,
            "certificate": self.certificate.to_json() if self.certificate else None,
            "alternatives": [c.to_json() for c in self.alternatives],
            "attempts": self.attempts,
        }


def _same_outcome(a: EquilibriumCertificate, b: EquilibriumCertificate) -> bool:
    return a.outcome.allocation.x == b.outcome.allocation.x and a.outcome.payments == b.outcome.payments


def solve(
    instance: MarketInstance,
    deltas: Sequence | None = None,
    methods: Sequence[str] = ("perturbed", "dynamics", "grid"),
    grid_K: int = 20,
) -> SolveResult:
    """Find a certified ROI-optimal equilibrium.

    Tries the smoothed-game limit, then best-response dynamics, then a grid
    search. When both of the first two succeed with different outcomes, the
    second is kept in ``alternatives``.
    """
    attempts, found, trace = [], [], None
    for method in methods:
        if method == "perturbed":
            if instance.m == 0:
                continue
            try:
                cert, trace = solve_perturbed(instance, deltas)
            except (ValueError, ConvergenceError) as exc:
                attempts.append(f"perturbed: {exc}")
                continue
            attempts.append("perturbed: " + ("certified" if cert else "limit not certified"))
        elif method == "dynamics":
            res = best_response_dynamics(instance)
            cert = res.certificate
            if cert is None and res.cycle is not None:
                attempts.append(f"dynamics: cycle of length {len(res.cycle)}")
                res = best_response_dynamics(instance, schedule="round_robin")
                cert = res.certificate
            attempts.append("dynamics: " + ("certified" if cert else "no certified profile"))
        elif method == "grid":
            if found:
                continue
            try:
                certs = enumerate_equilibria_grid(instance, K=grid_K, limit=1)
            except ValueError as exc:
                attempts.append(f"grid: {exc}")
                continue
            cert = certs[0] if certs else None
            attempts.append("grid: " + ("certified" if cert else "nothing on grid"))
        else:
            raise ValueError(f"unknown method {method!r}")
        if cert is not None and not any(_same_outcome(cert, c) for c in found):
            found.append(cert)
    return SolveResult(found[0] if found else None, found[1:], attempts, trace)
