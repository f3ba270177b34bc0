"""Dense two-phase simplex over exact rationals.

Only meant for the tiny LPs this package builds (tens of variables). Uses
Bland's rule, so it terminates without any cycling safeguards.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .market import as_fraction


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: list[Fraction] | None = None
    value: Fraction | None = None


def _pivot(T: list[list[Fraction]], basis: list[int], row: int, col: int) -> None:
    piv = T[row][col]
    T[row] = [v / piv for v in T[row]]
    for i, r in enumerate(T):
        if i != row and r[col] != 0:
            f = r[col]
            T[i] = [a - f * b for a, b in zip(r, T[row])]
    basis[row] = col


def _optimize(T, basis, cost: Sequence[Fraction], allowed: int) -> str:
    """Maximise ``cost`` over columns ``< allowed``; tableau updated in place."""
    rhs = len(T[0]) - 1
    while True:
        entering = None
        for j in range(allowed):
            if j in basis:
                continue
            red = cost[j] - sum(cost[basis[i]] * T[i][j] for i in range(len(T)))
            if red > 0:
                entering = j
                break
        if entering is None:
            return "optimal"
        best = None
        for i, r in enumerate(T):
            a = r[entering]
            if a > 0:
                ratio = r[rhs] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return "unbounded"
        _pivot(T, basis, best[1], entering)


def linprog_exact(c, A_ub=(), b_ub=(), A_eq=(), b_eq=()) -> LPResult:
    """Maximise ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``."""
    c = [as_fraction(v) for v in c]
    nvar = len(c)
    rows = []  # (coefficients, rhs, kind)
    for a, b in zip(A_ub, b_ub):
        rows.append(([as_fraction(v) for v in a], as_fraction(b), "ub"))
    for a, b in zip(A_eq, b_eq):
        rows.append(([as_fraction(v) for v in a], as_fraction(b), "eq"))
    n_ub = sum(1 for r in rows if r[2] == "ub")
    n_art = sum(1 for a, b, kind in rows if kind == "eq" or b < 0)
    width = nvar + n_ub + n_art
    T, basis = [], []
    slack_col, art_col = nvar, nvar + n_ub
    for a, b, kind in rows:
        line = a + [Fraction(0)] * (n_ub + n_art) + [b]
        sign = 1
        if kind == "ub":
            line[slack_col] = Fraction(1)
            slack_idx = slack_col
            slack_col += 1
        if b < 0:
            sign = -1
            line = [-v for v in line]
        if kind == "eq" or sign < 0:
            line[art_col] = Fraction(1)
            basis.append(art_col)
            art_col += 1
        else:
            basis.append(slack_idx)
        T.append(line)

    if n_art:
        phase1 = [Fraction(0)] * (nvar + n_ub) + [Fraction(-1)] * n_art
        _optimize(T, basis, phase1, width)
        infeas = sum(T[i][-1] for i, b in enumerate(basis) if b >= nvar + n_ub)
        if infeas != 0:
            return LPResult("infeasible")
        # drive remaining (zero-level) artificials out of the basis
        for i in range(len(T) - 1, -1, -1):
            if basis[i] >= nvar + n_ub:
                col = next((j for j in range(nvar + n_ub) if T[i][j] != 0), None)
                if col is None:
                    del T[i]
                    del basis[i]
                else:
                    _pivot(T, basis, i, col)
        keep = nvar + n_ub
        T = [r[:keep] + [r[-1]] for r in T]
    cost = c + [Fraction(0)] * n_ub
    status = _optimize(T, basis, cost, nvar + n_ub)
    if status == "unbounded":
        return LPResult("unbounded")
    x = [Fraction(0)] * nvar
    for i, b in enumerate(basis):
        if b < nvar:
            x[b] = T[i][-1]
    return LPResult("optimal", x, sum((ci * xi for ci, xi in zip(c, x)), Fraction(0)))
