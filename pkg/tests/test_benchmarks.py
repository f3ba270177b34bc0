import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from instances import grid_optimal_welfare, random_curve, random_instance
from roipace.benchmarks import (
    arrival_orders,
    check_bounds,
    optimal_transferable_welfare,
    posted_price_purchase,
    sequential_posted_revenue,
    transferable_welfare,
)
from roipace.equilibrium import reconcile_ties, verify_equilibrium
from roipace.market import Allocation, CostCurve, MarketInstance, cost


def test_transferable_welfare_examples(ex1, a3):
    diag = Allocation(((1, 0), (0, 1)))
    assert transferable_welfare(ex1, diag) == 1
    assert transferable_welfare(a3, diag) == F(13, 10)
    assert transferable_welfare(ex1, Allocation(((0, 0), (0, 0)))) == 0


def test_optimal_welfare_examples(ex1, a3, a4):
    assert optimal_transferable_welfare(ex1)[0] == 1
    opt, witness = optimal_transferable_welfare(a4)
    assert opt == 2 and witness.x == ((1, 0), (0, 1))
    opt, witness = optimal_transferable_welfare(a3)
    assert opt == F(13, 10) and transferable_welfare(a3, witness) == opt


def test_posted_purchase_examples(a4r):
    row, spend = posted_price_purchase(a4r, 0, (1, 1))
    assert row == (1, 0) and spend == 1
    row, spend = posted_price_purchase(a4r, 1, (1, 1), remaining=(0, 1))
    assert row == (0, 1) and spend == 1
    zero = MarketInstance(((0, 0),), (CostCurve.quasi_linear(),))
    assert posted_price_purchase(zero, 0, (1, 1)) == ((0, 0), 0)


def test_sequential_revenue_examples(ex1, a4r):
    assert sequential_posted_revenue(a4r, (1, 1), (0, 1)).revenue == 2
    assert sequential_posted_revenue(a4r, (0, 0), (0, 1)).revenue == 0
    r = sequential_posted_revenue(ex1, (F(2, 5), F(2, 5)), (0, 1))
    assert r.revenue == F(4, 5)
    assert r.allocation.x == ((1, F(1, 4)), (0, F(3, 4)))
    with pytest.raises(ValueError):
        sequential_posted_revenue(ex1, (1, 1), (0, 0))


def test_indifferent_purchases_can_double_the_benchmark():
    # a single buyer on a linear cost segment whose slope equals v/r for good 1
    curve = CostCurve.from_pairs([(0, 2), (F(1, 2), 6), (F(7, 8), 8)], F(5, 4))
    inst = MarketInstance(((1, 2),), (curve,), (0, 1))
    assert posted_price_purchase(inst, 0, (0, 1)) == ((1, F(1, 2)), F(1, 2))
    assert posted_price_purchase(inst, 0, (0, 1), indifference="skip") == ((1, 0), 0)
    # the bid sits on the reserve and the good may stay unsold: a valid equilibrium with no revenue
    c = verify_equilibrium(inst, (F(1, 2),), reconcile_ties(inst, (F(1, 2),)))
    assert c.certified and c.outcome.revenue == 0
    _, r = check_bounds(inst, c)
    assert not r.ok
    _, r = check_bounds(inst, c, indifference="skip")
    assert r.ok
    with pytest.raises(ValueError):
        posted_price_purchase(inst, 0, (0, 1), indifference="maybe")


def test_check_bounds_examples(ex1, a4, a4r):
    w, _ = check_bounds(a4, verify_equilibrium(a4, (1, 1)))
    assert w.ratio == F(1, 2) and w.ok
    c = verify_equilibrium(a4r, (1, 1), reconcile_ties(a4r, (1, 1)))
    w, r = check_bounds(a4r, c)
    assert r.ratio == F(1, 2) and r.ok and not w.asserted
    w, _ = check_bounds(ex1, verify_equilibrium(ex1, (F(1, 2), F(1, 2))))
    assert w.ratio == 1
    with pytest.raises(ValueError):
        check_bounds(ex1, verify_equilibrium(ex1, (1, 1)))


def test_arrival_orders():
    assert len(arrival_orders(3)) == 6
    sample = arrival_orders(8, samples=50)
    assert len(sample) == 50 and all(sorted(o) == list(range(8)) for o in sample)
    assert sample == arrival_orders(8, samples=50)


def _grid_purchase_utility(values, curve, prices, remaining, step=100):
    """Best utility over purchases on a 1/step grid, by brute force."""
    axes = [np.arange(0, int(q * step) + 1) / step for q in remaining]
    mesh = np.meshgrid(*axes, indexing="ij")
    x = np.stack([g.ravel() for g in mesh], axis=1)
    v = x @ np.array([float(a) for a in values])
    p = x @ np.array([float(r) for r in prices])
    c = np.array([float(cost(curve, F(pp).limit_denominator(10 ** 6))) for pp in p])
    return float(np.max(v - c))


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_posted_purchase_matches_grid_search(rng):
    m = rng.randint(1, 2)
    values = tuple(F(rng.randint(0, 8), rng.randint(1, 4)) for _ in range(m))
    prices = tuple(F(rng.randint(0, 8), rng.randint(1, 8)) for _ in range(m))
    remaining = tuple(F(rng.randint(1, 4), 4) for _ in range(m))
    curve = random_curve(rng)
    inst = MarketInstance((values,), (curve,))
    row, spend = posted_price_purchase(inst, 0, prices, remaining)
    assert all(0 <= y <= q for y, q in zip(row, remaining))
    greedy = float(sum(v * y for v, y in zip(values, row)) - cost(curve, spend))
    brute = _grid_purchase_utility(values, curve, prices, remaining)
    assert brute <= greedy + 1e-9
    # the greedy optimum is within one grid step of the best grid point
    slack = 0.01 * float(sum(values) + sum(prices) * curve.slopes[-1])
    assert greedy - brute <= slack + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_welfare_lp_matches_grid_oracle(rng):
    inst = random_instance(rng, max_n=2, max_m=2)
    opt, witness = optimal_transferable_welfare(inst)
    assert all(sum(col) <= 1 for col in zip(*witness.x))
    assert transferable_welfare(inst, witness) == opt
    brute = grid_optimal_welfare(inst, step=50)
    assert brute <= float(opt) + 1e-9
    assert float(opt) - brute <= 0.02 * float(sum(map(sum, inst.values))) + 1e-9


def test_welfare_lp_never_below_diagonal_choices():
    rng = random.Random(3)
    for _ in range(30):
        inst = random_instance(rng)
        opt, _ = optimal_transferable_welfare(inst)
        for j in range(inst.m):
            for i in range(inst.n):
                x = [[F(0)] * inst.m for _ in range(inst.n)]
                x[i][j] = F(1)
                assert transferable_welfare(inst, Allocation(tuple(map(tuple, x)))) <= opt
