from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from instances import random_instance
from roipace.auction import (
    BidProfile,
    TieBreak,
    TieBreakError,
    clearing,
    competing_prices,
    run_auction,
    utility,
)
from roipace.market import INF, CostCurve, MarketInstance

alpha = st.fractions(0, 1, max_denominator=6)


def even_split(instance, bids):
    shares = {}
    for j, g in enumerate(clearing(instance, bids)):
        if g.must_clear:
            shares[j] = {i: F(1, len(g.tied)) for i in g.tied}
    return TieBreak(shares)


def test_competing_prices(ex1, a4r):
    assert competing_prices(ex1, BidProfile((1, F(1, 2))), 0) == [F(1, 2), 1]
    single = MarketInstance(((1, 2),), (CostCurve.quasi_linear(),))
    assert competing_prices(single, BidProfile((1,)), 0) == [0, 0]
    assert competing_prices(a4r, BidProfile((1, 1)), 0) == [F(11, 10), 1]


def test_symmetric_profile(ex1):
    out = run_auction(ex1, BidProfile((F(1, 2), F(1, 2))))
    assert out.allocation.x == ((1, 0), (0, 1))
    assert out.payments == (F(1, 2), F(1, 2))
    assert utility(ex1, 0, out) == F(3, 2)


def test_split_tie(ex1):
    out = run_auction(ex1, BidProfile((F(1, 3), F(2, 3))), TieBreak({0: {0: F(3, 4), 1: F(1, 4)}}))
    assert out.allocation.x == ((F(3, 4), 0), (F(1, 4), 1))
    assert out.item_prices == (F(2, 3), F(1, 3))
    assert out.payments == (F(1, 2), F(1, 2))


def test_zero_bids_with_reserves(a4r):
    out = run_auction(a4r, BidProfile((0, 0)))
    assert out.allocation.x == ((0, 0), (0, 0))
    assert out.revenue == 0


def test_tie_above_reserve_needs_shares(ex1):
    with pytest.raises(TieBreakError, match="needs explicit shares"):
        run_auction(ex1, BidProfile((F(1, 3), F(2, 3))))
    with pytest.raises(TieBreakError, match="sum to 1"):
        run_auction(ex1, BidProfile((F(1, 3), F(2, 3))), TieBreak({0: {0: F(1, 2)}}))


def test_tiebreak_structural_errors(ex1):
    bids = BidProfile((F(1, 3), F(2, 3)))
    base = {0: {0: F(1, 2), 1: F(1, 2)}}
    with pytest.raises(TieBreakError, match="not tied under"):
        run_auction(ex1, bids, TieBreak({**base, 1: {1: F(1)}}))
    with pytest.raises(TieBreakError, match="unknown good"):
        run_auction(ex1, bids, TieBreak({**base, 5: {0: F(1)}}))
    with pytest.raises(TieBreakError, match="> 1"):
        run_auction(ex1, bids, TieBreak({0: {0: F(1), 1: F(1, 2)}}))
    three = MarketInstance(((1,), (1,), (F(1, 2),)), (CostCurve.quasi_linear(),) * 3)
    with pytest.raises(TieBreakError, match="not tied for good"):
        run_auction(three, BidProfile((1, 1, 1)), TieBreak({0: {0: F(1, 2), 2: F(1, 2)}}))


def test_bid_at_reserve_is_allocable_but_optional(a4r):
    bids = BidProfile((0, 1), ((0, 0), (0, 1)))  # buyer 2 bids exactly the reserve on good 1
    assert run_auction(a4r, bids).allocation.x[1][1] == 0
    out = run_auction(a4r, bids, TieBreak({1: {1: F(1)}}))
    assert out.allocation.x[1][1] == 1 and out.payments[1] == 1


def test_utility_examples(a1):
    empty = run_auction(a1, BidProfile((0, 0)))
    assert utility(a1, 0, empty) == 0
    out = run_auction(a1, BidProfile((1, F(1, 100))))
    assert utility(a1, 0, out) == F(1, 2)


def test_utility_beyond_budget_is_minus_infinity(ex1):
    out = run_auction(ex1, BidProfile((1, 1)))
    assert out.payments == (1, 1)
    assert utility(ex1, 0, out) == -INF


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False), st.lists(alpha, min_size=3, max_size=3))
def test_revenue_identity_and_feasibility(rng, alphas):
    inst = random_instance(rng, reserves=True)
    bids = BidProfile(tuple(alphas[: inst.n]))
    out = run_auction(inst, bids, even_split(inst, bids))
    assert not out.allocation.problems()
    sold = [sum(row[j] for row in out.allocation.x) for j in range(inst.m)]
    assert out.revenue == sum(p * q for p, q in zip(out.item_prices, sold))
    for j in range(inst.m):
        if sold[j] > 0:
            assert out.item_prices[j] >= inst.reserves[j]


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False), st.lists(st.fractions(F(1, 6), 1, max_denominator=6), min_size=3, max_size=3))
def test_goods_clear_without_reserves(rng, alphas):
    inst = random_instance(rng)
    bids = BidProfile(tuple(alphas[: inst.n]))
    out = run_auction(inst, bids, even_split(inst, bids))
    eff = bids.effective(inst)
    for j in range(inst.m):
        if sum(1 for i in range(inst.n) if eff[i][j] > 0) >= 2:
            assert sum(row[j] for row in out.allocation.x) == 1


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False), st.lists(alpha, min_size=3, max_size=3), st.fractions(F(1, 4), 4, max_denominator=4))
def test_scale_covariance(rng, alphas, lam):
    inst = random_instance(rng, reserves=True)
    bids = BidProfile(tuple(alphas[: inst.n]))
    scaled_inst = MarketInstance(inst.values, inst.cost_curves, tuple(lam * r for r in inst.reserves))
    raw = tuple(tuple(lam * b for b in row) for row in bids.effective(inst))
    scaled = BidProfile(bids.alphas, raw)
    a = run_auction(inst, bids, even_split(inst, bids))
    b = run_auction(scaled_inst, scaled, even_split(scaled_inst, scaled))
    assert a.allocation == b.allocation
    assert b.item_prices == tuple(lam * p for p in a.item_prices)
    assert b.payments == tuple(lam * p for p in a.payments)


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False), st.lists(alpha, min_size=3, max_size=3))
def test_truthful_bidding_is_optimal_for_quasi_linear_buyers(rng, alphas):
    inst = random_instance(rng)
    inst = MarketInstance(inst.values, (CostCurve.quasi_linear(),) * inst.n)
    others = list(alphas[: inst.n])
    i = 0
    others[i] = F(1)
    truthful = BidProfile(tuple(others))
    base = utility(inst, i, run_auction(inst, truthful, even_split(inst, truthful)))
    for k in range(21):
        dev = list(others)
        dev[i] = F(k, 20)
        bids = BidProfile(tuple(dev))
        assert utility(inst, i, run_auction(inst, bids, even_split(inst, bids))) <= base
