import random
from fractions import Fraction as F

import pytest

from instances import grid_deviation_utilities, random_instance
from roipace.auction import BidProfile, TieBreak, clearing, competing_prices, run_auction, utility
from roipace.equilibrium import (
    STATUSES,
    best_response_dynamics,
    enumerate_equilibria_grid,
    perturbed_equilibrium,
    reconcile_ties,
    solve,
    solve_perturbed,
    verify_equilibrium,
)
from roipace.market import CostCurve, MarketInstance


def test_status_labels(ex1, a2):
    assert verify_equilibrium(ex1, (F(1, 2), F(1, 2))).status == "roi_optimal_ne"
    assert verify_equilibrium(ex1, (1, 1)).status == "not_ne"
    assert verify_equilibrium(a2, (1, 0)).status == "ne_not_roi_optimal"
    assert set(STATUSES) == {"roi_optimal_ne", "ne_not_roi_optimal", "not_ne"}


def test_certificate_json_round_trip(ex1):
    js = verify_equilibrium(ex1, (F(1, 2), F(1, 2))).to_json()
    assert js["status"] == "roi_optimal_ne" and js["alphas"] == ["1/2", "1/2"]


def test_dynamics_example1(ex1):
    res = best_response_dynamics(ex1)
    assert res.converged and res.certificate.alphas == (F(1, 2), F(1, 2))
    assert res.history[0] == (1, 1)


def test_dynamics_single_quasi_linear_buyer():
    inst = MarketInstance(((3, 1),), (CostCurve.quasi_linear(),))
    res = best_response_dynamics(inst)
    assert res.converged and res.iterations == 0
    assert res.certificate.outcome.payments == (0,)


def test_dynamics_from_split_profile(a3):
    res = best_response_dynamics(a3, start=(F(1, 3), F(2, 3)))
    c = res.certificate
    assert c is not None and c.alphas == (F(1, 3), F(2, 3))
    assert c.outcome.allocation.x[0] == (F(3, 4), 0)


def test_round_robin_schedule(ex1):
    res = best_response_dynamics(ex1, start=(F(1, 2), F(1, 2)), schedule="round_robin")
    assert res.converged and res.iterations == 0
    # from truthful bids the sequential schedule stalls; that must be reported
    res = best_response_dynamics(ex1, schedule="round_robin")
    assert res.converged or res.cycle
    assert res.converged == (res.certificate is not None)
    with pytest.raises(ValueError):
        best_response_dynamics(ex1, schedule="random")


def test_reconcile_ties_shares(a3):
    tb = reconcile_ties(a3, (F(1, 3), F(2, 3)))
    assert tb.shares[0] == {0: F(3, 4), 1: F(1, 4)}


def test_reconcile_infeasible():
    # both tie at price 1/2; with alpha < 1 each must spend the whole budget
    hb = CostCurve.hard_budget(F(1, 2))
    inst = MarketInstance(((1,), (1,)), (hb, hb))
    assert reconcile_ties(inst, (F(1, 2), F(1, 2))) is None


def test_solve_examples(ex1, a3, a4):
    assert solve(ex1).certificate.alphas == (F(1, 2), F(1, 2))
    assert solve(a3).certificate.alphas == (F(1, 2), F(1, 2))
    r = solve(a4)
    assert r.found and all(c.certified for c in [r.certificate, *r.alternatives])


def test_solve_unknown_method(ex1):
    with pytest.raises(ValueError):
        solve(ex1, methods=("magic",))


def test_enumerate_guards(ex1):
    big = MarketInstance(tuple((1,) * 5 for _ in range(2)), (CostCurve.quasi_linear(),) * 2)
    with pytest.raises(ValueError):
        enumerate_equilibria_grid(big)
    with pytest.raises(ValueError):
        enumerate_equilibria_grid(ex1, K=500)


def test_enumerate_single_buyer():
    inst = MarketInstance(((2, 1),), (CostCurve.hard_budget(1),))
    certs = enumerate_equilibria_grid(inst, K=4, T=2)
    assert len(certs) == 1 and certs[0].outcome.payments == (0,)


def test_perturbed_equilibrium_near_limit(ex1):
    a = perturbed_equilibrium(ex1, F(1, 1000))
    assert abs(a[0] - 0.5) < 1e-2 and abs(a[1] - 0.5) < 1e-2


def test_solve_perturbed_tiebreak_is_valid(a4r):
    cert, trace = solve_perturbed(a4r)
    assert cert is not None and cert.certified
    run_auction(a4r, BidProfile(cert.alphas), cert.tiebreak)
    assert cert.outcome.revenue == 1
    assert len(trace.deltas) == len(trace.alphas)


def _deviation_check(inst, cert, K=40):
    """Compare each buyer against a uniform deviation grid and single-good raw bids."""
    for i in range(inst.n):
        prices = competing_prices(inst, BidProfile(cert.alphas), i)
        curve = inst.cost_curves[i]
        for _, u in grid_deviation_utilities(inst.values[i], curve, prices, K):
            assert u is None or u <= cert.utilities[i]
        for j in range(inst.m):
            for bid in (prices[j] + F(1, 1000), prices[j] * F(999, 1000)):
                raw = [[a * v for v in row] for a, row in zip(cert.alphas, inst.values)]
                raw[i] = [F(0)] * inst.m
                raw[i][j] = bid
                out = run_auction(inst, BidProfile(cert.alphas, tuple(map(tuple, raw))), _win_ties(inst, i, cert.alphas, raw))
                assert utility(inst, i, out) <= cert.utilities[i]


def _win_ties(inst, i, alphas, raw):
    shares = {}
    for j, g in enumerate(clearing(inst, BidProfile(alphas, tuple(map(tuple, raw))))):
        if g.tied:
            if i in g.tied:
                s = {k: F(0) for k in g.tied}
                s[i] = F(1)
            else:
                s = {k: F(0) for k in g.tied}
                s[g.tied[0]] = F(1)
            shares[j] = s if g.must_clear else {i: F(1)} if i in g.tied else {}
    return TieBreak(shares)


def test_certificates_survive_deviation_search():
    rng = random.Random(11)
    checked = 0
    for _ in range(40):
        inst = random_instance(rng)
        res = solve(inst)
        if res.certificate is None:
            continue
        _deviation_check(inst, res.certificate)
        checked += 1
    assert checked >= 30
