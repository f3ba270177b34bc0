"""Equilibria can sit exactly at half the welfare optimum and half the posted-price revenue."""

from fractions import Fraction as F

from roipace import CostCurve, MarketInstance, check_bounds, reconcile_ties, verify_equilibrium

budget = CostCurve.hard_budget(1)
market = MarketInstance(((1, 0), (F(11, 10), 1)), (budget, budget))

# buyer 2 takes good 1 and exhausts its budget; good 2 goes for free
cert = verify_equilibrium(market, (1, 1))
welfare, _ = check_bounds(market, cert)
print("welfare", welfare.welfare, "of optimum", welfare.optimum, "-> ratio", welfare.ratio)

# with reserves of 1 only good 1 sells in equilibrium
priced = market.with_reserves((1, 1))
cert = verify_equilibrium(priced, (1, 1), reconcile_ties(priced, (1, 1)))
_, revenue = check_bounds(priced, cert)
print("revenue", revenue.revenue, "vs posted", revenue.best.revenue, "-> ratio", revenue.ratio)

# A buyer on a linear stretch of its cost curve is indifferent about extra
# purchases. If posted-price buyers take such purchases, the half-revenue
# guarantee can fail; if they skip them, it holds.
curve = CostCurve.from_pairs([(0, 2), (F(1, 2), 6), (F(7, 8), 8)], F(5, 4))
single = MarketInstance(((1, 2),), (curve,), (0, 1))
cert = verify_equilibrium(single, (F(1, 2),), reconcile_ties(single, (F(1, 2),)))
for mode in ("buy", "skip"):
    _, r = check_bounds(single, cert, indifference=mode)
    print(f"indifferent purchases={mode}: equilibrium revenue {r.revenue}, posted {r.best.revenue}, bound holds: {r.ok}")
