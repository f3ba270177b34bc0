"""Two budget-limited buyers, two goods: from truthful bids to a paced equilibrium."""

from fractions import Fraction as F

from roipace import BidProfile, CostCurve, MarketInstance, run_auction, verify_equilibrium
from roipace.equilibrium import best_response_dynamics

# each buyer has a hard budget of 1/2 and prefers a different good
budget = CostCurve.hard_budget(F(1, 2))
market = MarketInstance(((2, 1), (1, 2)), (budget, budget))

# bidding values truthfully blows both budgets
truthful = run_auction(market, BidProfile((1, 1)))
print("truthful payments:", [str(p) for p in truthful.payments])
print("truthful profile:", verify_equilibrium(market, (1, 1)).status)

# let both buyers scale their bids down by ROI-optimal best responses
res = best_response_dynamics(market)
for step, alphas in enumerate(res.history):
    print(f"step {step}: alphas = {[str(a) for a in alphas]}")

cert = res.certificate
print("certified:", cert.status)
print("payments:", [str(p) for p in cert.outcome.payments])
print("utilities:", [str(u) for u in cert.utilities])
