"""Why utilitarian welfare is the wrong yardstick when money is valued differently."""

from roipace import BidProfile, CostCurve, MarketInstance, competing_prices, roi_best_response, verify_equilibrium

# buyer 2 values the good far more, but each of its dollars is worth 100 utils
market = MarketInstance(((2,), (150,)), (CostCurve.quasi_linear(), CostCurve.quasi_linear(100)))

truthful = BidProfile((1, 1))
alphas = [roi_best_response(market, i, competing_prices(market, truthful, i)).alpha for i in range(2)]
print("bids:", [str(a * market.values[i][0]) for i, a in enumerate(alphas)])

cert = verify_equilibrium(market, alphas)
print("status:", cert.status, "winner allocation:", cert.outcome.allocation.x[0][0])
print("price:", cert.outcome.item_prices[0], "winner utility:", cert.utilities[0])
# value-maximising allocation would give 150 instead of 2, yet buyer 2 will not
# pay more than 1.5 for it: willingness to pay is what the market sees
