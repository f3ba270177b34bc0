"""Random per-impression bid modifiers smooth out the auction."""

from fractions import Fraction as F

from roipace import BidProfile, CostCurve, GammaModel, MarketInstance, continuity_probe, expected_outcome
from roipace.stochastic import verify_expected_profile

budget = CostCurve.hard_budget(F(1, 2))
market = MarketInstance(((2, 1), (1, 2)), (budget, budget))

# a point-mass modifier reproduces the deterministic auction
eo = expected_outcome(market, GammaModel.point(2, 2), BidProfile((F(1, 2), F(1, 2))))
print("point mass payments:", eo.payments)

# with modifiers uniform on [1/2, 1], expected outcomes move continuously in the bid
g = GammaModel.uniform(2, 2, 0.5)
for step in (0.1, 0.05, 0.025):
    probe = continuity_probe(market, g, 0, (0.5, 0.5), step)
    print(f"step {step}: largest jump in buyer 1's expected value {probe['max_value_jump']:.4f}")

# a deterministic tie keeps its jump no matter how fine the step
probe = continuity_probe(market, GammaModel.point(2, 2), 0, (0.5, 0.5), 0.03125)
print("point mass jump:", probe["max_value_jump"])

# a buyer with a tiny budget can win a good for free from a buyer who does not bid,
# and that is an equilibrium in which the free winner is not ROI-optimal
tiny = MarketInstance(((1,), (F(1, 2),)), (CostCurve.hard_budget(F(1, 100)), CostCurve.quasi_linear()))
verdict = verify_expected_profile(tiny, GammaModel.uniform(2, 1, 0.5), (1, 0))
print("free-good profile:", verdict.status, "expected payments", verdict.payments)
