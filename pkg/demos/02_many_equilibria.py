"""Soft budgets admit several equilibria with different welfare."""

from fractions import Fraction as F

from roipace import CostCurve, MarketInstance, enumerate_equilibria_grid, transferable_welfare

# spending past 1/2 costs ten times as much per dollar
soft = CostCurve.from_pairs([(0, 1), (F(1, 2), 10)])
market = MarketInstance(((2, 1), (1, 2)), (soft, soft))

certs = enumerate_equilibria_grid(market, K=60, T=12)
for c in sorted(certs, key=lambda c: -transferable_welfare(market, c.outcome.allocation)):
    w = transferable_welfare(market, c.outcome.allocation)
    x = [[str(v) for v in row] for row in c.outcome.allocation.x]
    print(f"alphas={[str(a) for a in c.alphas]}  allocation={x}  welfare={w} ({float(w)})")

# the symmetric split is the best; the two asymmetric ones lose a little
