"""ROI-optimal uniform bid scaling in simultaneous second-price auctions."""

from .auction import BidProfile, Outcome, TieBreak, TieBreakError, competing_prices, run_auction, utility
from .benchmarks import (
    RevenueReport,
    WelfareReport,
    check_bounds,
    optimal_transferable_welfare,
    posted_price_purchase,
    sequential_posted_revenue,
    transferable_welfare,
)
from .best_response import BestResponse, Frontier, build_frontier, is_roi_optimal, roi_best_response
from .equilibrium import (
    EquilibriumCertificate,
    best_response_dynamics,
    enumerate_equilibria_grid,
    reconcile_ties,
    solve,
    solve_perturbed,
    verify_equilibrium,
)
from .market import (
    INF,
    Allocation,
    CostCurve,
    InstanceError,
    MarketInstance,
    cost,
    inverse_cost,
    subderivative_range,
    validate_instance,
)
from .scenario import Scenario, load_scenario
from .stochastic import ExpectedOutcome, GammaModel, continuity_probe, expected_outcome, perturbed_expected_payment

__all__ = [name for name in dir() if not name.startswith("_")]
