"""Markets with buying rights: rights distribution, an ascending auction solver,
a brute-force verifier, frustration metrics and a multi-round crisis driver."""

from rightsmarket.auction import (InvalidEndowments, InvariantViolation, ReplayMismatch, SolveResult,
                                  SolverAbort, SolveStats, replay, solve)
from rightsmarket.crisis import CrisisRoundRecord, CrisisSpec, check_theorem3, iter_crisis, run_crisis
from rightsmarket.frustration import (FrustrationRecord, frustration, market_frustration_report,
                                      potential_frustration)
from rightsmarket.market import (Basket, Buyer, GoodUtility, MarketError, MarketSpec, Mode, MoneyUtility,
                                 Seller, Solution, check_valid_endowments, make_market)
from rightsmarket.oracle import optimal_basket_at_prices, verify_solution
from rightsmarket.rights import MECHANISMS, distribute
from rightsmarket.scenario import Scenario, generate_instance, load_scenario, save_scenario

__all__ = [
    "Basket", "Buyer", "CrisisRoundRecord", "CrisisSpec", "FrustrationRecord", "GoodUtility",
    "InvalidEndowments", "InvariantViolation", "MECHANISMS", "MarketError", "MarketSpec", "Mode",
    "MoneyUtility", "ReplayMismatch", "Scenario", "Seller", "Solution", "SolveResult", "SolveStats",
    "SolverAbort", "check_theorem3", "check_valid_endowments", "distribute", "frustration",
    "generate_instance", "iter_crisis", "load_scenario", "make_market", "market_frustration_report",
    "optimal_basket_at_prices", "potential_frustration", "replay", "run_crisis", "save_scenario",
    "solve", "verify_solution",
]
