"""Worst-case expectations under volatility uncertainty on discrete path trees."""

from .domain import (
    DomainProcess,
    InfeasibleError,
    Policy,
    VolatilityInterval,
    admissibility_margin,
    constant_domain,
    path_domain,
    state_domain,
)
from .estimators import GExpectation, GHeatEquation
from .montecarlo import McEstimate, lower_bound_check, simulate
from .pathspace import Payoff, TimeGrid
from .pde_solver import compare_rep, delta_family, solve_pde
from .sublinear_api import SublinearExpectation, expectation, lp_norm, property_suite, time_consistency_check
from .tree_solver import dpp_check, enumerate_policies, paste_policies, policy_value, solve

__version__ = "0.1.0"

__all__ = [
    "DomainProcess",
    "InfeasibleError",
    "Policy",
    "VolatilityInterval",
    "admissibility_margin",
    "constant_domain",
    "path_domain",
    "state_domain",
    "GExpectation",
    "GHeatEquation",
    "McEstimate",
    "lower_bound_check",
    "simulate",
    "Payoff",
    "TimeGrid",
    "compare_rep",
    "delta_family",
    "solve_pde",
    "SublinearExpectation",
    "expectation",
    "lp_norm",
    "property_suite",
    "time_consistency_check",
    "dpp_check",
    "enumerate_policies",
    "paste_policies",
    "policy_value",
    "solve",
]
