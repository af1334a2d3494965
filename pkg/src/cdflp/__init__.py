"""Competitive dynamic facility location with cumulative customer demand.

Exact bilevel solvers (leader/follower Stackelberg game over temporary
facility schedules), instance generators and analysis metrics.
"""
from .model import (BudgetError, CaptureEvent, Instance, JointOutcome, Owner, Schedule, accumulated_demand,
                    make_schedule, preferred_open_location, simulate_outcome, validate_instance)
from .follower import best_response, enumerate_schedules, follower_optimal_set
from .solver import (BilevelSolution, brute_force_oracle, monopolistic_heuristic, solve, solve_cooperative,
                     solve_optimistic, solve_pessimistic)
from .space import CapExceeded

__version__ = "0.1.0"

__all__ = [
    "BilevelSolution", "BudgetError", "CapExceeded", "CaptureEvent", "Instance", "JointOutcome", "Owner",
    "Schedule", "accumulated_demand", "best_response", "brute_force_oracle", "enumerate_schedules",
    "follower_optimal_set", "make_schedule", "monopolistic_heuristic", "preferred_open_location",
    "simulate_outcome", "solve", "solve_cooperative", "solve_optimistic", "solve_pessimistic",
    "validate_instance",
]
