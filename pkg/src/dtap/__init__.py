"""Weighted directed tree augmentation: exact, LP-based and approximate solvers."""

__version__ = "0.1.0"

from .errors import (BudgetExceeded, DTAPError, Infeasible, InstanceError,
                     IterationBudgetExceeded, NotACover, NotIntegral, NotWillow,
                     PreconditionViolation, PropertyViolation, WidthExceeded)
from .instance import (Link, RootedInstance, Solution, generic_shadow, is_feasible,
                       load_instance, parse_instance, shadow_complete)
from .lp import FractionalSolution, solve_lp
from .approx import approx_2, approx_175
from .reductions import integrality_gap_instance

__all__ = [
    "BudgetExceeded", "DTAPError", "Infeasible", "InstanceError",
    "IterationBudgetExceeded", "NotACover", "NotIntegral", "NotWillow",
    "PreconditionViolation", "PropertyViolation", "WidthExceeded",
    "Link", "RootedInstance", "Solution", "generic_shadow", "is_feasible",
    "load_instance", "parse_instance", "shadow_complete",
    "FractionalSolution", "solve_lp", "approx_2", "approx_175",
    "integrality_gap_instance",
]
