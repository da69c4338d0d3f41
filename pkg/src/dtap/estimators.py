"""Solvers with a scikit-learn style interface.

Each solver takes its options in ``__init__`` (so ``get_params`` and
``set_params`` work, and solvers can be cloned), and ``fit(instance)``
stores the result in ``solution_``, ``cost_`` and ``links_``.

    >>> from dtap.estimators import Approx2Solver
    >>> from dtap import integrality_gap_instance
    >>> Approx2Solver().fit(integrality_gap_instance()).cost_
    Fraction(3, 1)
"""

from __future__ import annotations

import os
from fractions import Fraction

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .errors import Infeasible
from .instance import RootedInstance, is_feasible, load_instance, parse_instance


def check_instance(X, require_feasible: bool = True) -> RootedInstance:
    """Accept an instance, a path to an instance file or instance text."""
    if isinstance(X, RootedInstance):
        inst = X
    elif isinstance(X, (str, bytes, os.PathLike)):
        if isinstance(X, os.PathLike) or (isinstance(X, str) and os.path.exists(X)):
            inst = load_instance(X)
        else:
            inst = parse_instance(X)
    else:
        raise TypeError(f"expected a RootedInstance, a path or instance text, "
                        f"got {type(X).__name__}")
    if require_feasible and not is_feasible(inst):
        raise Infeasible("some arc is covered by no link")
    return inst


def check_positive_rational(value, name: str) -> Fraction:
    try:
        q = Fraction(str(value)) if isinstance(value, float) else Fraction(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a rational number, got {value!r}") from None
    if q <= 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
    return q


class _Solver(BaseEstimator):
    def _solve(self, inst):
        raise NotImplementedError

    def fit(self, X, y=None):
        inst = check_instance(X)
        sol = self._solve(inst)
        self.instance_ = inst
        self.solution_ = sol
        self.cost_ = sol.cost
        self.links_ = list(sol.links)
        self.meta_ = dict(sol.meta)
        return self

    def score(self, X=None, y=None) -> Fraction:
        """Negated cost, so larger is better."""
        check_is_fitted(self, "solution_")
        return -self.cost_


class ExactSolver(_Solver):
    def __init__(self, budget: int = 200000):
        self.budget = budget

    def _solve(self, inst):
        from .oracle import brute_force_opt
        return brute_force_opt(inst, self.budget)


class Approx2Solver(_Solver):
    def _solve(self, inst):
        from .approx import approx_2
        return approx_2(inst)


class Approx175Solver(_Solver):
    def __init__(self, eps=Fraction(1, 2), mode: str = "engineering", k: int = 3,
                 max_cuts: int = 50, budget: int = 200000, check: bool = True):
        self.eps = eps
        self.mode = mode
        self.k = k
        self.max_cuts = max_cuts
        self.budget = budget
        self.check = check

    def _solve(self, inst):
        from .approx import approx_175
        if self.mode not in ("engineering", "theoretical"):
            raise ValueError(f"unknown mode {self.mode!r}")
        eps = check_positive_rational(self.eps, "eps")
        sol = approx_175(inst, eps, mode=self.mode, k=self.k, max_cuts=self.max_cuts,
                         dp_budget=self.budget, bf_budget=self.budget, check=self.check)
        self.lp_lower_bound_ = sol.meta["lp_lower_bound"]
        self.certified_ = sol.meta["certified"]
        return sol


class WillowSolver(_Solver):
    def _solve(self, inst):
        from .willow import solve_willow
        return solve_willow(inst)


class BoundedWidthSolver(_Solver):
    def __init__(self, k: int = 3, budget: int = 2_000_000):
        self.k = k
        self.budget = budget

    def _solve(self, inst):
        from .viwidth import solve_bounded_viwidth
        if not isinstance(self.k, int) or self.k < 0:
            raise ValueError(f"k must be a non-negative integer, got {self.k!r}")
        return solve_bounded_viwidth(inst, self.k, self.budget)
