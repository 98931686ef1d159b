"""Estimator-style wrappers: configure in ``__init__``, solve in ``fit``, evaluate in ``predict``."""

from __future__ import annotations

from typing import Callable, Optional, Union

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points, check_positive_int, check_prefixes
from .domain import DomainProcess, constant_domain
from .pathspace import Payoff, TimeGrid
from .pde_solver import solve_pde
from .tree_solver import MAX_STATES, solve


class GExpectation(BaseEstimator):
    """Worst-case expectation ``E_0`` and node values ``V_k`` of a payoff.

    Parameters
    ----------
    domain : DomainProcess or (lo, hi) pair
    T, N : horizon and number of steps
    delta, M : interior margin and volatility grid size
    method : ``auto``, ``tree``, ``lattice`` or ``markov``

    Examples
    --------
    >>> from rgexpect.payoffs import terminal_square
    >>> est = GExpectation(domain=(1.0, 4.0), N=3, M=4).fit(terminal_square())
    >>> round(est.value_, 12)
    4.0
    """

    def __init__(self, domain=(1.0, 4.0), T: float = 1.0, N: int = 8, delta: float = 0.0, M: int = 9,
                 method: str = "auto", max_states: int = MAX_STATES):
        self.domain = domain
        self.T = T
        self.N = N
        self.delta = delta
        self.M = M
        self.method = method
        self.max_states = max_states

    def _domain(self) -> DomainProcess:
        if isinstance(self.domain, DomainProcess):
            return self.domain
        lo, hi = self.domain
        return constant_domain(float(lo), float(hi))

    def fit(self, X: Union[Payoff, Callable], y=None):
        """Solve for payoff ``X``; a plain callable is read as a terminal payoff ``f(x_T)``."""
        xi = X if isinstance(X, Payoff) else Payoff.from_terminal(X)
        N = check_positive_int(self.N, "N")
        self.grid_ = TimeGrid(float(self.T), N)
        self.field_, self.optimal_ = solve(
            xi, self._domain(), self.grid_, self.delta, self.M, self.method, self.max_states
        )
        self.value_ = self.field_.root
        self.method_ = self.field_.method
        return self

    @property
    def policy_(self):
        check_is_fitted(self, "field_")
        return self.optimal_.policy

    def predict(self, X, k: Optional[int] = None) -> np.ndarray:
        """``V_k`` at level-``k`` prefixes (rows of ``X``); ``k`` defaults to ``X.shape[1] - 1``."""
        check_is_fitted(self, "field_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        k = X.shape[1] - 1 if k is None else k
        return self.field_.value_at(k, check_prefixes(X, k))


class GHeatEquation(BaseEstimator):
    """Finite-difference solution ``u(t, x)`` of the G-heat equation with terminal data ``f``."""

    def __init__(self, a=1.0, b=4.0, T: float = 1.0, dx: float = 0.02, cfl: float = 0.5,
                 half_width: Optional[float] = None, delta: float = 0.0):
        self.a = a
        self.b = b
        self.T = T
        self.dx = dx
        self.cfl = cfl
        self.half_width = half_width
        self.delta = delta

    def fit(self, X: Callable[[np.ndarray], np.ndarray], y=None):
        if isinstance(X, Payoff):
            if X.terminal is None:
                raise ValueError("the PDE needs a terminal payoff f(x_T)")
            X = X.terminal
        self.solution_ = solve_pde(X, self.a, self.b, self.T, self.dx, self.cfl, self.half_width, delta=self.delta)
        return self

    def predict(self, X, t: float = 0.0) -> np.ndarray:
        """``u(t, x)`` by linear interpolation in ``x`` on the stored layer nearest to ``t``."""
        check_is_fitted(self, "solution_")
        x = check_points(X)
        sol = self.solution_
        n = int(np.argmin(np.abs(sol.t - t)))
        return np.interp(x, sol.x, sol.u[n])
