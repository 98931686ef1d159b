"""Conditional sublinear expectations ``E_t`` on the finite path tree.

Every node of the tree is reached by some admissible policy, so quasi-sure
equality is nodewise equality and ``E_t(X)`` is an array over the level-``t``
path states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .domain import DomainProcess
from .pathspace import Payoff, TimeGrid
from .payoffs import stopped
from .tree_solver import MAX_STATES, PathTree, ValueField, backward, build_tree, resolve_levels

__all__ = [
    "RandomVariable",
    "AxiomResult",
    "SuiteReport",
    "SublinearExpectation",
    "expectation",
    "lp_norm",
    "property_suite",
    "time_consistency_check",
    "lipschitz_check",
]

TOL = 1e-10


@dataclass(frozen=True)
class RandomVariable:
    """A payoff tagged with the integrability exponent it is used with."""

    payoff: Payoff
    p: float = 1.0

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"need p >= 1, got {self.p}")


Variable = Union[Payoff, RandomVariable]


def _payoff(X: Variable) -> Payoff:
    return X.payoff if isinstance(X, RandomVariable) else X


@dataclass(frozen=True)
class AxiomResult:
    name: str
    residual: float
    passed: bool


@dataclass(frozen=True)
class SuiteReport:
    results: tuple

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, name: str) -> AxiomResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)


class SublinearExpectation:
    """``E_t`` for one ``(domain, grid, delta, M)``; the path tree is built once."""

    def __init__(self, domain: DomainProcess, grid: TimeGrid, delta: float = 0.0, M: int = 2,
                 max_states: int = MAX_STATES):
        self.domain = domain
        self.grid = grid
        self.delta = float(delta)
        self.M = int(M)
        self.tree: PathTree = build_tree(domain, grid, delta, M, max_states=max_states)

    def states(self, t: int) -> np.ndarray:
        return self.tree.paths[t]

    def field(self, X: Variable) -> ValueField:
        values, argmax = backward(self.tree, _payoff(X)(self.tree.leaves))
        return ValueField(self.grid, self.delta, self.M, "tree", values, self.tree.paths, argmax, self.tree.vols)

    def __call__(self, X: Variable, t: int = 0) -> np.ndarray:
        self._level(t)
        return self.field(X).values[t]

    def _level(self, t: int):
        if not 0 <= t <= self.grid.N:
            raise ValueError(f"level must lie in [0, {self.grid.N}], got {t}")

    def level_values(self, Y: Callable[[np.ndarray], np.ndarray], t: int) -> np.ndarray:
        """A level-``t`` node function evaluated on the level-``t`` states."""
        return np.broadcast_to(np.asarray(Y(self.states(t)), dtype=float), (self.states(t).shape[0],))

    def sup_level(self, y: np.ndarray, t: int) -> float:
        """``E_0`` of a variable given by its values ``y`` on the level-``t`` states."""
        self._level(t)
        sub = PathTree(self.grid, self.delta, self.M, 0, self.tree.paths[: t + 1], self.tree.vols[:t])
        return float(backward(sub, y)[0][0][0])

    def lp_norm(self, X: Variable, p: float = 1.0) -> float:
        if not p >= 1:
            raise ValueError(f"need p >= 1, got {p}")
        xi = _payoff(X)
        v = self.sup_level(np.abs(xi(self.tree.leaves)) ** p, self.grid.N)
        return max(v, 0.0) ** (1.0 / p)

    def level_norm(self, y: np.ndarray, t: int, p: float = 1.0) -> float:
        return max(self.sup_level(np.abs(y) ** p, t), 0.0) ** (1.0 / p)

    def measurable(self, X: Variable, t: int) -> bool:
        """Whether ``X`` is constant on every subtree below a level-``t`` state."""
        v = _payoff(X)(self.tree.leaves).reshape(self.states(t).shape[0], -1)
        return bool(np.all(np.ptp(v, axis=1) == 0))

    def time_consistency(self, X: Variable, s: int, t: int) -> float:
        if not 0 <= s <= t <= self.grid.N:
            raise ValueError(f"need 0 <= s <= t <= N, got s={s}, t={t}")
        f = self.field(X)
        return float(np.max(np.abs(resolve_levels(f, self.domain, s, t) - f.values[s])))

    def lipschitz(self, xi: Variable, psi: Variable, t: int, p: float = 1.0) -> tuple[float, float]:
        """Worst nodewise excess of ``|E_t xi - E_t psi|^p`` over ``E_t |xi - psi|^p``, and the norm excess."""
        a, b = _payoff(xi), _payoff(psi)
        d = self(a, t) - self(b, t)
        diff = Payoff(lambda q: np.abs(a.func(q) - b.func(q)) ** p)
        node = float(np.max(np.abs(d) ** p - self(diff, t)))
        norm = self.level_norm(d, t, p) - self.lp_norm(a - b, p)
        return node, norm

    def property_suite(self, X: Variable, Xp: Variable, eta: Callable[[np.ndarray], np.ndarray], t: int,
                       tol: float = TOL) -> SuiteReport:
        """The six operator properties at every level-``t`` state.

        ``Xp`` is made ``F_t``-measurable by freezing it after ``t`` where
        needed; ``eta`` maps level-``t`` prefixes to reals.
        """
        self._level(t)
        X, Xp = _payoff(X), _payoff(Xp)
        E = lambda Z: self(Z, t)  # noqa: E731
        ex = E(X)
        out = []

        hi = Payoff(lambda q: np.maximum(X.func(q), Xp.func(q)))
        out.append(("monotonicity", float(np.max(ex - E(hi)))))

        St = stopped(Xp, t)
        if not self.measurable(St, t):
            raise ValueError("stopped variable is not F_t-measurable")
        st = self.level_values(lambda p: St(np.pad(p, ((0, 0), (0, self.grid.N - t)), mode="edge")), t)
        out.append(("translation", float(np.max(np.abs(E(X + St) - (ex + st))))))

        n = self.level_values(eta, t)
        tt = t
        scaled = Payoff(lambda q: eta(q[:, : tt + 1]) * X.func(q))
        rhs = np.maximum(n, 0) * ex + np.maximum(-n, 0) * E(-X)
        out.append(("homogeneity", float(np.max(np.abs(E(scaled) - rhs)))))

        out.append(("subadditivity", float(np.max(ex - E(Xp) - E(X - Xp)))))

        mart = Payoff(lambda q: q[:, -1] - q[:, tt])
        X2 = St + mart
        e2 = E(X2)
        # X2 has no ambiguity given F_t; a gap in E_t(-X2) = -E_t(X2) counts against the check
        pre = float(np.max(np.abs(E(-X2) + e2)))
        out.append(("additivity", max(pre, float(np.max(np.abs(E(X + X2) - (ex + e2)))))))

        worst = -math.inf
        for p in (1, 2):
            node, norm = self.lipschitz(X, Xp, t, p)
            worst = max(worst, node, norm)
        out.append(("contraction", worst))

        return SuiteReport(tuple(AxiomResult(name, r, bool(r <= tol)) for name, r in out))


def expectation(X: Variable, t: int, domain: DomainProcess, grid: TimeGrid, delta: float = 0.0, M: int = 2):
    """``E_t(X)`` over the level-``t`` tree states; a float for ``t = 0``."""
    v = SublinearExpectation(domain, grid, delta, M)(X, t)
    return float(v[0]) if t == 0 else v


def lp_norm(X: Variable, p: float, domain: DomainProcess, grid: TimeGrid, delta: float = 0.0, M: int = 2) -> float:
    """``E_0(|X|^p)^(1/p)``."""
    if not p >= 1:
        raise ValueError(f"need p >= 1, got {p}")
    return SublinearExpectation(domain, grid, delta, M).lp_norm(X, p)


def property_suite(X: Variable, Xp: Variable, eta, t: int, domain: DomainProcess, grid: TimeGrid,
                   delta: float = 0.0, M: int = 2, tol: float = TOL) -> SuiteReport:
    return SublinearExpectation(domain, grid, delta, M).property_suite(X, Xp, eta, t, tol)


def time_consistency_check(X: Variable, s: int, t: int, domain: DomainProcess, grid: TimeGrid,
                           delta: float = 0.0, M: int = 2) -> float:
    """Largest gap between ``E_s(X)`` and ``E_s`` of ``E_t(X)`` re-solved on ``[s, t]``."""
    return SublinearExpectation(domain, grid, delta, M).time_consistency(X, s, t)


def lipschitz_check(xi: Variable, psi: Variable, t: int, p: float, domain: DomainProcess, grid: TimeGrid,
                    delta: float = 0.0, M: int = 2, tol: float = TOL, op: Optional[SublinearExpectation] = None) -> bool:
    op = op or SublinearExpectation(domain, grid, delta, M)
    node, norm = op.lipschitz(xi, psi, t, p)
    return node <= tol and norm <= tol
