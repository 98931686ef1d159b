"""Explicit monotone finite differences for ``-u_t - G(x, u_xx) = 0, u(T, .) = f``.

``G(x, q) = sup_{a(x) <= p <= b(x)} p q / 2``.  The backward step is

    u[n][i] = u[n+1][i] + dt * G(x_i, (u[n+1][i+1] - 2 u[n+1][i] + u[n+1][i-1]) / dx^2)

with ``dt = cfl * dx^2 / max b``; the scheme is monotone for ``cfl <= 1``.
The second difference is taken as zero at the two edge columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .domain import DomainProcess, state_domain
from .pathspace import Payoff, TimeGrid
from .tree_solver import solve

__all__ = [
    "NumericalError",
    "PdeSolution",
    "DeltaFamily",
    "Comparison",
    "g_function",
    "solve_pde",
    "delta_family",
    "compare_rep",
]


class NumericalError(ArithmeticError):
    pass


def g_function(a, b, q):
    """``(b q^+ - a q^-) / 2``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a > b):
        raise ValueError("G needs a <= b")
    q = np.asarray(q, dtype=float)
    out = 0.5 * np.where(q >= 0, b * q, a * q)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PdeSolution:
    """Stored time layers ``u[n]`` at times ``t[n]`` on the space grid ``x``."""

    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    dt: float
    dx: float
    cfl: float
    boundary: str = "linear"

    def value(self, x0: float = 0.0) -> float:
        """``u(0, x0)`` by linear interpolation."""
        return float(np.interp(x0, self.x, self.u[0]))


def _as_fn(v) -> Callable[[np.ndarray], np.ndarray]:
    if callable(v):
        return v
    return lambda x, c=float(v): np.full(np.shape(x), c)


def solve_pde(
    f: Callable[[np.ndarray], np.ndarray],
    a,
    b,
    T: float,
    dx: float = 0.02,
    cfl: float = 0.5,
    half_width: Optional[float] = None,
    x0: float = 0.0,
    delta: float = 0.0,
    dt: Optional[float] = None,
    n_save: int = 101,
) -> PdeSolution:
    """Solve backward from ``u(T) = f`` to ``t = 0``.

    ``a`` and ``b`` are numbers or functions of ``x``; ``delta`` shrinks the
    control interval to ``[a + delta, b - delta]``.  The space grid is
    symmetric about ``x0`` with half-width ``6 sqrt(max b T)`` by default.
    ``dt`` may be fixed (it must satisfy the CFL bound); otherwise it is
    ``cfl dx^2 / max b`` rounded down to divide ``T``.
    """
    if not T > 0 or not dx > 0:
        raise ValueError("need T > 0 and dx > 0")
    if not 0 < cfl <= 1:
        raise ValueError(f"cfl must lie in (0, 1], got {cfl}")
    fa, fb = _as_fn(a), _as_fn(b)
    if half_width is None:
        probe = np.linspace(x0 - 50.0, x0 + 50.0, 10001)
        half_width = 6.0 * math.sqrt(float(np.max(fb(probe))) * T)
    n = int(math.ceil(half_width / dx))
    x = x0 + dx * np.arange(-n, n + 1)
    lo = fa(x) + delta
    hi = fb(x) - delta
    if np.any(fa(x) < 0) or np.any(fa(x) > fb(x)):
        raise ValueError("need 0 <= a <= b on the grid")
    if delta < 0 or np.any(lo > hi) or (delta > 0 and np.any(hi - lo <= 0)):
        raise ValueError(f"delta = {delta} too large: need 2 delta < min(b - a)")
    b_max = float(np.max(hi))
    dt_max = dx * dx / b_max if b_max > 0 else math.inf
    if dt is None:
        K = max(1, int(math.ceil(T / (cfl * dx * dx / b_max)))) if b_max > 0 else 1
        dt = T / K
    else:
        K = int(round(T / dt))
        if K < 1 or abs(K * dt - T) > 1e-9 * T:
            raise ValueError(f"dt = {dt} does not divide T = {T}")
    if dt > dt_max * (1 + 1e-12):
        raise ValueError(f"dt = {dt} violates the CFL bound dx^2 / max b = {dt_max}")
    save = set(np.unique(np.linspace(0, K, min(n_save, K + 1)).round().astype(int)).tolist())
    u = np.asarray(f(x), dtype=float).copy()
    if not np.all(np.isfinite(u)):
        raise NumericalError("terminal data is not finite on the grid")
    layers = {K: u.copy()}
    lam = dt / (dx * dx)
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(K - 1, -1, -1):
            d2 = np.zeros_like(u)
            d2[1:-1] = u[2:] - 2.0 * u[1:-1] + u[:-2]
            u = u + 0.5 * lam * np.where(d2 >= 0, hi * d2, lo * d2)
            if step in save:
                if not np.all(np.isfinite(u)):
                    raise NumericalError(f"non-finite values at time step {step}")
                layers[step] = u.copy()
    if not np.all(np.isfinite(u)):
        raise NumericalError("non-finite values in the solution")
    idx = sorted(layers)
    return PdeSolution(np.array(idx) * dt, x, np.stack([layers[i] for i in idx]), dt, dx, dt * b_max / (dx * dx))


@dataclass(frozen=True)
class DeltaFamily:
    deltas: np.ndarray
    values: np.ndarray
    monotone: bool
    gaps_shrinking: bool

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.values)


def _family_flags(values: np.ndarray, tol: float = 0.0) -> tuple[bool, bool]:
    gaps = np.diff(values)
    return bool(np.all(gaps >= -tol)), bool(np.all(np.diff(gaps) < 0)) if gaps.size > 1 else True


def delta_family(
    f, a, b, T: float, deltas: Sequence[float], x0: float = 0.0, dx: float = 0.02, cfl: float = 0.5, half_width=None
) -> DeltaFamily:
    """``u^delta(0, x0)`` for decreasing ``delta``, all on one time step so the comparison is exact."""
    ds = np.sort(np.asarray(deltas, dtype=float))[::-1]
    fa, fb = _as_fn(a), _as_fn(b)
    probe = np.linspace(x0 - 50.0, x0 + 50.0, 10001)
    if np.any(2 * ds >= np.min(fb(probe) - fa(probe))):
        raise ValueError("every delta needs 2 delta < min(b - a)")
    b_max = float(np.max(fb(probe)))
    dt = T / max(1, int(math.ceil(T / (cfl * dx * dx / b_max))))
    vals = np.array(
        [solve_pde(f, a, b, T, dx, cfl, half_width, x0, d, dt=dt, n_save=2).value(x0) for d in ds]
    )
    mono, shrink = _family_flags(vals)
    return DeltaFamily(ds, vals, mono, shrink)


@dataclass(frozen=True)
class Comparison:
    tree_value: float
    pde_value: float
    N: int
    dx: float
    method: str

    @property
    def gap(self) -> float:
        return abs(self.tree_value - self.pde_value)


def compare_rep(
    f,
    a,
    b,
    T: float,
    N: int,
    dx: float,
    M: int = 9,
    delta: float = 0.0,
    cfl: float = 0.5,
    method: str = "auto",
    lip_a: float = 0.0,
    lip_b: float = 0.0,
    domain: Optional[DomainProcess] = None,
) -> Comparison:
    """Gap between ``u(0, 0)`` and the tree root value for ``xi = f(x_T)``.

    ``domain`` may be passed instead of ``a``/``b`` for the tree side; it must
    be Markov.
    """
    if domain is None:
        fa, fb = _as_fn(a), _as_fn(b)
        domain = state_domain(fa, fb, lip_a, lip_b)
    if not domain.markov:
        raise ValueError("the PDE comparison needs a constant or state-dependent domain")
    if a is None or b is None:
        a = lambda x: domain.state_bounds(0, x)[0]  # noqa: E731
        b = lambda x: domain.state_bounds(0, x)[1]  # noqa: E731
    field, _ = solve(Payoff.from_terminal(f), domain, TimeGrid(T, N), delta, M, method=method)
    u = solve_pde(f, a, b, T, dx, cfl, delta=delta, n_save=2).value(0.0)
    return Comparison(field.root, u, N, dx, field.method)
