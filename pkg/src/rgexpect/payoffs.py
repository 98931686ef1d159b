"""Stock payoff functionals used by the CLI and the tests."""

from __future__ import annotations

import numpy as np

from .pathspace import Payoff

__all__ = [
    "constant",
    "terminal_value",
    "terminal_square",
    "terminal_abs",
    "terminal_cos",
    "running_max",
    "asian_mean",
    "custom_table",
    "stopped",
    "PAYOFFS",
]


def _lipschitz(c):
    return lambda eta: c * eta


def constant(c: float) -> Payoff:
    c = float(c)
    return Payoff.from_terminal(lambda x: np.full(np.shape(x), c), bound=abs(c), modulus=lambda eta: 0.0, name="constant")


def terminal_value(scale: float = 1.0) -> Payoff:
    return Payoff.from_terminal(lambda x: scale * x, modulus=_lipschitz(abs(scale)), name="terminal_value")


def terminal_square(scale: float = 1.0) -> Payoff:
    # not uniformly continuous on all of path space; fine on the bounded tree
    return Payoff.from_terminal(lambda x: scale * x * x, name="terminal_square")


def terminal_abs(scale: float = 1.0) -> Payoff:
    return Payoff.from_terminal(lambda x: scale * np.abs(x), modulus=_lipschitz(abs(scale)), name="terminal_abs")


def terminal_cos(freq: float = 1.0, scale: float = 1.0) -> Payoff:
    return Payoff.from_terminal(
        lambda x: scale * np.cos(freq * x),
        bound=abs(scale),
        modulus=_lipschitz(abs(scale * freq)),
        name="terminal_cos",
    )


def running_max(scale: float = 1.0) -> Payoff:
    return Payoff(lambda p: scale * np.max(p, axis=1), modulus=_lipschitz(abs(scale)), name="running_max")


def asian_mean(scale: float = 1.0) -> Payoff:
    """Arithmetic average of the path over the grid points after time 0."""

    def f(p):
        if p.shape[1] == 1:
            return np.zeros(p.shape[0])
        return scale * np.mean(p[:, 1:], axis=1)

    return Payoff(f, modulus=_lipschitz(abs(scale)), name="asian_mean")


def custom_table(xs, ys) -> Payoff:
    """Piecewise-linear terminal payoff through the breakpoints ``(xs, ys)``, flat outside."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
        raise ValueError("custom_table needs matching 1-D breakpoint lists of length >= 2")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("custom_table breakpoints must be strictly increasing")
    slope = float(np.max(np.abs(np.diff(ys) / np.diff(xs))))
    return Payoff.from_terminal(
        lambda x: np.interp(x, xs, ys),
        bound=float(np.max(np.abs(ys))),
        modulus=_lipschitz(slope),
        name="custom_table",
    )


def stopped(xi: Payoff, t: int) -> Payoff:
    """``xi`` evaluated on the path frozen after step ``t``; depends on the first ``t`` increments only."""

    def f(p):
        q = p.copy()
        q[:, t + 1 :] = q[:, t : t + 1]
        return xi.func(q)

    return Payoff(f, bound=xi.bound, modulus=xi.modulus, name=f"{xi.name}@{t}")


PAYOFFS = {
    "terminal_square": terminal_square,
    "terminal_abs": terminal_abs,
    "terminal_cos": terminal_cos,
    "running_max": running_max,
    "asian_mean": asian_mean,
    "custom_table": custom_table,
}
