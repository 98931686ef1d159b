"""Discrete path space: time grid, sign-indexed nodes, concatenation and shifts.

Paths are stored as numpy arrays of canonical-process values ``x_0 = 0, x_1, ...``
on a uniform grid.  Batches of paths are 2-D arrays of shape ``(n, k + 1)``.

Nodes of the binomial noise tree are identified by sign sequences.  A sign
sequence of length ``k`` maps to an integer index whose binary digits (most
significant first) are the signs with ``-1 -> 0`` and ``+1 -> 1``, so integer
order is the lexicographic order with ``-1`` before ``+1``.  The children of
node ``n`` are ``2n`` (down) and ``2n + 1`` (up).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "TimeGrid",
    "DiscretePath",
    "Payoff",
    "as_path",
    "concat",
    "shift_payoff",
    "sup_norm",
    "enumerate_nodes",
    "sign_index",
    "index_signs",
    "realize_path",
    "realize_tree",
]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of ``[0, T]`` into ``N`` steps."""

    T: float
    N: int

    def __post_init__(self):
        if not (isinstance(self.T, (int, float)) and math.isfinite(self.T) and self.T > 0):
            raise ValueError(f"horizon T must be a finite positive number, got {self.T!r}")
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise ValueError(f"number of steps N must be an integer >= 1, got {self.N!r}")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "N", int(self.N))

    @property
    def dt(self) -> float:
        return self.T / self.N

    def times(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.dt

    def shifted(self, k: int) -> "TimeGrid":
        """Grid of the remaining ``N - k`` steps, with the same step size."""
        if not 0 <= k < self.N:
            raise ValueError(f"shift step must lie in [0, {self.N}), got {k}")
        if k == 0:
            return self
        return _StepGrid(self.dt * (self.N - k), self.N - k, self.dt)


@dataclass(frozen=True)
class _StepGrid(TimeGrid):
    # keeps dt bit-identical to the parent grid so shifted trees reproduce parent paths
    step: float = 0.0

    @property
    def dt(self) -> float:
        return self.step

    def shifted(self, k: int) -> "TimeGrid":
        if not 0 <= k < self.N:
            raise ValueError(f"shift step must lie in [0, {self.N}), got {k}")
        if k == 0:
            return self
        return _StepGrid(self.step * (self.N - k), self.N - k, self.step)


@dataclass(frozen=True)
class DiscretePath:
    """A path prefix ``(x_0, ..., x_k)`` with ``x_0 = 0`` on ``grid``."""

    values: np.ndarray
    grid: Optional[TimeGrid] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("a path needs a non-empty 1-D sequence of values")
        if values[0] != 0.0:
            raise ValueError(f"paths start at zero, got x_0 = {values[0]}")
        if self.grid is not None and values.size > self.grid.N + 1:
            raise ValueError(f"path of length {values.size} exceeds grid with N = {self.grid.N}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def step(self) -> int:
        return self.values.size - 1

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def as_path(path) -> np.ndarray:
    if isinstance(path, DiscretePath):
        return path.values
    return np.asarray(path, dtype=float)


def concat(prefix, suffix, grid: Optional[TimeGrid] = None) -> np.ndarray:
    """Concatenate ``prefix`` (up to step k) with ``suffix`` (starting at 0).

    Both arguments may carry leading batch dimensions; they are broadcast.
    """
    p = as_path(prefix)
    s = as_path(suffix)
    if p.shape[-1] < 1 or s.shape[-1] < 1:
        raise ValueError("cannot concatenate empty paths")
    if np.any(s[..., 0] != 0.0):
        raise ValueError("suffix paths must start at zero")
    if grid is not None and p.shape[-1] + s.shape[-1] - 1 > grid.N + 1:
        raise ValueError(
            f"concatenated length {p.shape[-1] + s.shape[-1] - 1} exceeds grid with N = {grid.N}"
        )
    tail = p[..., -1:] + s[..., 1:]
    batch = np.broadcast_shapes(p.shape[:-1], s.shape[:-1])
    p = np.broadcast_to(p, batch + p.shape[-1:])
    tail = np.broadcast_to(tail, batch + tail.shape[-1:])
    return np.concatenate([p, tail], axis=-1)


def sup_norm(path, start: int = 0, stop: Optional[int] = None) -> float:
    """``max |x_j|`` over ``start <= j <= stop``."""
    x = as_path(path)
    if stop is None:
        stop = x.shape[-1] - 1
    if start > stop:
        raise ValueError(f"empty interval: start {start} > stop {stop}")
    if start < 0 or stop > x.shape[-1] - 1:
        raise ValueError(f"interval [{start}, {stop}] outside path of length {x.shape[-1]}")
    return np.max(np.abs(x[..., start : stop + 1]), axis=-1)


@dataclass(frozen=True)
class Payoff:
    """A functional of full paths.

    ``func`` maps an ``(n, L)`` array of paths to ``n`` values.  ``terminal``,
    when set, marks the payoff as ``f(x_T)`` and enables the Markov solvers.
    """

    func: Callable[[np.ndarray], np.ndarray]
    bound: float = math.inf
    modulus: Optional[Callable[[float], float]] = None
    terminal: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "custom"

    def __post_init__(self):
        if not self.bound >= 0:
            raise ValueError(f"payoff bound must be >= 0, got {self.bound}")

    @classmethod
    def from_terminal(cls, f, bound=math.inf, modulus=None, name="terminal") -> "Payoff":
        return cls(lambda paths: f(paths[:, -1]), bound=bound, modulus=modulus, terminal=f, name=name)

    def __call__(self, paths) -> np.ndarray:
        x = as_path(paths)
        if x.ndim == 1:
            return float(np.asarray(self.func(x[None, :]), dtype=float)[0])
        out = np.asarray(self.func(x), dtype=float)
        return np.broadcast_to(out, x.shape[:1]).astype(float, copy=False)

    def __add__(self, other: "Payoff") -> "Payoff":
        return Payoff(
            lambda p: self.func(p) + other.func(p), bound=self.bound + other.bound, name=f"({self.name}+{other.name})"
        )

    def __neg__(self) -> "Payoff":
        term = None if self.terminal is None else (lambda x: -self.terminal(x))
        return Payoff(lambda p: -self.func(p), self.bound, self.modulus, term, f"-{self.name}")

    def __sub__(self, other: "Payoff") -> "Payoff":
        return self + (-other)

    def scale(self, c: float) -> "Payoff":
        term = None if self.terminal is None else (lambda x: c * self.terminal(x))
        mod = None if self.modulus is None else (lambda eta: abs(c) * self.modulus(eta))
        return Payoff(lambda p: c * self.func(p), abs(c) * self.bound, mod, term, f"{c}*{self.name}")


def shift_payoff(xi: Payoff, k: int, prefix) -> Payoff:
    """The shifted payoff ``suffix -> xi(concat(prefix, suffix))``."""
    p = as_path(prefix)
    if p.ndim != 1 or p.size != k + 1:
        raise ValueError(f"prefix must have length k + 1 = {k + 1}, got shape {p.shape}")
    term = None
    if xi.terminal is not None:
        x_k = float(p[-1])
        term = lambda x, f=xi.terminal: f(x_k + x)  # noqa: E731
    return Payoff(
        lambda s: xi.func(concat(p, s)),
        bound=xi.bound,
        modulus=xi.modulus,
        terminal=term,
        name=f"{xi.name}^{k}",
    )


def enumerate_nodes(grid: TimeGrid, k: int) -> list[tuple[int, ...]]:
    """All sign sequences of length ``k`` in lexicographic order, ``-1`` first."""
    if not 0 <= k <= grid.N:
        raise ValueError(f"level must lie in [0, {grid.N}], got {k}")
    return list(itertools.product((-1, 1), repeat=k))


def sign_index(signs: Sequence[int]) -> int:
    idx = 0
    for s in signs:
        if s not in (-1, 1):
            raise ValueError(f"signs must be +1 or -1, got {s!r}")
        idx = 2 * idx + (s > 0)
    return idx


def index_signs(index: int, k: int) -> tuple[int, ...]:
    if not 0 <= index < 2**k:
        raise ValueError(f"node index {index} out of range for level {k}")
    return tuple(1 if (index >> (k - 1 - j)) & 1 else -1 for j in range(k))


def realize_path(signs: Sequence[int], policy, grid: TimeGrid) -> np.ndarray:
    """Euler path ``x_{j+1} = x_j + sign_j * sqrt(alpha_j * dt)`` driven by ``signs``."""
    if len(signs) > min(grid.N, policy.n_steps):
        raise ValueError(f"{len(signs)} signs exceed the policy/grid horizon")
    x = np.zeros(len(signs) + 1)
    node = 0
    for j, s in enumerate(signs):
        if s not in (-1, 1):
            raise ValueError(f"signs must be +1 or -1, got {s!r}")
        a = policy.alpha[j][node]
        if not (np.isfinite(a) and a >= 0):
            raise ValueError(f"policy undefined or negative at step {j}, node {node}: {a}")
        x[j + 1] = x[j] + s * math.sqrt(a * grid.dt)
        node = 2 * node + (s > 0)
    return x


def realize_tree(policy, grid: TimeGrid, levels: Optional[int] = None) -> list[np.ndarray]:
    """Paths at every sign node: entry ``k`` has shape ``(2**k, k + 1)``."""
    levels = policy.n_steps if levels is None else levels
    paths = [np.zeros((1, 1))]
    for k in range(levels):
        a = np.asarray(policy.alpha[k], dtype=float)
        if np.any(~np.isfinite(a)) or np.any(a < 0):
            raise ValueError(f"policy undefined or negative at step {k}")
        inc = np.sqrt(a * grid.dt)
        prev = paths[-1]
        # child 2n is the down move, 2n + 1 the up move
        nxt = np.repeat(prev, 2, axis=0)
        last = nxt[:, -1] + np.tile([-1.0, 1.0], prev.shape[0]) * np.repeat(inc, 2)
        paths.append(np.column_stack([nxt, last]))
    return paths
